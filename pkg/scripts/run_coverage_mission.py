#!/usr/bin/env python3
"""Run the 20-agent overhead sweep over 100 field artifacts and plot progress."""

import argparse

from swarmc2 import scenarios


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--max-ticks", type=int, default=3000)
    args = ap.parse_args()

    engine = scenarios.coverage_mission_engine(seed=args.seed)
    total = len(engine.scenario.artifacts)
    step = 100
    for tick in range(step, args.max_ticks + 1, step):
        engine.run(step)
        found = engine.detection_count()
        bar = "#" * (40 * found // total)
        print(f"t={tick / 10:6.1f}s  {found:3d}/{total} |{bar:<40}|")
        if all(t.status in ("completed", "failed")
               for t in engine.tactics.instances.values()):
            break
    print(f"scan tactics: "
          f"{sorted(t.status for t in engine.tactics.instances.values())}")
    print(f"terminal hash: {engine.terminal_hash()}")


if __name__ == "__main__":
    main()

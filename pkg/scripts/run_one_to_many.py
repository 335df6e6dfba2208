#!/usr/bin/env python3
"""Run the scripted 174-agent fan-out mission at max speed and report."""

import argparse
import time

from swarmc2 import scenarios


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--ticks", type=int, default=300)
    args = ap.parse_args()

    engine = scenarios.one_to_many_engine(seed=args.seed)
    t0 = time.perf_counter()
    engine.run(args.ticks)
    wall = time.perf_counter() - t0

    statuses = {tid: t.status for tid, t in engine.tactics.instances.items()}
    print(f"{args.ticks} ticks ({args.ticks / 10:.0f} sim-s) in {wall:.2f}s "
          f"({args.ticks / wall:.1f} ticks/s)")
    print(f"distinct agents tasked: {len(engine.assigned_agents)} / "
          f"{len(engine.runtimes)}")
    for tid, status in sorted(statuses.items()):
        print(f"  {tid}: {status}")
    print(f"terminal hash: {engine.terminal_hash()}")


if __name__ == "__main__":
    main()

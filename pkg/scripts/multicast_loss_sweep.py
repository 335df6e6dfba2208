#!/usr/bin/env python3
"""Sweep per-link loss and measure reliable-multicast delivery rates.

Builds a 1 sender + N receiver mesh, pushes a burst of reliable frames,
and reports the fraction delivered once the repair protocol settles.
"""

import argparse

from swarmc2.meshnet import MeshNet
from swarmc2.multicast import Transport

GROUP = 1


def run_once(n_receivers: int, loss: float, frames: int, seed: int) -> float:
    mesh = MeshNet(loss_prob=loss, seed=seed)
    mesh.add_node("tx", (0.0, 0.0), range_m=1000.0)
    sender = Transport("tx", 0, mesh, seed=seed)
    sender.join(GROUP, reliable=True)
    receivers = []
    for i in range(n_receivers):
        nid = f"rx{i}"
        mesh.add_node(nid, (float(i % 10) * 10, float(i // 10) * 10),
                      range_m=1000.0)
        tr = Transport(nid, i + 1, mesh, seed=seed)
        tr.join(GROUP, reliable=True)
        receivers.append(tr)

    got = [0] * n_receivers
    transports = [sender] + receivers
    now, sent = 0.0, 0
    while now < frames / 10 + 60.0:  # burst at 10 frames/s, then settle
        now = round(now + 0.1, 6)
        for d in mesh.poll(now):
            tr = transports[0] if d.node_id == "tx" else \
                receivers[int(d.node_id[2:])]
            for _, _, _frame in tr.on_delivery(d, now):
                if tr is not sender:
                    got[int(tr.node_id[2:])] += 1
        for tr in transports:
            tr.tick(now)
        if sent < frames:
            sender.send(GROUP, sent.to_bytes(4, "big"), now)
            sent += 1
    return sum(got) / (n_receivers * frames)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--receivers", type=int, default=20)
    ap.add_argument("--frames", type=int, default=300)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    print(f"{args.receivers} receivers, {args.frames} reliable frames")
    for loss in (0.0, 0.05, 0.1, 0.2, 0.3, 0.4):
        rate = run_once(args.receivers, loss, args.frames, args.seed)
        print(f"  loss {loss:4.0%}  delivered {rate:8.4%}")


if __name__ == "__main__":
    main()

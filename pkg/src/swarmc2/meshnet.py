"""Mobile ad hoc mesh simulator: disk connectivity, lossy hops, flood multicast.

Multicast is a controlled flood with duplicate suppression: every node relays a
given message id at most once, so an injection generates at most N relays. Loss
is i.i.d. Bernoulli per hop, latency is fixed per hop, and everything is driven
by a seeded generator so identical seeds and injection schedules replay exactly.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

DEFAULT_RANGE_M = 75.0
DEFAULT_HOP_LATENCY_S = 0.01


@dataclass
class RadioNode:
    node_id: str
    position: tuple[float, float, float]
    range_m: float = DEFAULT_RANGE_M
    alive: bool = True


@dataclass
class Delivery:
    time: float
    node_id: str
    group: int
    payload: bytes
    origin: str
    hops: int


class MeshNet:
    def __init__(self, loss_prob: float = 0.0, hop_latency_s: float = DEFAULT_HOP_LATENCY_S,
                 seed: int = 0):
        self.loss_prob = float(loss_prob)
        self.hop_latency_s = float(hop_latency_s)
        self.rng = np.random.default_rng(seed)
        self.nodes: dict[str, RadioNode] = {}
        self.groups: dict[int, set[str]] = {}
        self._order: list[str] = []       # index -> node id, insertion order
        self._index: dict[str, int] = {}
        self._adj: np.ndarray | None = None
        self._dirty = True
        self._pending: list[tuple[float, int, Delivery]] = []
        self._seq = itertools.count()
        self.relay_counts: list[int] = []  # per injection, for flood-termination checks

    # --- topology ---

    def add_node(self, node_id: str, position, range_m: float = DEFAULT_RANGE_M) -> RadioNode:
        node = RadioNode(node_id, tuple(position), range_m)
        self.nodes[node_id] = node
        self._index[node_id] = len(self._order)
        self._order.append(node_id)
        self._dirty = True
        return node

    def set_position(self, node_id: str, position) -> None:
        self.nodes[node_id].position = tuple(position)
        self._dirty = True

    def set_alive(self, node_id: str, alive: bool) -> None:
        self.nodes[node_id].alive = alive
        self._dirty = True

    def join(self, group: int, node_id: str) -> None:
        self.groups.setdefault(group, set()).add(node_id)

    def _adjacency(self) -> np.ndarray:
        if not self._dirty and self._adj is not None:
            return self._adj
        n = len(self._order)
        pos = np.array([self.nodes[i].position for i in self._order], dtype=float)
        rng_m = np.array([self.nodes[i].range_m for i in self._order])
        alive = np.array([self.nodes[i].alive for i in self._order], dtype=bool)
        if n == 0:
            self._adj = np.zeros((0, 0), dtype=bool)
        else:
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.sqrt((diff * diff).sum(axis=2))
            reach = np.minimum(rng_m[:, None], rng_m[None, :])
            adj = (dist <= reach) & alive[:, None] & alive[None, :]
            np.fill_diagonal(adj, False)
            self._adj = adj
        self._dirty = False
        return self._adj

    def connectivity(self) -> set[tuple[str, str]]:
        """Undirected edge set over alive nodes."""
        adj = self._adjacency()
        edges = set()
        rows, cols = np.nonzero(adj)
        for r, c in zip(rows, cols):
            if r < c:
                edges.add((self._order[r], self._order[c]))
        return edges

    def partition_report(self) -> list[set[str]]:
        """Connected components of the connectivity graph (alive nodes only)."""
        adj = self._adjacency()
        alive = [i for i, nid in enumerate(self._order) if self.nodes[nid].alive]
        seen: set[int] = set()
        components = []
        for start in alive:
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                u = stack.pop()
                for v in np.nonzero(adj[u])[0]:
                    if v not in comp:
                        comp.add(int(v))
                        stack.append(int(v))
            seen |= comp
            components.append({self._order[i] for i in comp})
        return components

    # --- flood multicast ---

    def inject(self, origin: str, group: int, payload: bytes, now: float) -> None:
        node = self.nodes[origin]
        if not node.alive:
            return
        adj = self._adjacency()
        n = len(self._order)
        oi = self._index[origin]
        received = np.zeros(n, dtype=bool)
        hop_of = np.full(n, -1, dtype=int)
        received[oi] = True
        hop_of[oi] = 0
        frontier = [oi]
        hop = 0
        while frontier:
            hop += 1
            new: list[int] = []
            if self.loss_prob > 0.0:
                for f in sorted(frontier):
                    draws = self.rng.random(n)
                    ok = adj[f] & (draws >= self.loss_prob)
                    fresh = np.nonzero(ok & ~received)[0]
                    for idx in fresh:
                        received[idx] = True
                        hop_of[idx] = hop
                        new.append(int(idx))
            else:
                # lossless: whole-frontier reachability in one matrix slice
                ok = adj[sorted(frontier)].any(axis=0)
                fresh = np.nonzero(ok & ~received)[0]
                received[fresh] = True
                hop_of[fresh] = hop
                new = [int(i) for i in fresh]
            frontier = new
        self.relay_counts.append(int(received.sum()))
        members = self.groups.get(group, set())
        for idx in np.nonzero(received)[0]:
            nid = self._order[idx]
            if nid in members:
                d = Delivery(now + hop_of[idx] * self.hop_latency_s, nid, group,
                             payload, origin, int(hop_of[idx]))
                heapq.heappush(self._pending, (d.time, next(self._seq), d))

    def poll(self, now: float) -> list[Delivery]:
        """Deliveries due at or before ``now``, in time then injection order."""
        out = []
        while self._pending and self._pending[0][0] <= now:
            out.append(heapq.heappop(self._pending)[2])
        return out

"""Temporal coverage: timestamped voxel observations and staleness queries.

Observation footprint is a ground-plane disk around the agent with optional
line-of-sight occlusion against building footprints. Staleness fades linearly
from fresh (0) to fully stale (1) over 20 minutes.
"""

from __future__ import annotations

import math

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon
from shapely.prepared import prep

from .messages import GridOverlay

FADE_S = 1200.0  # full magenta after twenty minutes
NEVER_SEEN = None
NEVER_SEEN_SENTINEL = -1.0


class VoxelCoverageTable:
    def __init__(self, voxel_size: float = 1.0, occluders: list[list[tuple[float, float]]] | None = None):
        self.voxel_size = voxel_size
        self.entries: dict[tuple[int, int], float] = {}
        self._occluders = [prep(Polygon(p)) for p in occluders or [] if len(p) >= 3]
        self._raw_occluders = [Polygon(p) for p in occluders or [] if len(p) >= 3]
        self._occluder_bounds = [p.bounds for p in self._raw_occluders]

    def voxel_of(self, pos: tuple[float, float]) -> tuple[int, int]:
        return (
            int(math.floor(pos[0] / self.voxel_size)),
            int(math.floor(pos[1] / self.voxel_size)),
        )

    def center_of(self, voxel: tuple[int, int]) -> tuple[float, float]:
        return (
            (voxel[0] + 0.5) * self.voxel_size,
            (voxel[1] + 0.5) * self.voxel_size,
        )

    def _line_of_sight(self, a: tuple[float, float], b: tuple[float, float]) -> bool:
        if not self._occluders:
            return True
        if a == b:
            return True
        seg = LineString([a, b])
        return not any(p.intersects(seg) for p in self._occluders)

    def stamp(self, position: tuple[float, float], radius: float, now: float) -> int:
        """Stamp every visible voxel whose center lies within the disk.
        Timestamps only move forward. Returns the number of voxels touched."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        vs = self.voxel_size
        r_cells = int(math.ceil(radius / vs))
        cx, cy = self.voxel_of(position)
        ix = np.arange(cx - r_cells, cx + r_cells + 1)
        iy = np.arange(cy - r_cells, cy + r_cells + 1)
        gx, gy = np.meshgrid(ix, iy)
        dx = (gx + 0.5) * vs - position[0]
        dy = (gy + 0.5) * vs - position[1]
        inside = dx * dx + dy * dy <= radius * radius
        vxs = gx[inside]
        vys = gy[inside]
        if self._occluders and len(vxs):
            centers = np.column_stack([(vxs + 0.5) * vs, (vys + 0.5) * vs])
            blocked = self._blocked_mask(np.asarray(position, dtype=float), centers)
            vxs = vxs[~blocked]
            vys = vys[~blocked]
        touched = 0
        entries = self.entries
        for vx, vy in zip(vxs.tolist(), vys.tolist()):
            prev = entries.get((vx, vy))
            if prev is None or now > prev:
                entries[(vx, vy)] = now
            touched += 1
        return touched

    def _blocked_mask(self, origin: np.ndarray, centers: np.ndarray) -> np.ndarray:
        """Occlusion test for many sight lines at once: bounding-box prefilter,
        then batched segment/polygon intersection on the survivors."""
        n = len(centers)
        lo = np.minimum(centers, origin)
        hi = np.maximum(centers, origin)
        near = np.zeros(n, dtype=bool)
        for bx0, by0, bx1, by1 in self._occluder_bounds:
            near |= (hi[:, 0] >= bx0) & (lo[:, 0] <= bx1) \
                & (hi[:, 1] >= by0) & (lo[:, 1] <= by1)
        blocked = np.zeros(n, dtype=bool)
        idx = np.nonzero(near)[0]
        if len(idx):
            starts = np.broadcast_to(origin, (len(idx), 2))
            segs = shapely.linestrings(
                np.stack([starts, centers[idx]], axis=1))
            for poly in self._raw_occluders:
                blocked[idx] |= shapely.intersects(poly, segs)
        return blocked

    def staleness(self, voxel: tuple[int, int], now: float) -> float | None:
        """None if never seen, else fade fraction in [0, 1]."""
        last = self.entries.get(voxel)
        if last is None:
            return NEVER_SEEN
        return min(1.0, max(0.0, (now - last) / FADE_S))

    def coverage_fraction(self, region: list[tuple[float, float]], now: float,
                          max_age: float) -> float:
        poly = Polygon(region)
        prepared = prep(poly)
        minx, miny, maxx, maxy = poly.bounds
        vs = self.voxel_size
        total = 0
        covered = 0
        from shapely.geometry import Point

        for iy in range(int(math.floor(miny / vs)), int(math.ceil(maxy / vs)) + 1):
            for ix in range(int(math.floor(minx / vs)), int(math.ceil(maxx / vs)) + 1):
                if not prepared.contains(Point(self.center_of((ix, iy)))):
                    continue
                total += 1
                last = self.entries.get((ix, iy))
                if last is not None and now - last <= max_age:
                    covered += 1
        return covered / total if total else 0.0

    def to_overlay(self, bounds: tuple[float, float, float, float], now: float) -> GridOverlay:
        """Snapshot for the console: values are 1-f, never-seen encoded as -1."""
        x0, y0, x1, y1 = bounds
        vs = self.voxel_size
        ix0, iy0 = int(math.floor(x0 / vs)), int(math.floor(y0 / vs))
        ix1, iy1 = int(math.ceil(x1 / vs)), int(math.ceil(y1 / vs))
        width, height = ix1 - ix0, iy1 - iy0
        values = []
        for iy in range(iy0, iy1):
            for ix in range(ix0, ix1):
                f = self.staleness((ix, iy), now)
                values.append(NEVER_SEEN_SENTINEL if f is None else 1.0 - f)
        return GridOverlay("coverage", (ix0 * vs, iy0 * vs), vs, width, height, values)

    def __len__(self) -> int:
        return len(self.entries)

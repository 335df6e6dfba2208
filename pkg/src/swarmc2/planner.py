"""Jump point search over an 8-connected occupancy grid with altitude layers.

Diagonal moves are allowed only when both adjacent cardinals are free (no
corner cutting), so a path segment between cell centers never clips a blocked
cell. Layers: ground, low-air (blocked by buildings taller than the band
floor), high-air (blocked only by no-go zones that declare it).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Point, Polygon

LAYERS = ("ground", "low_air", "high_air")
LOW_AIR_CEILING_M = 10.0
HIGH_AIR_CEILING_M = 30.0
SNAP_RADIUS_CELLS = 3
SQRT2 = math.sqrt(2.0)


class PlanningError(Exception):
    pass


@dataclass
class Building:
    footprint: list[tuple[float, float]]
    height: float
    building_id: str = ""
    known_apriori: bool = True


@dataclass
class NoGoZone:
    polygon: list[tuple[float, float]]
    layers: tuple[str, ...] = LAYERS


@dataclass
class PlannedPath:
    waypoints: list[tuple[float, float]]  # world coords, smoothed
    cost_m: float                         # octile grid cost in meters
    cells: list[tuple[int, int]] = field(default_factory=list)  # pre-smoothing


class OccupancyGrid:
    def __init__(self, origin: tuple[float, float], cell_size: float,
                 width: int, height: int):
        self.origin = origin
        self.cell_size = cell_size
        self.width = width
        self.height = height
        self.blocked = {layer: np.zeros((height, width), dtype=bool) for layer in LAYERS}

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def cell_of(self, pos: tuple[float, float]) -> tuple[int, int]:
        return (
            int((pos[0] - self.origin[0]) // self.cell_size),
            int((pos[1] - self.origin[1]) // self.cell_size),
        )

    def center_of(self, cell: tuple[int, int]) -> tuple[float, float]:
        return (
            self.origin[0] + (cell[0] + 0.5) * self.cell_size,
            self.origin[1] + (cell[1] + 0.5) * self.cell_size,
        )

    def is_free(self, layer: str, ix: int, iy: int) -> bool:
        return self.in_bounds(ix, iy) and not self.blocked[layer][iy, ix]

    def layer_for(self, altitude_m: float, ground: bool) -> str:
        if ground:
            return "ground"
        return "low_air" if altitude_m <= LOW_AIR_CEILING_M else "high_air"


def rasterize(buildings: list[Building], no_go_zones: list[NoGoZone],
              cell_size: float, bounds: tuple[float, float, float, float] | None = None,
              ) -> OccupancyGrid:
    """Block every cell whose center lies inside an obstacle footprint, with a
    conservative 1-cell inflation ring around buildings."""
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    polys = [(Polygon(b.footprint), b) for b in buildings if len(b.footprint) >= 3]
    zones = [(Polygon(z.polygon), z) for z in no_go_zones if len(z.polygon) >= 3]
    if bounds is None:
        geoms = [p for p, _ in polys] + [p for p, _ in zones]
        if not geoms:
            return OccupancyGrid((0.0, 0.0), cell_size, 1, 1)
        xs = [g.bounds[i] for g in geoms for i in (0, 2)]
        ys = [g.bounds[i] for g in geoms for i in (1, 3)]
        pad = 5 * cell_size
        bounds = (min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad)
    x0, y0, x1, y1 = bounds
    width = max(1, int(math.ceil((x1 - x0) / cell_size)))
    height = max(1, int(math.ceil((y1 - y0) / cell_size)))
    grid = OccupancyGrid((x0, y0), cell_size, width, height)

    cx = x0 + (np.arange(width) + 0.5) * cell_size
    cy = y0 + (np.arange(height) + 0.5) * cell_size
    xx, yy = np.meshgrid(cx, cy)
    centers = np.column_stack([xx.ravel(), yy.ravel()])

    def mask_of(poly: Polygon) -> np.ndarray:
        bx0, by0, bx1, by1 = poly.bounds
        rough = (
            (centers[:, 0] >= bx0) & (centers[:, 0] <= bx1)
            & (centers[:, 1] >= by0) & (centers[:, 1] <= by1)
        )
        mask = np.zeros(len(centers), dtype=bool)
        idx = np.nonzero(rough)[0]
        for i in idx:
            if poly.contains(Point(centers[i])):
                mask[i] = True
        return mask.reshape(height, width)

    from scipy.ndimage import binary_dilation

    for poly, b in polys:
        m = mask_of(poly)
        inflated = binary_dilation(m, structure=np.ones((3, 3), dtype=bool))
        grid.blocked["ground"] |= inflated
        if b.height > LOW_AIR_CEILING_M:
            grid.blocked["low_air"] |= inflated
        if b.height > HIGH_AIR_CEILING_M:
            grid.blocked["high_air"] |= inflated
    for poly, z in zones:
        m = mask_of(poly)
        for layer in z.layers:
            grid.blocked[layer] |= m
    return grid


# --- search ---

def snap_to_free(grid: OccupancyGrid, layer: str, cell: tuple[int, int]) -> tuple[int, int]:
    """Nearest free cell within the snap radius; ties broken row-major."""
    if grid.is_free(layer, *cell):
        return cell
    candidates = []
    for dy in range(-SNAP_RADIUS_CELLS, SNAP_RADIUS_CELLS + 1):
        for dx in range(-SNAP_RADIUS_CELLS, SNAP_RADIUS_CELLS + 1):
            ix, iy = cell[0] + dx, cell[1] + dy
            if grid.is_free(layer, ix, iy):
                candidates.append((math.hypot(dx, dy), iy, ix))
    if not candidates:
        raise PlanningError(f"no free cell within {SNAP_RADIUS_CELLS} cells of {cell}")
    _, iy, ix = min(candidates)
    return (ix, iy)


def _octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)


def jps_plan(grid: OccupancyGrid, layer: str, start_pos, goal_pos) -> PlannedPath | None:
    """Octile-optimal path between world positions, or None when unreachable."""
    start = snap_to_free(grid, layer, grid.cell_of(start_pos))
    goal = snap_to_free(grid, layer, grid.cell_of(goal_pos))
    if start == goal:
        return PlannedPath([grid.center_of(start)], 0.0, [start])
    cells, cost = _jps_search(grid.blocked[layer], start, goal)
    if cells is None:
        return None
    smoothed = smooth_path(grid, layer, cells)
    return PlannedPath([grid.center_of(c) for c in smoothed],
                       cost * grid.cell_size, cells)


def _jps_search(blocked: np.ndarray, start: tuple[int, int], goal: tuple[int, int]):
    height, width = blocked.shape

    def walkable(x, y):
        return 0 <= x < width and 0 <= y < height and not blocked[y, x]

    gx, gy = goal

    def jump(x, y, px, py):
        if not walkable(x, y):
            return None
        if (x, y) == (gx, gy):
            return (x, y)
        dx, dy = x - px, y - py
        if dx != 0 and dy != 0:
            if jump(x + dx, y, x, y) is not None or jump(x, y + dy, x, y) is not None:
                return (x, y)
        elif dx != 0:
            if (walkable(x, y - 1) and not walkable(x - dx, y - 1)) or \
               (walkable(x, y + 1) and not walkable(x - dx, y + 1)):
                return (x, y)
        else:
            if (walkable(x - 1, y) and not walkable(x - 1, y - dy)) or \
               (walkable(x + 1, y) and not walkable(x + 1, y - dy)):
                return (x, y)
        if walkable(x + dx, y) and walkable(x, y + dy):
            return jump(x + dx, y + dy, x, y)
        return None

    def neighbors(x, y, parent):
        out = []
        if parent is None:
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    if dx == 0 and dy == 0:
                        continue
                    if dx != 0 and dy != 0:
                        if walkable(x + dx, y) and walkable(x, y + dy) and walkable(x + dx, y + dy):
                            out.append((x + dx, y + dy))
                    elif walkable(x + dx, y + dy):
                        out.append((x + dx, y + dy))
            return out
        px, py = parent
        dx = (x - px) // max(abs(x - px), 1)
        dy = (y - py) // max(abs(y - py), 1)
        if dx != 0 and dy != 0:
            w_y = walkable(x, y + dy)
            w_x = walkable(x + dx, y)
            if w_y:
                out.append((x, y + dy))
            if w_x:
                out.append((x + dx, y))
            if w_x and w_y and walkable(x + dx, y + dy):
                out.append((x + dx, y + dy))
        elif dx != 0:
            nxt = walkable(x + dx, y)
            top = walkable(x, y + 1)
            bot = walkable(x, y - 1)
            if nxt:
                out.append((x + dx, y))
                if top and walkable(x + dx, y + 1):
                    out.append((x + dx, y + 1))
                if bot and walkable(x + dx, y - 1):
                    out.append((x + dx, y - 1))
            if top:
                out.append((x, y + 1))
            if bot:
                out.append((x, y - 1))
        else:
            nxt = walkable(x, y + dy)
            right = walkable(x + 1, y)
            left = walkable(x - 1, y)
            if nxt:
                out.append((x, y + dy))
                if right and walkable(x + 1, y + dy):
                    out.append((x + 1, y + dy))
                if left and walkable(x - 1, y + dy):
                    out.append((x - 1, y + dy))
            if right:
                out.append((x + 1, y))
            if left:
                out.append((x - 1, y))
        return out

    g = {start: 0.0}
    parent_of: dict[tuple[int, int], tuple[int, int] | None] = {start: None}
    open_heap = [(_octile(start, goal), 0.0, start)]
    closed: set[tuple[int, int]] = set()
    while open_heap:
        _, gc, node = heapq.heappop(open_heap)
        if node in closed:
            continue
        if node == goal:
            cells = _expand_jump_chain(parent_of, node)
            return cells, gc
        closed.add(node)
        x, y = node
        for nx, ny in neighbors(x, y, parent_of[node]):
            jp = jump(nx, ny, x, y)
            if jp is None or jp in closed:
                continue
            ng = gc + _octile(node, jp)
            if jp not in g or ng < g[jp] - 1e-12:
                g[jp] = ng
                parent_of[jp] = node
                heapq.heappush(open_heap, (ng + _octile(jp, goal), ng, jp))
    return None, math.inf


def _expand_jump_chain(parent_of, node):
    """Fill in the intermediate cells between jump points."""
    points = []
    while node is not None:
        points.append(node)
        node = parent_of[node]
    points.reverse()
    cells = [points[0]]
    for a, b in zip(points, points[1:]):
        x, y = a
        dx = (b[0] > x) - (b[0] < x)
        dy = (b[1] > y) - (b[1] < y)
        while (x, y) != b:
            x += dx
            y += dy
            cells.append((x, y))
    return cells


def traversed_cells(a: tuple[float, float], b: tuple[float, float],
                    grid: OccupancyGrid) -> list[tuple[int, int]]:
    """Supercover of the segment a-b in cell coordinates (conservative: corner
    touches include both adjacent cells)."""
    cs = grid.cell_size
    ax = (a[0] - grid.origin[0]) / cs
    ay = (a[1] - grid.origin[1]) / cs
    bx = (b[0] - grid.origin[0]) / cs
    by = (b[1] - grid.origin[1]) / cs
    steps = max(1, int(math.ceil(max(abs(bx - ax), abs(by - ay)) * 8)))
    cells: set[tuple[int, int]] = set()
    eps = 1e-9
    for i in range(steps + 1):
        t = i / steps
        x = ax + (bx - ax) * t
        y = ay + (by - ay) * t
        for ox in (-eps, eps):
            for oy in (-eps, eps):
                cells.add((int(math.floor(x + ox)), int(math.floor(y + oy))))
    return sorted(cells)


def segment_clear(grid: OccupancyGrid, layer: str, a, b) -> bool:
    return all(grid.is_free(layer, ix, iy) for ix, iy in traversed_cells(a, b, grid))


def smooth_path(grid: OccupancyGrid, layer: str,
                cells: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Greedy string pulling: from each kept cell, skip to the furthest cell
    with a clear straight segment. Never lengthens the path."""
    if len(cells) <= 2:
        return cells
    out = [cells[0]]
    i = 0
    while i < len(cells) - 1:
        j = len(cells) - 1
        while j > i + 1:
            if segment_clear(grid, layer, grid.center_of(cells[i]), grid.center_of(cells[j])):
                break
            j -= 1
        out.append(cells[j])
        i = j
    return out

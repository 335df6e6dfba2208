"""Operator-drawn tactical control measures and the geometry utilities behind them.

All context distances are 2D (ground-plane projection); altitude is a tactic
parameter, never a context discriminator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from shapely.geometry import LineString, MultiPolygon, Polygon
from shapely.validation import make_valid

MIN_ZONE_AREA_M2 = 1.0
DP_TOLERANCE_M = 0.5


class DegenerateSketch(ValueError):
    pass


@dataclass
class SketchPoint:
    sketch_id: str
    type_name: str  # "poi", "recovery_point", "breach_point", ...
    position: tuple[float, float, float]
    ground_locked: bool = True


@dataclass
class SketchPolyline:
    sketch_id: str
    type_name: str  # "route", "explore_area", "deploy_zone", "no_go_zone", "sector", ...
    vertices: list[tuple[float, float]]
    closed: bool = False


@dataclass
class SelectionGroup:
    members: set[str] = field(default_factory=set)


@dataclass
class ParamType:
    type_name: str
    kind: str  # "point" | "polyline"
    type_id: int
    command: str
    render: dict = field(default_factory=dict)


class ParamTypeRegistry:
    def __init__(self):
        self.entries: dict[str, ParamType] = {}

    def register(self, pt: ParamType) -> None:
        if pt.kind not in ("point", "polyline"):
            raise ValueError(f"bad kind {pt.kind!r}")
        self.entries[pt.type_name] = pt

    def __contains__(self, name: str) -> bool:
        return name in self.entries


# --- basic geometry ---

def point_in_polygon(p: tuple[float, float], polygon: list[tuple[float, float]]) -> bool:
    """Even-odd ray casting; robust enough for hand-drawn strokes."""
    x, y = p
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xint:
                inside = not inside
    return inside


def segment_distance(p: tuple[float, float], a: tuple[float, float],
                     b: tuple[float, float]) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def arc_length(vertices: list[tuple[float, float]], closed: bool = False) -> float:
    pts = list(vertices) + ([vertices[0]] if closed else [])
    return sum(math.dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1))


def point_at_arc_length(vertices: list[tuple[float, float]], s: float,
                        closed: bool = False) -> tuple[float, float]:
    pts = list(vertices) + ([vertices[0]] if closed else [])
    remaining = s
    for i in range(len(pts) - 1):
        seg = math.dist(pts[i], pts[i + 1])
        if remaining <= seg or i == len(pts) - 2:
            if seg == 0.0:
                return pts[i]
            t = min(1.0, remaining / seg)
            return (
                pts[i][0] + t * (pts[i + 1][0] - pts[i][0]),
                pts[i][1] + t * (pts[i + 1][1] - pts[i][1]),
            )
        remaining -= seg
    return pts[-1]


def resample_equidistant(vertices: list[tuple[float, float]], count: int,
                         closed: bool = False) -> list[tuple[float, float]]:
    """``count`` stations spread evenly by arc length.

    On a closed loop stations divide the perimeter into ``count`` equal arcs
    starting half an arc in (so 4 stations on a square sit at side midpoints);
    on an open path they sit at the midpoints of ``count`` equal arcs.
    """
    total = arc_length(vertices, closed)
    return [
        point_at_arc_length(vertices, total * (i + 0.5) / count, closed)
        for i in range(count)
    ]


# --- operations ---

def lasso_update(group: SelectionGroup, stroke: list[tuple[float, float]],
                 agents: dict[str, tuple[float, float]]) -> SelectionGroup:
    """Symmetric-difference selection: lassoing selected agents deselects them."""
    if len(stroke) < 3:
        return SelectionGroup(set(group.members))
    inside = {aid for aid, pos in agents.items() if point_in_polygon(pos, stroke)}
    return SelectionGroup(group.members ^ inside)


def simplify(vertices: list[tuple[float, float]], min_distance: float) -> list[tuple[float, float]]:
    if min_distance < 0:
        raise ValueError("min_distance must be >= 0")
    if len(vertices) < 2:
        return list(vertices)
    if min_distance == 0:
        simplified = LineString(vertices).simplify(DP_TOLERANCE_M, preserve_topology=False)
        return [tuple(c) for c in simplified.coords]
    total = arc_length(vertices)
    out = [vertices[0]]
    s = min_distance
    while s < total:
        out.append(point_at_arc_length(vertices, s))
        s += min_distance
    if out[-1] != tuple(vertices[-1]):
        out.append(tuple(vertices[-1]))
    return out


def remove_self_intersections(vertices: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Normalize a closed stroke to its largest-area simple loop."""
    if len(vertices) < 3:
        raise DegenerateSketch("closed polyline needs >= 3 vertices")
    poly = Polygon(vertices)
    if not poly.is_valid:
        fixed = make_valid(poly)
        candidates = []
        if isinstance(fixed, Polygon):
            candidates = [fixed]
        elif isinstance(fixed, MultiPolygon):
            candidates = list(fixed.geoms)
        else:  # GeometryCollection from make_valid
            candidates = [g for g in getattr(fixed, "geoms", []) if isinstance(g, Polygon)]
            for g in getattr(fixed, "geoms", []):
                if isinstance(g, MultiPolygon):
                    candidates.extend(g.geoms)
        if not candidates:
            raise DegenerateSketch("stroke encloses no area")
        poly = max(candidates, key=lambda g: g.area)
    if poly.area < MIN_ZONE_AREA_M2:
        raise DegenerateSketch(f"enclosed area {poly.area:.3f} m^2 below minimum")
    coords = list(poly.exterior.coords)[:-1]  # drop duplicated closing vertex
    return [tuple(c) for c in coords]


class SketchDb:
    """Shared sketch database, mirrored over the network on the sketch topic."""

    def __init__(self):
        self.points: dict[str, SketchPoint] = {}
        self.polylines: dict[str, SketchPolyline] = {}
        self.registry = ParamTypeRegistry()

    def add(self, sketch: SketchPoint | SketchPolyline) -> None:
        if isinstance(sketch, SketchPoint):
            self.points[sketch.sketch_id] = sketch
        else:
            if sketch.closed:
                sketch.vertices = remove_self_intersections(sketch.vertices)
            self.polylines[sketch.sketch_id] = sketch

    def remove(self, sketch_id: str) -> None:
        self.points.pop(sketch_id, None)
        self.polylines.pop(sketch_id, None)

    def get(self, sketch_id: str) -> SketchPoint | SketchPolyline | None:
        return self.points.get(sketch_id) or self.polylines.get(sketch_id)

    def of_type(self, type_names) -> list[SketchPoint | SketchPolyline]:
        names = set(type_names)
        out = [s for s in self.points.values() if s.type_name in names]
        out += [s for s in self.polylines.values() if s.type_name in names]
        return out

    def sketch_distance(self, sketch, position: tuple[float, float]) -> float:
        if isinstance(sketch, SketchPoint):
            return math.dist(position, sketch.position[:2])
        pts = sketch.vertices + ([sketch.vertices[0]] if sketch.closed else [])
        return min(
            segment_distance(position, pts[i], pts[i + 1]) for i in range(len(pts) - 1)
        )

    def closest_sketch(self, position: tuple[float, float], type_names) -> str | None:
        """Nearest sketch id among accepted types; equidistant ties go to the
        lower id."""
        candidates = self.of_type(type_names)
        if not candidates:
            return None
        best = min(candidates, key=lambda s: (self.sketch_distance(s, position), s.sketch_id))
        return best.sketch_id

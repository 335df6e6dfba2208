"""Tactic definitions, invocation, chaining DAG with logic gates, and built-ins.

A tactic expands into per-agent jobs that flow through the auction. Chain
nodes start when their prerequisites are met; gate nodes (negation,
conjunction, disjunction, timer) spawn no jobs and consume no agents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .messages import Job
from .planner import OccupancyGrid, PlanningError, jps_plan, snap_to_free
from .sketch import (
    SketchDb,
    SketchPoint,
    SketchPolyline,
    point_in_polygon,
    resample_equidistant,
    simplify,
)

ORBIT_WAYPOINTS = 8
BUILDING_SCAN_OFFSET_M = 5.0
ROUTE_ATTACH_M = 15.0
RECOVERY_NEAR_M = 10.0
DEFAULT_ORBIT_ALT_M = 10.0
COMPLETE_SUCCESS_FRACTION = 0.5

GATE_KINDS = ("negation", "conjunction", "disjunction", "timer")
AIR_PLATFORMS = ["UAV-quad", "VTOL"]


class TacticError(Exception):
    pass


@dataclass
class ParamSpec:
    name: str
    description: str
    dtype: str  # float | int | bool | text
    default: object


@dataclass
class TacticDefinition:
    name: str
    description: str
    command: str
    context_types: list[str]          # sketch/building/artifact type names; [] = none
    params: list[ParamSpec] = field(default_factory=list)
    gate: str | None = None           # one of GATE_KINDS for logic-gate tactics

    def to_fields(self) -> list:
        return [
            self.name, self.description, self.command, list(self.context_types),
            [[p.name, p.description, p.dtype, p.default] for p in self.params],
            self.gate,
        ]

    @classmethod
    def from_fields(cls, f: list) -> "TacticDefinition":
        return cls(f[0], f[1], f[2], f[3],
                   [ParamSpec(*p) for p in f[4]], f[5])


@dataclass
class TacticInstance:
    instance_id: str
    definition: str
    position: tuple[float, float]
    context_id: str | None
    params: dict
    status: str = "pending"  # pending | in-progress | failed | completed
    child_jobs: list[str] = field(default_factory=list)
    job_results: dict[str, bool] = field(default_factory=dict)
    selection_group: list[str] = field(default_factory=list)
    gate: str | None = None
    timer_started_at: float | None = None


class TacticChain:
    """Directed acyclic graph of tactic instances."""

    def __init__(self):
        self.parents: dict[str, set[str]] = {}
        self.children: dict[str, set[str]] = {}

    def add_link(self, parent: str, child: str) -> None:
        if parent == child or self._reaches(child, parent):
            raise TacticError(f"link {parent}->{child} would create a cycle")
        self.parents.setdefault(child, set()).add(parent)
        self.children.setdefault(parent, set()).add(child)

    def _reaches(self, src: str, dst: str) -> bool:
        stack = [src]
        seen = set()
        while stack:
            n = stack.pop()
            if n == dst:
                return True
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.children.get(n, ()))
        return False

    def remove_link(self, parent: str, child: str) -> None:
        self.parents.get(child, set()).discard(parent)
        self.children.get(parent, set()).discard(child)

    def descendants(self, node: str) -> set[str]:
        out: set[str] = set()
        stack = list(self.children.get(node, ()))
        while stack:
            n = stack.pop()
            if n not in out:
                out.add(n)
                stack.extend(self.children.get(n, ()))
        return out


def evaluate_prerequisites(gate: str | None, parent_statuses: list[str]) -> str:
    """Returns "start", "fail", or "wait".

    For value gates (negation/conjunction/disjunction) "start" means the gate
    immediately completes successfully; "fail" means it fails.
    """
    terminal = all(s in ("completed", "failed") for s in parent_statuses)
    if gate == "negation":
        if len(parent_statuses) != 1:
            raise TacticError("negation gate requires exactly one parent")
        if not terminal:
            return "wait"
        return "start" if parent_statuses[0] == "failed" else "fail"
    if gate == "conjunction":
        if any(s == "failed" for s in parent_statuses):
            return "fail"
        if all(s == "completed" for s in parent_statuses):
            return "start"
        return "wait"
    if gate == "disjunction":
        if any(s == "completed" for s in parent_statuses):
            return "start"
        if terminal:
            return "fail"
        return "wait"
    # default rule (also governs when a timer starts counting)
    if any(s == "failed" for s in parent_statuses):
        return "fail"
    if all(s == "completed" for s in parent_statuses):
        return "start"
    return "wait"


@dataclass
class World:
    """Snapshot the expansion functions work against."""

    sketches: SketchDb
    grid: OccupancyGrid | None = None
    buildings: list = field(default_factory=list)       # planner.Building
    agent_positions: dict[str, tuple[float, float, float]] = field(default_factory=dict)


STATUS_COLOR = {
    "pending": "black",
    "in-progress": "blue",
    "failed": "red",
    "completed": "green",
}


# --- built-in expansions ---

def _polygon_of(world: World, context_id: str) -> list[tuple[float, float]]:
    sk = world.sketches.get(context_id)
    if not isinstance(sk, SketchPolyline):
        raise TacticError(f"context {context_id!r} is not a polyline")
    return sk.vertices


def scan_grid_waypoints(polygon: list[tuple[float, float]], cell: float) -> list[list[tuple[float, float]]]:
    """Cell centers inside the polygon, grouped by row, serpentine-ordered."""
    xs = [v[0] for v in polygon]
    ys = [v[1] for v in polygon]
    rows = []
    ny = max(1, int(math.ceil((max(ys) - min(ys)) / cell)))
    nx = max(1, int(math.ceil((max(xs) - min(xs)) / cell)))
    for j in range(ny):
        y = min(ys) + (j + 0.5) * cell
        row = []
        for i in range(nx):
            x = min(xs) + (i + 0.5) * cell
            if point_in_polygon((x, y), polygon):
                row.append((x, y))
        if row:
            if len(rows) % 2 == 1:
                row.reverse()
            rows.append(row)
    return rows


def expand_overhead_scan(inst: TacticInstance, world: World) -> list[Job]:
    polygon = _polygon_of(world, inst.context_id)
    altitude = inst.params["Altitude"]
    cell = inst.params["Cell Size"]
    count = max(1, int(inst.params["Agent Count"]))
    rows = scan_grid_waypoints(polygon, cell)
    if not rows:
        cx = sum(v[0] for v in polygon) / len(polygon)
        cy = sum(v[1] for v in polygon) / len(polygon)
        rows = [[(cx, cy)]]
    count = min(count, len(rows))
    # contiguous row strips, one per agent
    per = len(rows) / count
    jobs = []
    for k in range(count):
        strip = [wp for row in rows[int(round(k * per)):int(round((k + 1) * per))] for wp in row]
        if not strip:
            continue
        jobs.append(Job(
            f"{inst.instance_id}/scan{k}", inst.instance_id, "waypoints",
            [(x, y, altitude) for x, y in strip], {},
            platforms=AIR_PLATFORMS, selection_group=inst.selection_group,
        ))
    return jobs


def expand_follow_route(inst: TacticInstance, world: World) -> list[Job]:
    route = _polygon_of(world, inst.context_id)
    altitude = inst.params["Altitude"]
    pts = simplify(route, inst.params["Distance"])
    return [Job(
        f"{inst.instance_id}/route", inst.instance_id, "waypoints",
        [(x, y, altitude) for x, y in pts],
        {"use_chaining": inst.params["Use Chaining"]},
        selection_group=inst.selection_group,
    )]


def expand_hold_position(inst: TacticInstance, world: World) -> list[Job]:
    sk = world.sketches.get(inst.context_id)
    vertices = sk.vertices
    closed = sk.closed
    count = max(1, int(inst.params["Agent Count"]))
    altitude = inst.params["Altitude"]
    stations = resample_equidistant(vertices, count, closed)
    cx = sum(v[0] for v in vertices) / len(vertices)
    cy = sum(v[1] for v in vertices) / len(vertices)
    return [
        Job(
            f"{inst.instance_id}/hold{i}", inst.instance_id, "hold",
            [(x, y, altitude)],
            {"duration": inst.params["Duration"], "face": [cx, cy]},
            selection_group=inst.selection_group,
        )
        for i, (x, y) in enumerate(stations)
    ]


def orbit_waypoints(center: tuple[float, float], radius: float, altitude: float):
    return [
        (
            center[0] + radius * math.cos(2 * math.pi * i / ORBIT_WAYPOINTS),
            center[1] + radius * math.sin(2 * math.pi * i / ORBIT_WAYPOINTS),
            altitude,
        )
        for i in range(ORBIT_WAYPOINTS)
    ]


def expand_examine_object(inst: TacticInstance, world: World) -> list[Job]:
    sk = world.sketches.get(inst.context_id)
    if not isinstance(sk, SketchPoint):
        raise TacticError("examine object requires a point context")
    radius = inst.params["Radius"]
    altitude = sk.position[2] if sk.position[2] > 0 else DEFAULT_ORBIT_ALT_M
    wps = orbit_waypoints(sk.position[:2], radius, altitude)
    return [Job(
        f"{inst.instance_id}/orbit", inst.instance_id, "waypoints", wps,
        {"face": [sk.position[0], sk.position[1]]},
        platforms=AIR_PLATFORMS, selection_group=inst.selection_group,
    )]


def _free_cells_near(world: World, center: tuple[float, float], radius: float,
                     count: int, layer: str = "ground") -> list[tuple[float, float]]:
    grid = world.grid
    if grid is None:
        return [center] * count
    cells = []
    c0 = grid.cell_of(center)
    r_cells = int(math.ceil(radius / grid.cell_size))
    for dy in range(-r_cells, r_cells + 1):
        for dx in range(-r_cells, r_cells + 1):
            ix, iy = c0[0] + dx, c0[1] + dy
            if grid.is_free(layer, ix, iy):
                d = math.hypot(dx, dy) * grid.cell_size
                if d <= radius:
                    cells.append((d, iy, ix))
    cells.sort()
    return [grid.center_of((ix, iy)) for _, iy, ix in cells[:count]]


def expand_safe_land(inst: TacticInstance, world: World) -> list[Job]:
    recovery = world.sketches.of_type(["recovery_point"])
    if recovery:
        rp = min(recovery, key=lambda s: s.sketch_id)
        spots = _free_cells_near(world, rp.position[:2], RECOVERY_NEAR_M, 1)
        target = spots[0] if spots else rp.position[:2]
    elif world.grid is not None:
        cell = snap_to_free(world.grid, "ground", world.grid.cell_of(inst.position))
        target = world.grid.center_of(cell)
    else:
        target = inst.position
    return [Job(
        f"{inst.instance_id}/land", inst.instance_id, "land",
        [(target[0], target[1], 0.0)], {},
        platforms=AIR_PLATFORMS, selection_group=inst.selection_group,
    )]


def _cells_inside_polygon(world: World, polygon, count: int) -> list[tuple[float, float]]:
    grid = world.grid
    if grid is None:
        cx = sum(v[0] for v in polygon) / len(polygon)
        cy = sum(v[1] for v in polygon) / len(polygon)
        return [(cx + i * 2.0, cy) for i in range(count)]
    xs = [v[0] for v in polygon]
    ys = [v[1] for v in polygon]
    out = []
    lo = grid.cell_of((min(xs), min(ys)))
    hi = grid.cell_of((max(xs), max(ys)))
    for iy in range(lo[1], hi[1] + 1):
        for ix in range(lo[0], hi[0] + 1):
            if not grid.is_free("ground", ix, iy):
                continue
            center = grid.center_of((ix, iy))
            if point_in_polygon(center, polygon):
                out.append(center)
            if len(out) >= count:
                return out
    return out


def expand_deploy(inst: TacticInstance, world: World) -> list[Job]:
    polygon = _polygon_of(world, inst.context_id)
    count = max(1, int(inst.params["Agent Count"]))
    spots = _cells_inside_polygon(world, polygon, count)
    if not spots:
        raise TacticError("deploy zone contains no free cells")
    # a route ending near the zone constrains the approach
    route_pts: list[tuple[float, float]] = []
    cx = sum(v[0] for v in polygon) / len(polygon)
    cy = sum(v[1] for v in polygon) / len(polygon)
    for route in world.sketches.of_type(["route"]):
        end = route.vertices[-1]
        if math.dist(end, (cx, cy)) <= ROUTE_ATTACH_M or point_in_polygon(end, polygon):
            route_pts = route.vertices
            break
    jobs = []
    for i, (x, y) in enumerate(spots):
        waypoints = [(rx, ry, 0.0) for rx, ry in route_pts] + [(x, y, 0.0)]
        jobs.append(Job(
            f"{inst.instance_id}/deploy{i}", inst.instance_id, "waypoints",
            waypoints, {}, platforms=["UGV"], selection_group=inst.selection_group,
        ))
    return jobs


def expand_scan_building(inst: TacticInstance, world: World) -> list[Job]:
    if not world.buildings:
        raise TacticError("no buildings in scene")
    altitude = inst.params["Altitude"]

    def dist_to(b):
        return min(math.dist(inst.position, v) for v in b.footprint)

    building = min(world.buildings, key=dist_to)
    cx = sum(v[0] for v in building.footprint) / len(building.footprint)
    cy = sum(v[1] for v in building.footprint) / len(building.footprint)
    wps = []
    for vx, vy in building.footprint:
        dx, dy = vx - cx, vy - cy
        norm = math.hypot(dx, dy) or 1.0
        wps.append((vx + dx / norm * BUILDING_SCAN_OFFSET_M,
                    vy + dy / norm * BUILDING_SCAN_OFFSET_M, altitude))
    return [Job(
        f"{inst.instance_id}/bscan", inst.instance_id, "waypoints", wps,
        {"building_id": building.building_id, "face": [cx, cy]},
        platforms=AIR_PLATFORMS, selection_group=inst.selection_group,
    )]


def builtin_definitions() -> list[TacticDefinition]:
    f, i, b = "float", "int", "bool"
    return [
        TacticDefinition(
            "Overhead Scan", "Fly UAVs over area to find artifacts.", "overhead_scan",
            ["explore_area", "sector"],
            [ParamSpec("Altitude", "Height in meters that UAV will assume.", f, 10.0),
             ParamSpec("Cell Size", "Minimum linear distance between waypoints in meters.", f, 15.0),
             ParamSpec("Agent Count", "Number of agents used to scan area.", i, 1)],
        ),
        TacticDefinition(
            "Follow Route", "Request an agent to traverse the nearest path.", "follow_route",
            ["route"],
            [ParamSpec("Altitude", "Height in meters that UAV will assume.", f, 10.0),
             ParamSpec("Distance", "Distance between points. Zero to force simplification.", f, 0.0),
             ParamSpec("Use Chaining", "Issue one point at a time, for testing only.", b, False)],
        ),
        TacticDefinition(
            "Hold Position", "Move a set of agents to points along the perimeter and hold.",
            "hold_position", ["route", "explore_area", "sector"],
            [ParamSpec("Altitude", "Height in meters that UAV will assume.", f, 10.0),
             ParamSpec("Duration", "How long to hold.", f, 60.0),
             ParamSpec("Agent Count", "Number of agents to place along perimeter.", i, 4)],
        ),
        TacticDefinition(
            "Examine Object", "Use UAV to scan an object of interest.", "examine_object",
            ["poi"],
            [ParamSpec("Radius", "Radius of sphere around object.", f, 10.0)],
        ),
        TacticDefinition(
            "Safe Land", "For a given air vehicle, find nearby safe location to land.",
            "safe_land", [],
            [],
        ),
        TacticDefinition(
            "Deploy", "Move ground agents into a deploy zone.", "deploy",
            ["deploy_zone"],
            [ParamSpec("Agent Count", "Number of ground agents to deploy.", i, 2)],
        ),
        TacticDefinition(
            "Scan Building", "Scan the building closest to the icon.", "scan_building",
            ["building"],
            [ParamSpec("Altitude", "Height in meters that UAV will assume.", f, 10.0)],
        ),
        TacticDefinition(
            "Timer", "Complete after a delay once prerequisites are met.", "timer", [],
            [ParamSpec("Delay", "Seconds to wait before completing.", f, 0.0)],
            gate="timer",
        ),
        TacticDefinition("Negation", "Succeed when the parent fails.", "negation", [], gate="negation"),
        TacticDefinition("Conjunction", "Succeed when all parents succeed.", "conjunction", [], gate="conjunction"),
        TacticDefinition("Disjunction", "Succeed when any parent succeeds.", "disjunction", [], gate="disjunction"),
    ]


EXPANSIONS = {
    "Overhead Scan": expand_overhead_scan,
    "Follow Route": expand_follow_route,
    "Hold Position": expand_hold_position,
    "Examine Object": expand_examine_object,
    "Safe Land": expand_safe_land,
    "Deploy": expand_deploy,
    "Scan Building": expand_scan_building,
}

_DTYPE_CHECK = {
    "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "bool": lambda v: isinstance(v, bool),
    "text": lambda v: isinstance(v, str),
}


class TacticsEngine:
    def __init__(self, world: World, dispatch_jobs=None):
        self.world = world
        self.definitions: dict[str, TacticDefinition] = {}
        self.instances: dict[str, TacticInstance] = {}
        self.chain = TacticChain()
        self.known_c2: set[str] = set()
        self.pending_broadcasts: list[str] = []   # C2 ids owed a definition dump
        self.dispatch_jobs = dispatch_jobs or (lambda jobs, inst: None)
        self.cancelled_jobs: list[str] = []
        self.status_events: list[tuple[str, str]] = []  # (instance id, new status)
        self._next = 1
        self.register(builtin_definitions())

    # --- registration / broadcast ---

    def register(self, definitions: list[TacticDefinition]) -> None:
        for d in definitions:
            if d.name in self.definitions and self.definitions[d.name] is not d:
                raise TacticError(f"duplicate tactic name {d.name!r}")
            self.definitions[d.name] = d

    def on_c2_heartbeat(self, c2_id: str) -> bool:
        """Queue a full definition broadcast for newly discovered C2 instances."""
        if c2_id in self.known_c2:
            return False
        self.known_c2.add(c2_id)
        self.pending_broadcasts.append(c2_id)
        return True

    def definition_payload(self) -> list:
        return [self.definitions[name].to_fields() for name in sorted(self.definitions)]

    def documentation(self) -> str:
        """Plain-text tactic table, generated from the definitions."""
        lines = []
        for name in sorted(self.definitions):
            d = self.definitions[name]
            ctx = ", ".join(d.context_types) or "None"
            lines.append(f"{d.name} ({d.command}): {d.description}")
            lines.append(f"    Context: {ctx}")
            for p in d.params:
                lines.append(f"    {p.name} [{p.dtype}, default {p.default!r}]: {p.description}")
        return "\n".join(lines)

    # --- invocation ---

    def invoke(self, name: str, position: tuple[float, float], params: dict | None = None,
               selection_group: list[str] | None = None) -> TacticInstance:
        if name not in self.definitions:
            raise TacticError(f"unknown tactic {name!r}")
        d = self.definitions[name]
        values = {}
        params = params or {}
        for spec in d.params:
            v = params.get(spec.name, spec.default)
            if not _DTYPE_CHECK[spec.dtype](v):
                raise TacticError(
                    f"parameter {spec.name!r} expects {spec.dtype}, got {type(v).__name__}"
                )
            values[spec.name] = v
        for extra in set(params) - {p.name for p in d.params}:
            raise TacticError(f"unknown parameter {extra!r}")
        context_id = None
        if d.context_types:
            context_id = self._resolve_context(position, d.context_types)
            if context_id is None:
                raise TacticError(f"no context of types {d.context_types} in scene")
        inst = TacticInstance(
            f"T{self._next}", name, tuple(position), context_id, values,
            selection_group=sorted(selection_group or []), gate=d.gate,
        )
        self._next += 1
        self.instances[inst.instance_id] = inst
        return inst

    def _resolve_context(self, position, types) -> str | None:
        sketch_types = [t for t in types if t != "building"]
        best_id = self.world.sketches.closest_sketch(position, sketch_types)
        best_d = math.inf
        if best_id is not None:
            best_d = self.world.sketches.sketch_distance(
                self.world.sketches.get(best_id), position)
        if "building" in types and self.world.buildings:
            for b in sorted(self.world.buildings, key=lambda b: b.building_id):
                d = min(math.dist(position, v) for v in b.footprint)
                if d < best_d:
                    best_d = d
                    best_id = b.building_id
        return best_id

    # --- chaining / execution ---

    def add_link(self, parent: str, child: str) -> None:
        for node in (parent, child):
            if node not in self.instances:
                raise TacticError(f"unknown instance {node!r}")
        self.chain.add_link(parent, child)

    def tick(self, now: float) -> None:
        for iid in sorted(self.instances):
            inst = self.instances[iid]
            if inst.status == "pending":
                parent_ids = sorted(self.chain.parents.get(iid, ()))
                statuses = [self.instances[p].status for p in parent_ids]
                verdict = evaluate_prerequisites(inst.gate, statuses)
                if verdict == "fail":
                    self._finish(inst, "failed")
                elif verdict == "start":
                    self._start(inst, now)
            elif inst.status == "in-progress" and inst.gate == "timer":
                if now - inst.timer_started_at >= inst.params.get("Delay", 0.0):
                    self._finish(inst, "completed")

    def _start(self, inst: TacticInstance, now: float) -> None:
        if inst.gate == "timer":
            inst.timer_started_at = now
            self._set_status(inst, "in-progress")
            return
        if inst.gate is not None:
            self._finish(inst, "completed")
            return
        try:
            jobs = EXPANSIONS[inst.definition](inst, self.world)
        except (TacticError, PlanningError) as exc:
            self._finish(inst, "failed")
            inst.params["error"] = str(exc)
            return
        inst.child_jobs = [j.job_id for j in jobs]
        self._set_status(inst, "in-progress")
        if jobs:
            self.dispatch_jobs(jobs, inst)
        else:
            self._finish(inst, "completed")

    def _set_status(self, inst: TacticInstance, status: str) -> None:
        inst.status = status
        self.status_events.append((inst.instance_id, status))

    def _finish(self, inst: TacticInstance, status: str) -> None:
        if inst.status in ("failed", "completed"):
            return
        self._set_status(inst, status)

    def on_job_result(self, job_id: str, success: bool) -> None:
        inst = self.instances.get(job_id.split("/")[0])
        if inst is None or inst.status != "in-progress":
            return
        inst.job_results[job_id] = success
        if len(inst.job_results) >= len(inst.child_jobs):
            wins = sum(1 for ok in inst.job_results.values() if ok)
            frac = wins / len(inst.child_jobs)
            self._finish(inst, "completed" if frac >= COMPLETE_SUCCESS_FRACTION else "failed")

    def cancel(self, instance_id: str) -> list[str]:
        """Cancel an instance and its chain descendants; returns the job ids
        whose assignments must be revoked."""
        if instance_id not in self.instances:
            raise TacticError(f"unknown instance {instance_id!r}")
        revoked = []
        for iid in [instance_id, *sorted(self.chain.descendants(instance_id))]:
            inst = self.instances[iid]
            if inst.status in ("failed", "completed"):
                continue
            for job_id in inst.child_jobs:
                if job_id not in inst.job_results:
                    revoked.append(job_id)
            self._finish(inst, "failed")
        self.cancelled_jobs.extend(revoked)
        return revoked

"""Low-fidelity simulated agents: kinematics, battery, primitives, sensing.

Fidelity 1 moves straight toward the current setpoint at cruise speed;
fidelity 2 additionally rate-limits acceleration. Both follow planner waypoint
lists when a job carries one. Fidelity can be swapped mid-primitive without
losing progress.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from shapely.geometry import LineString, Polygon
from shapely.prepared import prep

from .messages import Detection, Heartbeat, Job

CRUISE_SPEED = {"UAV-quad": 5.0, "UGV": 1.5, "VTOL": 16.0}
ENDURANCE_S = {"UAV-quad": 900.0, "UGV": 12600.0, "VTOL": 2700.0}
IDLE_DRAIN_FACTOR = 0.1
ACCEL_LIMIT = 2.0          # m/s^2, fidelity 2 only
QUAD_MAX_ALT = 120.0
VTOL_MIN_SPEED = 12.0
ARRIVE_EPS = 0.75          # m
DETECT_OUTER_M = 20.0
DETECT_INNER_M = 8.0
AUTO_LAND_BATTERY = 0.20
KILLED_HEARTBEAT_GRACE_S = 2.0


@dataclass
class Artifact:
    artifact_id: int
    outer_id: int
    inner_id: int
    role: str                 # HVT | hostile | IED | medic | benign | building-label | intel
    position: tuple[float, float, float]
    outer_class: str = "object"
    dynamic: bool = False
    neutralized: bool = False
    building_id: str | None = None  # for building-label artifacts


@dataclass
class FieldNode:
    node_id: str
    position: tuple[float, float, float]
    effect_radius: float = 5.0
    effect: str = "disable-agent"   # or "none"
    countered_by: str = "EW"
    armed: bool = True


@dataclass
class Primitive:
    kind: str                 # move_to | waypoints | hold | orbit | land
    waypoints: list[tuple[float, float, float]] = field(default_factory=list)
    index: int = 0
    hold_until: float | None = None
    hold_duration: float = 0.0
    heading_target: tuple[float, float] | None = None
    job_id: str | None = None


class SimAgent:
    def __init__(self, agent_id: str, platform: str, position, payload: str = "none",
                 fidelity_level: int = 1, config_hash: int = 0):
        self.agent_id = agent_id
        self.platform = platform
        self.position = tuple(float(c) for c in position)
        self.velocity = (0.0, 0.0, 0.0)
        self.heading = 0.0
        self.battery = 1.0
        self.status = "idle"   # idle | tasked | killed | disabled
        self.payload = payload
        self.fidelity_level = fidelity_level
        self.config_hash = config_hash
        self.primitive: Primitive | None = None
        self.killed_at: float | None = None
        self.airborne = platform != "UGV" and self.position[2] > 0.0
        self.auto_landing = False
        self._seen: set[tuple[int, str]] = set()  # (artifact id, "outer"|"inner")
        self.completed_jobs: list[tuple[str, bool]] = []  # (job id, success)

    # --- tasking ---

    def assign(self, job: Job, now: float) -> None:
        if self.status in ("killed", "disabled"):
            return
        prim = Primitive(job.primitive, [tuple(g) for g in job.goal], job_id=job.job_id)
        prim.hold_duration = float(job.params.get("duration", 0.0))
        face = job.params.get("face")
        if face is not None:
            prim.heading_target = tuple(face[:2])
        self.primitive = prim
        self.status = "tasked"
        self.auto_landing = False

    def cancel(self) -> None:
        if self.status == "tasked":
            self.primitive = None
            self.status = "idle"

    def set_fidelity(self, level: int, config_hash: int) -> None:
        if level not in (1, 2):
            raise ValueError(f"unsupported fidelity level {level}")
        self.fidelity_level = level
        self.config_hash = config_hash

    def kill(self, now: float) -> None:
        if self.status == "killed":
            return
        self.status = "killed"
        self.killed_at = now
        self.velocity = (0.0, 0.0, 0.0)
        if self.primitive and self.primitive.job_id:
            self.completed_jobs.append((self.primitive.job_id, False))
        self.primitive = None

    def disarm_and_land(self, now: float) -> None:
        """Emergency stop: land in place immediately and go disabled."""
        if self.primitive and self.primitive.job_id:
            self.completed_jobs.append((self.primitive.job_id, False))
        self.primitive = None
        if self.platform != "UGV":
            self.position = (self.position[0], self.position[1], 0.0)
            self.airborne = False
        if self.status != "killed":
            self.status = "disabled"

    def heartbeating(self, now: float) -> bool:
        if self.status == "killed" and self.killed_at is not None:
            return now - self.killed_at < KILLED_HEARTBEAT_GRACE_S
        return self.status != "killed"

    def heartbeat(self, task_id: str | None = None) -> Heartbeat:
        active = self.primitive.job_id if self.primitive else None
        return Heartbeat(
            self.agent_id, self.platform, self.position, max(0.0, self.battery),
            self.status, task_id or active, self.payload,
            self.fidelity_level, self.config_hash,
        )

    # --- motion ---

    def step(self, dt: float, now: float) -> None:
        if dt <= 0:
            raise ValueError("dt must be positive")
        if self.status in ("killed", "disabled"):
            return
        moving = self._step_primitive(dt, now)
        rate = 1.0 / ENDURANCE_S[self.platform]
        if not (moving or self.airborne):
            rate *= IDLE_DRAIN_FACTOR
        self.battery = max(0.0, self.battery - rate * dt)
        if (
            self.battery <= AUTO_LAND_BATTERY
            and self.airborne
            and not self.auto_landing
        ):
            self._preempt_with_landing()

    def _preempt_with_landing(self) -> None:
        if self.primitive and self.primitive.job_id:
            self.completed_jobs.append((self.primitive.job_id, False))
        self.primitive = Primitive("land", [(self.position[0], self.position[1], 0.0)])
        self.auto_landing = True

    def _step_primitive(self, dt: float, now: float) -> bool:
        prim = self.primitive
        if prim is None:
            return False
        if prim.kind == "hold" and prim.hold_until is not None:
            if now >= prim.hold_until:
                self._complete()
            return False
        if prim.index >= len(prim.waypoints):
            self._complete()
            return False
        target = prim.waypoints[prim.index]
        arrived = self._move_toward(target, dt)
        if arrived:
            if prim.kind == "land":
                self.airborne = False
                self.velocity = (0.0, 0.0, 0.0)
                self._complete()
                return False
            prim.index += 1
            if prim.index >= len(prim.waypoints):
                if prim.kind == "hold" and prim.hold_duration > 0:
                    prim.hold_until = now + prim.hold_duration
                    if prim.heading_target is not None:
                        self._face(prim.heading_target)
                else:
                    if prim.heading_target is not None:
                        self._face(prim.heading_target)
                    self._complete()
        return True

    def _face(self, target_xy: tuple[float, float]) -> None:
        self.heading = math.atan2(
            target_xy[1] - self.position[1], target_xy[0] - self.position[0]
        )

    def _complete(self) -> None:
        prim = self.primitive
        self.primitive = None
        if self.status == "tasked":
            self.status = "idle"
        if prim is not None and prim.job_id:
            self.completed_jobs.append((prim.job_id, True))

    def _move_toward(self, target, dt: float) -> bool:
        if self.platform == "UGV":
            target = (target[0], target[1], 0.0)
        px, py, pz = self.position
        dx, dy, dz = target[0] - px, target[1] - py, target[2] - pz
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist <= ARRIVE_EPS:
            self.position = tuple(target)
            if self.platform != "UGV":
                self.airborne = target[2] > 0.0
            return True
        speed = CRUISE_SPEED[self.platform]
        if self.fidelity_level == 2:
            cur = math.sqrt(sum(v * v for v in self.velocity))
            speed = min(speed, cur + ACCEL_LIMIT * dt)
        step = min(speed * dt, dist)
        ux, uy, uz = dx / dist, dy / dist, dz / dist
        self.position = (px + ux * step, py + uy * step, pz + uz * step)
        self.velocity = (ux * speed, uy * speed, uz * speed)
        self.heading = math.atan2(uy, ux)
        if self.platform == "UAV-quad":
            self.position = (self.position[0], self.position[1],
                             min(self.position[2], QUAD_MAX_ALT))
        if self.platform != "UGV":
            self.airborne = self.position[2] > 0.0 or target[2] > 0.0
        return False

    # --- sensing ---

    def sense(self, artifacts: list[Artifact], occluders, now: float) -> list[Detection]:
        if self.status in ("killed", "disabled"):
            return []
        out = []
        for art in artifacts:
            d = math.dist(self.position, art.position)
            if d > DETECT_OUTER_M:
                continue
            if occluders and not _line_of_sight(self.position, art.position, occluders):
                continue
            outer_key = (art.artifact_id, "outer")
            if outer_key not in self._seen:
                self._seen.add(outer_key)
                out.append(Detection(self.agent_id, art.outer_id, None,
                                     art.outer_class, art.position, now))
            if d <= DETECT_INNER_M:
                inner_key = (art.artifact_id, "inner")
                if inner_key not in self._seen:
                    self._seen.add(inner_key)
                    out.append(Detection(self.agent_id, art.outer_id, art.inner_id,
                                         art.role, art.position, now))
        return out


def build_occluders(footprints: list[list[tuple[float, float]]]):
    return [prep(Polygon(f)) for f in footprints if len(f) >= 3]


def _line_of_sight(a, b, occluders) -> bool:
    seg = LineString([a[:2], b[:2]])
    return not any(p.intersects(seg) for p in occluders)


def field_node_effects(agents: list[SimAgent], nodes: list[FieldNode], now: float) -> list[str]:
    """Apply hazard interactions; returns ids of agents killed this call."""
    killed = []
    for node in nodes:
        if not node.armed or node.effect != "disable-agent":
            continue
        for agent in agents:
            if agent.status in ("killed", "disabled"):
                continue
            if agent.payload == node.countered_by:
                continue
            if math.dist(agent.position, node.position) <= node.effect_radius:
                agent.kill(now)
                killed.append(agent.agent_id)
    return killed

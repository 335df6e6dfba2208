"""Mission engine: scenario loading, the fixed 10 Hz simulation loop, the
C2-side state (agent table, intel store, auctioneer, tactics engine, coverage),
and deterministic replay logs.

Per-tick event order is fixed for determinism: console ops, agents (by id),
network, allocation, tactics. All randomness flows from the scenario seed.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import time
from dataclasses import dataclass, field

from . import agents as ag
from .allocation import MAX_RETRIES, Auctioneer, BidInputs, compute_bid
from .coverage import VoxelCoverageTable
from .meshnet import MeshNet
from .messages import (
    TOPIC_A2C_HEARTBEAT,
    TOPIC_BIDDING,
    TOPIC_COMMAND,
    TOPIC_DETECTIONS,
    AgentTable,
    ArtifactStore,
    Bid,
    Cmd,
    Detection,
    Heartbeat,
    Job,
    build_topic_table,
    decode_bidding,
    encode_bidding,
    STATUS_COLORS,
)
from .multicast import Transport
from .planner import Building, NoGoZone, rasterize
from .sketch import SketchDb, SketchPoint, SketchPolyline, SelectionGroup, lasso_update
from .tactics import STATUS_COLOR as TACTIC_COLORS
from .tactics import TacticError, TacticsEngine, World
from .wire import decode_frame, encode_frame, pack_value

TICK_HZ = 10
DT = 1.0 / TICK_HZ
HEARTBEAT_PERIOD_TICKS = TICK_HZ  # 1 Hz
LOG_MAGIC = b"SWC2\x01"

TOPIC_TASK_RESULT = "/task_result"

#: topic -> (mesh group id, reliable class)
GROUPS = {
    TOPIC_A2C_HEARTBEAT: (1, False),
    TOPIC_BIDDING: (2, True),
    TOPIC_COMMAND: (3, True),
    TOPIC_DETECTIONS: (4, True),
    TOPIC_TASK_RESULT: (5, True),
}
#: agent->C2 bid replies ride their own group with C2 as the only member, so
#: per-job bids from 174 agents don't fan out to the whole swarm; a lost bid
#: just means the auction closes on window expiry instead of early.
GROUP_BID_RETURN = 6

INTEL_PRIORITY = {"HVT": 0, "hostile": 1, "IED": 1, "intel": 2}

GRID_CELL_M = 2.0


class ScenarioError(ValueError):
    pass


@dataclass
class RosterEntry:
    platform: str
    count: int
    payload: str = "none"
    origin: tuple[float, float] = (0.0, 0.0)


@dataclass
class Scenario:
    buildings: list[Building] = field(default_factory=list)
    artifacts: list[ag.Artifact] = field(default_factory=list)
    field_nodes: list[ag.FieldNode] = field(default_factory=list)
    sketches: list = field(default_factory=list)       # SketchPoint | SketchPolyline
    no_go_zones: list[NoGoZone] = field(default_factory=list)
    roster: list[RosterEntry] = field(default_factory=list)
    network: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def agent_count(self) -> int:
        return sum(r.count for r in self.roster)


POLYGON_KINDS = {"building", "deploy_zone", "explore_area", "sector", "no_go"}
POINT_KINDS = {"artifact", "field_node", "poi", "recovery_point"}
LINE_KINDS = {"route", "no_go"}


def _ring(feature, idx) -> list[tuple[float, float]]:
    geom = feature.get("geometry") or {}
    if geom.get("type") == "Polygon":
        ring = [tuple(c[:2]) for c in geom["coordinates"][0]]
        if len(ring) >= 2 and ring[0] == ring[-1]:
            ring = ring[:-1]
        if len(ring) < 3:
            raise ScenarioError(f"feature {idx}: polygon needs >= 3 vertices")
        return ring
    if geom.get("type") == "LineString":
        line = [tuple(c[:2]) for c in geom["coordinates"]]
        if len(line) < 2:
            raise ScenarioError(f"feature {idx}: line needs >= 2 vertices")
        return line
    raise ScenarioError(f"feature {idx}: unsupported geometry {geom.get('type')!r}")


def _point(feature, idx) -> tuple[float, float, float]:
    geom = feature.get("geometry") or {}
    if geom.get("type") != "Point":
        raise ScenarioError(f"feature {idx}: expected Point geometry")
    c = list(geom["coordinates"]) + [0.0, 0.0]
    return (float(c[0]), float(c[1]), float(c[2]))


def parse_scenario(doc: dict) -> Scenario:
    if doc.get("type") != "FeatureCollection":
        raise ScenarioError("scenario root must be a GeoJSON FeatureCollection")
    sc = Scenario(
        network=dict(doc.get("network", {})),
        seed=int(doc.get("seed", 0)),
    )
    for r in doc.get("roster", []):
        sc.roster.append(RosterEntry(
            r["platform"], int(r["count"]), r.get("payload", "none"),
            tuple(r.get("origin", (0.0, 0.0))),
        ))
    sketch_n = 0
    for idx, feature in enumerate(doc.get("features", [])):
        props = feature.get("properties") or {}
        kind = props.get("kind")
        if kind == "building":
            sc.buildings.append(Building(
                _ring(feature, idx), float(props.get("height", 8.0)),
                props.get("id", f"b{idx}"), bool(props.get("known_apriori", True)),
            ))
        elif kind == "artifact":
            sc.artifacts.append(ag.Artifact(
                int(props.get("id", idx)), int(props["outer_id"]),
                int(props.get("inner_id", 0)), props.get("role", "benign"),
                _point(feature, idx), props.get("outer_class", "object"),
                bool(props.get("dynamic", False)), False,
                props.get("building_id"),
            ))
        elif kind == "field_node":
            sc.field_nodes.append(ag.FieldNode(
                props.get("id", f"n{idx}"), _point(feature, idx),
                float(props.get("effect_radius", 5.0)),
                props.get("effect", "disable-agent"),
                props.get("countered_by", "EW"),
                bool(props.get("armed", True)),
            ))
        elif kind == "no_go":
            verts = _ring(feature, idx)
            layers = tuple(props.get("layers", ("ground",)))
            if len(verts) >= 3:
                sc.no_go_zones.append(NoGoZone(verts, layers))
            sc.sketches.append(SketchPolyline(
                props.get("id", f"s{sketch_n}"), "no_go_zone", verts,
                closed=len(verts) >= 3))
            sketch_n += 1
        elif kind in ("deploy_zone", "explore_area", "sector"):
            sc.sketches.append(SketchPolyline(
                props.get("id", f"s{sketch_n}"), kind, _ring(feature, idx), closed=True))
            sketch_n += 1
        elif kind == "route":
            sc.sketches.append(SketchPolyline(
                props.get("id", f"s{sketch_n}"), kind, _ring(feature, idx)))
            sketch_n += 1
        elif kind in ("poi", "recovery_point"):
            sc.sketches.append(SketchPoint(
                props.get("id", f"s{sketch_n}"), kind, _point(feature, idx)))
            sketch_n += 1
        else:
            raise ScenarioError(f"feature {idx}: unknown kind {kind!r}")
    return sc


def load_scenario(path: str) -> Scenario:
    with open(path) as f:
        return parse_scenario(json.load(f))


@dataclass
class BuildingState:
    building_id: str
    confirmed: bool = False
    contains_threat: bool = False
    contains_intel: bool = False


class ReplayLog:
    """Ordered (tick, kind, payload) records with a running sha256."""

    def __init__(self):
        self.records: list[tuple[int, str, bytes]] = []
        self._hash = hashlib.sha256(LOG_MAGIC)

    def append(self, tick: int, kind: str, payload: bytes) -> None:
        self.records.append((tick, kind, payload))
        blob = pack_value([tick, kind, payload])
        self._hash.update(struct.pack(">I", len(blob)))
        self._hash.update(blob)

    def terminal_hash(self) -> str:
        return self._hash.hexdigest()

    def save(self, path: str) -> None:
        with open(path, "wb") as f:
            f.write(LOG_MAGIC)
            for rec in self.records:
                blob = pack_value(list(rec))
                f.write(struct.pack(">I", len(blob)))
                f.write(blob)

    @classmethod
    def load(cls, path: str) -> "ReplayLog":
        from .wire import Unpacker

        log = cls()
        with open(path, "rb") as f:
            magic = f.read(len(LOG_MAGIC))
            if magic != LOG_MAGIC:
                raise ValueError("not a replay log")
            while True:
                head = f.read(4)
                if not head:
                    break
                (n,) = struct.unpack(">I", head)
                tick, kind, payload = Unpacker(f.read(n)).unpack()
                log.append(tick, kind, payload)
        return log


def _scene_bounds(sc: Scenario, pad: float = 40.0) -> tuple[float, float, float, float]:
    """Bounding box over everything in the scenario, so the planner grid
    covers sketches and spawn areas, not just the obstacles."""
    xs: list[float] = [0.0]
    ys: list[float] = [0.0]
    for b in sc.buildings:
        xs += [v[0] for v in b.footprint]
        ys += [v[1] for v in b.footprint]
    for z in sc.no_go_zones:
        xs += [v[0] for v in z.polygon]
        ys += [v[1] for v in z.polygon]
    for sk in sc.sketches:
        if isinstance(sk, SketchPoint):
            xs.append(sk.position[0])
            ys.append(sk.position[1])
        else:
            xs += [v[0] for v in sk.vertices]
            ys += [v[1] for v in sk.vertices]
    for a in sc.artifacts:
        xs.append(a.position[0])
        ys.append(a.position[1])
    for r in sc.roster:
        xs.append(r.origin[0])
        ys.append(r.origin[1])
    return (min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad)


class AgentRuntime:
    """One simulated platform plus its radio endpoint and job cache."""

    def __init__(self, agent: ag.SimAgent, transport: Transport):
        self.agent = agent
        self.transport = transport
        self.jobs: dict[str, Job] = {}
        self.reported = 0  # completed_jobs entries already sent upstream


class Engine:
    def __init__(self, scenario: Scenario, seed: int | None = None,
                 realtime: bool = False):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.realtime = realtime
        self.tick_no = 0
        self.now = 0.0
        self.log = ReplayLog()
        self.inbox: list[dict] = []   # console ops applied at tick start
        self.outbox: list[dict] = []  # console notifications (errors, acks)

        net = scenario.network
        self.mesh = MeshNet(
            loss_prob=float(net.get("loss_prob", 0.0)),
            hop_latency_s=float(net.get("hop_latency_s", 0.01)),
            seed=self.seed,
        )
        self.radio_range = float(net.get("radio_range_m", 600.0))
        self.topics = build_topic_table()
        self.topics.register(TOPIC_TASK_RESULT, None)

        # C2 endpoint
        self.mesh.add_node("c2", (0.0, 0.0, 0.0), self.radio_range)
        self.c2 = Transport("c2", 0, self.mesh, seed=self.seed)
        for topic in (TOPIC_A2C_HEARTBEAT, TOPIC_BIDDING, TOPIC_DETECTIONS,
                      TOPIC_TASK_RESULT, TOPIC_COMMAND):
            gid, reliable = GROUPS[topic]
            self.c2.join(gid, reliable)
        self.c2.join(GROUP_BID_RETURN, False)

        # C2 state
        self.agent_table = AgentTable()
        self.artifacts = ArtifactStore()
        self.auctioneer = Auctioneer()
        self.selection = SelectionGroup()
        self.sketches = SketchDb()
        for sk in scenario.sketches:
            self.sketches.add(sk)
        occluders = [b.footprint for b in scenario.buildings]
        self.coverage = VoxelCoverageTable(occluders=occluders or None)
        self._occluders = ag.build_occluders(occluders)
        self.grid = None
        if scenario.buildings or scenario.no_go_zones:
            self.grid = rasterize(scenario.buildings, scenario.no_go_zones,
                                  GRID_CELL_M, bounds=_scene_bounds(scenario))
        self.world = World(sketches=self.sketches, grid=self.grid,
                           buildings=scenario.buildings)
        self.tactics = TacticsEngine(self.world, dispatch_jobs=self._dispatch_jobs)
        self.building_states = {
            b.building_id: BuildingState(b.building_id) for b in scenario.buildings
        }
        self.assigned_agents: set[str] = set()   # distinct ids ever tasked
        self.job_retries: dict[str, int] = {}    # no-bid reauction counter
        self.intel_messages: list[dict] = []
        self._prev_status: dict[str, str] = {}

        self.runtimes: dict[str, AgentRuntime] = {}
        self.spawn_agents(scenario.roster)

    # --- construction ---

    def spawn_agents(self, roster: list[RosterEntry]) -> list[str]:
        spawned = []
        idx = len(self.runtimes)
        for entry in roster:
            for k in range(entry.count):
                idx += 1
                aid = f"a{idx:03d}"
                ox, oy = entry.origin
                pos = (ox + (k % 12) * 3.0, oy + (k // 12) * 3.0, 0.0)
                agent = ag.SimAgent(aid, entry.platform, pos, payload=entry.payload)
                self.mesh.add_node(aid, pos, self.radio_range)
                t = Transport(aid, idx, self.mesh, seed=self.seed + idx)
                # heartbeats are send-only for agents: C2 is the sole group
                # member, so the 1 Hz flood doesn't fan out to the whole swarm
                for topic in (TOPIC_BIDDING, TOPIC_COMMAND,
                              TOPIC_DETECTIONS, TOPIC_TASK_RESULT):
                    gid, reliable = GROUPS[topic]
                    t.join(gid, reliable)
                self.runtimes[aid] = AgentRuntime(agent, t)
                self._prev_status[aid] = agent.status
                spawned.append(aid)
        return spawned

    # --- console API entry points (thread-safe: queue in, applied at tick) ---

    def submit(self, op: dict) -> None:
        self.inbox.append(op)

    def _apply_ops(self) -> None:
        ops, self.inbox = self.inbox, []
        for op in ops:
            try:
                self._apply_op(op)
            except (TacticError, ScenarioError, KeyError, ValueError) as exc:
                self.outbox.append({"type": "error", "op": op.get("type"),
                                    "message": str(exc)})

    def _apply_op(self, op: dict) -> None:
        kind = op["type"]
        if kind == "invoke":
            inst = self.tactics.invoke(
                op["name"], tuple(op["position"]), op.get("params"),
                op.get("selection") or sorted(self.selection.members) or None,
            )
            self.log.append(self.tick_no, "invoke",
                            pack_value([inst.instance_id, op["name"]]))
            self.outbox.append({"type": "invoked", "instance": inst.instance_id})
        elif kind == "link":
            self.tactics.add_link(op["parent"], op["child"])
        elif kind == "unlink":
            self.tactics.chain.remove_link(op["parent"], op["child"])
        elif kind == "cancel":
            revoked = self.tactics.cancel(op["instance"])
            self._revoke_jobs(revoked)
        elif kind == "sketch":
            self._apply_sketch(op)
        elif kind == "lasso":
            positions = {aid: rt.agent.position[:2] for aid, rt in self.runtimes.items()}
            self.selection = lasso_update(self.selection, [tuple(p) for p in op["stroke"]],
                                          positions)
        elif kind == "estop":
            self.emergency_stop()
        elif kind == "spawn":
            roster = [RosterEntry(r["platform"], int(r["count"]),
                                  r.get("payload", "none"),
                                  tuple(r.get("origin", (0.0, 0.0))))
                      for r in op["roster"]]
            self.spawn_agents(roster)
        else:
            raise ValueError(f"unknown op {kind!r}")

    def _apply_sketch(self, op: dict) -> None:
        action = op.get("action", "add")
        if action == "remove":
            self.sketches.remove(op["id"])
            return
        if op["shape"] == "point":
            self.sketches.add(SketchPoint(op["id"], op["sketch_type"],
                                          tuple(op["position"])))
        else:
            self.sketches.add(SketchPolyline(
                op["id"], op["sketch_type"], [tuple(v) for v in op["vertices"]],
                closed=bool(op.get("closed", False))))

    def emergency_stop(self) -> None:
        """Out-of-band channel: bypasses the mesh entirely."""
        self.log.append(self.tick_no, "estop", b"")
        for aid in sorted(self.runtimes):
            rt = self.runtimes[aid]
            active = rt.agent.primitive.job_id if rt.agent.primitive else None
            rt.agent.disarm_and_land(self.now)
            if active is not None:
                self.auctioneer.release(active)
                self.tactics.on_job_result(active, False)

    # --- tactic/auction plumbing ---

    def _expected_bidders(self) -> set[str]:
        return {aid for aid, rt in self.runtimes.items()
                if rt.agent.status not in ("killed", "disabled")}

    def _dispatch_jobs(self, jobs: list[Job], inst) -> None:
        self.auctioneer.open_auction(jobs, self.now, self._expected_bidders())
        gid, _ = GROUPS[TOPIC_BIDDING]
        for job in jobs:
            self.job_retries.setdefault(job.job_id, 0)
            frame = encode_frame(self.topics, TOPIC_BIDDING, encode_bidding(job))
            self.c2.send(gid, frame, self.now)

    def _revoke_jobs(self, job_ids: list[str]) -> None:
        if not job_ids:
            return
        for job_id in job_ids:
            self.auctioneer.cancel_job(job_id)
        cmd = Cmd(assignments=[], cancellations=sorted(job_ids))
        frame = encode_frame(self.topics, TOPIC_COMMAND, cmd.to_fields())
        self.c2.send(GROUPS[TOPIC_COMMAND][0], frame, self.now)
        self.log.append(self.tick_no, "cmd", frame)

    # --- the tick ---

    def tick(self) -> None:
        self._apply_ops()
        self._step_agents()
        self._step_network()
        self._step_allocation()
        self.tactics.tick(self.now)
        self._record_transitions()
        self.tick_no += 1
        self.now = self.tick_no * DT

    def run(self, ticks: int) -> None:
        deadline = time.monotonic()
        for _ in range(ticks):
            self.tick()
            if self.realtime:
                deadline += DT
                delay = deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)

    def _step_agents(self) -> None:
        gid_hb, _ = GROUPS[TOPIC_A2C_HEARTBEAT]
        gid_det, _ = GROUPS[TOPIC_DETECTIONS]
        gid_res, _ = GROUPS[TOPIC_TASK_RESULT]
        artifacts = [a for a in self.scenario.artifacts if not a.neutralized]
        order = sorted(self.runtimes)
        # move everyone first so the mesh adjacency is rebuilt once per tick
        for aid in order:
            a = self.runtimes[aid].agent
            if a.status not in ("killed", "disabled"):
                a.step(DT, self.now)
                self.mesh.set_position(aid, a.position)
        for i, aid in enumerate(order):
            rt = self.runtimes[aid]
            a = rt.agent
            if a.status not in ("killed", "disabled"):
                for det in a.sense(artifacts, self._occluders, self.now):
                    frame = encode_frame(self.topics, TOPIC_DETECTIONS, det.to_fields())
                    rt.transport.send(gid_det, frame, self.now)
            # task results for newly finished jobs
            while rt.reported < len(a.completed_jobs):
                job_id, ok = a.completed_jobs[rt.reported]
                rt.reported += 1
                frame = encode_frame(self.topics, TOPIC_TASK_RESULT,
                                     [job_id, aid, ok])
                rt.transport.send(gid_res, frame, self.now)
            if a.heartbeating(self.now) and (self.tick_no + i) % HEARTBEAT_PERIOD_TICKS == 0:
                frame = encode_frame(self.topics, TOPIC_A2C_HEARTBEAT,
                                     a.heartbeat().to_fields())
                rt.transport.send(gid_hb, frame, self.now)
        ag.field_node_effects(
            [self.runtimes[a].agent for a in sorted(self.runtimes)],
            self.scenario.field_nodes, self.now)

    def _step_network(self) -> None:
        for d in self.mesh.poll(self.now):
            if d.node_id == "c2":
                for group, sender, frame in self.c2.on_delivery(d, self.now):
                    self._on_c2_frame(frame)
            else:
                rt = self.runtimes[d.node_id]
                for group, sender, frame in rt.transport.on_delivery(d, self.now):
                    self._on_agent_frame(rt, frame)
        for group, sender, frame in self.c2.tick(self.now):
            self._on_c2_frame(frame)
        for aid in sorted(self.runtimes):
            rt = self.runtimes[aid]
            for group, sender, frame in rt.transport.tick(self.now):
                self._on_agent_frame(rt, frame)

    def _on_agent_frame(self, rt: AgentRuntime, frame: bytes) -> None:
        decoded = decode_frame(self.topics, frame)
        if decoded is None:
            return
        topic, fields = decoded
        a = rt.agent
        if topic == TOPIC_BIDDING:
            msg = decode_bidding(fields)
            if not isinstance(msg, Job):
                return
            rt.jobs[msg.job_id] = msg
            inputs = BidInputs(
                a.agent_id, a.position, a.battery, a.platform, a.payload,
                idle=a.status == "idle",
                alive=a.status not in ("killed", "disabled"),
            )
            bid = Bid(msg.job_id, a.agent_id, compute_bid(inputs, msg))
            out = encode_frame(self.topics, TOPIC_BIDDING, encode_bidding(bid))
            rt.transport.send(GROUP_BID_RETURN, out, self.now)
        elif topic == TOPIC_COMMAND:
            cmd = Cmd.from_fields(fields)
            for job_id, agent_id in cmd.assignments:
                if agent_id == a.agent_id and job_id in rt.jobs:
                    a.assign(rt.jobs[job_id], self.now)
            active = a.primitive.job_id if a.primitive else None
            if active in cmd.cancellations:
                a.cancel()

    def _on_c2_frame(self, frame: bytes) -> None:
        decoded = decode_frame(self.topics, frame)
        if decoded is None:
            return
        topic, fields = decoded
        if topic == TOPIC_A2C_HEARTBEAT:
            hb = Heartbeat.from_fields(fields)
            if self.agent_table.ingest_heartbeat(hb, self.now):
                if hb.status in ("idle", "tasked"):
                    self.coverage.stamp(hb.position[:2], ag.DETECT_OUTER_M, self.now)
        elif topic == TOPIC_DETECTIONS:
            det = Detection.from_fields(fields)
            self.artifacts.ingest_detection(det)
            self._update_building_state(det)
            self._maybe_intel(det)
            self.log.append(self.tick_no, "detection",
                            encode_frame(self.topics, TOPIC_DETECTIONS, fields))
        elif topic == TOPIC_BIDDING:
            msg = decode_bidding(fields)
            if isinstance(msg, Bid):
                self.auctioneer.on_bid(msg, self.now)
        elif topic == TOPIC_TASK_RESULT:
            job_id, agent_id, ok = fields
            outcome = self.auctioneer.on_task_result(
                job_id, ok, self.now, self._expected_bidders())
            if outcome == "complete":
                self.tactics.on_job_result(job_id, True)
            elif outcome == "failed":
                self.tactics.on_job_result(job_id, False)
            elif outcome == "reauctioned":
                job = self.auctioneer.jobs[job_id]
                out = encode_frame(self.topics, TOPIC_BIDDING, encode_bidding(job))
                self.c2.send(GROUPS[TOPIC_BIDDING][0], out, self.now)

    def _step_allocation(self) -> None:
        for result in self.auctioneer.tick(self.now):
            if result.assignments:
                for _, agent_id in result.assignments:
                    self.assigned_agents.add(agent_id)
                cmd = Cmd(assignments=sorted(result.assignments))
                frame = encode_frame(self.topics, TOPIC_COMMAND, cmd.to_fields())
                self.c2.send(GROUPS[TOPIC_COMMAND][0], frame, self.now)
                self.log.append(self.tick_no, "cmd", frame)
            for job_id in result.unassignable:
                if self.job_retries.get(job_id, 0) < MAX_RETRIES:
                    self.job_retries[job_id] = self.job_retries.get(job_id, 0) + 1
                    job = self.auctioneer.jobs[job_id]
                    self.auctioneer.open_auction([job], self.now, self._expected_bidders())
                    frame = encode_frame(self.topics, TOPIC_BIDDING, encode_bidding(job))
                    self.c2.send(GROUPS[TOPIC_BIDDING][0], frame, self.now)
                else:
                    self.tactics.on_job_result(job_id, False)
        assert self.auctioneer.check_no_double_assignment()

    def _update_building_state(self, det: Detection) -> None:
        for b in self.scenario.buildings:
            state = self.building_states[b.building_id]
            if det.role == "building-label":
                if self._inside(det.position, b.footprint):
                    state.confirmed = True
            elif det.inner_id is not None and det.role in ("hostile", "HVT"):
                if self._inside(det.position, b.footprint):
                    state.contains_threat = True
            elif det.inner_id is not None and det.role == "intel":
                if self._inside(det.position, b.footprint):
                    state.contains_intel = True

    @staticmethod
    def _inside(position, footprint) -> bool:
        from .sketch import point_in_polygon

        return point_in_polygon(position[:2], footprint)

    def _maybe_intel(self, det: Detection) -> None:
        if det.inner_id is None or det.role not in INTEL_PRIORITY:
            return
        self.intel_messages.append({
            "priority": INTEL_PRIORITY[det.role],
            "text": f"{det.role} identified by {det.reporter_id}",
            "location": list(det.position[:2]),
            "tick": self.tick_no,
            "acknowledged": False,
        })

    def _record_transitions(self) -> None:
        for aid in sorted(self.runtimes):
            status = self.runtimes[aid].agent.status
            if status != self._prev_status[aid]:
                self._prev_status[aid] = status
                self.log.append(self.tick_no, "status", pack_value([aid, status]))
        events, self.tactics.status_events = self.tactics.status_events, []
        for iid, status in events:
            self.log.append(self.tick_no, "tactic", pack_value([iid, status]))

    # --- snapshots ---

    def snapshot(self, include_coverage: bool = False) -> dict:
        agents = []
        for aid in sorted(self.runtimes):
            a = self.runtimes[aid].agent
            known = aid in self.agent_table.records
            status = self.agent_table.status(aid, self.now) if known else "unknown"
            agents.append({
                "id": aid, "platform": a.platform,
                "position": [round(c, 3) for c in a.position],
                "battery": round(a.battery, 4), "status": status,
                "color": STATUS_COLORS[status],
                "task": a.primitive.job_id if a.primitive else None,
                "payload": a.payload,
                "selected": aid in self.selection.members,
            })
        tactic_list = [
            {"id": iid, "definition": inst.definition, "status": inst.status,
             "color": TACTIC_COLORS[inst.status],
             "position": list(inst.position),
             "parents": sorted(self.tactics.chain.parents.get(iid, ()))}
            for iid, inst in sorted(self.tactics.instances.items())
        ]
        sketch_list = (
            [{"id": s.sketch_id, "type": s.type_name, "shape": "point",
              "position": list(s.position)} for s in self.sketches.points.values()]
            + [{"id": s.sketch_id, "type": s.type_name, "shape": "polyline",
                "closed": s.closed, "vertices": [list(v) for v in s.vertices]}
               for s in self.sketches.polylines.values()]
        )
        artifact_list = [
            {"outer_id": e.outer_id, "role": e.role, "identified": e.identified,
             "position": list(e.position[:2])}
            for e in sorted(self.artifacts.entries.values(), key=lambda e: e.outer_id)
        ]
        building_list = [
            {"id": s.building_id, "confirmed": s.confirmed,
             "contains_threat": s.contains_threat, "contains_intel": s.contains_intel,
             "footprint": [list(v) for v in b.footprint], "height": b.height}
            for b, s in ((b, self.building_states[b.building_id])
                         for b in self.scenario.buildings)
        ]
        snap = {
            "type": "snapshot",
            "tick": self.tick_no,
            "time": round(self.now, 3),
            "agents": agents,
            "tactics": tactic_list,
            "sketches": sketch_list,
            "artifacts": artifact_list,
            "buildings": building_list,
            "intel": self.intel_messages[-50:],
            "events": self.outbox[-20:],
        }
        if include_coverage and self.coverage.entries:
            xs = [v[0] for v in self.coverage.entries]
            ys = [v[1] for v in self.coverage.entries]
            bounds = (min(xs), min(ys), max(xs) + 1.0, max(ys) + 1.0)
            ov = self.coverage.to_overlay(bounds, self.now)
            snap["coverage"] = ov.to_fields()
        return snap

    # --- reporting ---

    def detection_count(self) -> int:
        return len(self.artifacts.entries)

    def terminal_hash(self) -> str:
        return self.log.terminal_hash()


def bench(agent_count: int, ticks: int, seed: int = 1) -> dict:
    """Headless throughput probe: full engine loop, empty map."""
    air = agent_count // 2
    sc = Scenario(
        roster=[RosterEntry("UAV-quad", air, origin=(0.0, 10.0)),
                RosterEntry("UGV", agent_count - air, origin=(0.0, -40.0))],
        seed=seed,
    )
    eng = Engine(sc)
    t0 = time.perf_counter()
    eng.run(ticks)
    wall = time.perf_counter() - t0
    return {
        "agents": agent_count,
        "ticks": ticks,
        "wall_s": wall,
        "ticks_per_s": ticks / wall if wall > 0 else float("inf"),
        "hash": eng.terminal_hash(),
    }

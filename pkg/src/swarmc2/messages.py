"""Core swarm message schemas, the discovered-agent table, and the intel store.

Field order in each ``to_fields`` / ``from_fields`` pair is the wire contract:
the codec transmits values positionally, names never travel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .wire import TopicTable

# Seconds without a heartbeat before an agent is displayed as unknown.
STALENESS_S = 7.0

PLATFORM_KINDS = ("UAV-quad", "UGV", "VTOL")
PAYLOAD_KINDS = ("EW", "AP", "AS", "CF", "none")
AGENT_STATUSES = ("idle", "tasked", "killed", "disabled")

TOPIC_A2C_HEARTBEAT = "/a2c/heartbeat"
TOPIC_C2_HEARTBEAT = "/heartbeat"
TOPIC_BIDDING = "/bidding"
TOPIC_COMMAND = "/command"
TOPIC_DETECTIONS = "/detections"
TOPIC_GRID = "/grid"
TOPIC_SKETCH = "/sketch"
TOPIC_TACTIC_DEFS = "/tactic_defs"
TOPIC_TACTIC_INVOKE = "/tactic_invoke"
TOPIC_TACTIC_STATUS = "/tactic_status"


class MalformedMessage(ValueError):
    pass


@dataclass
class Heartbeat:
    agent_id: str
    platform: str
    position: tuple[float, float, float]
    battery: float
    status: str
    task_id: str | None = None
    payload: str = "none"
    fidelity_level: int = 1
    config_hash: int = 0

    def validate(self) -> None:
        if self.platform not in PLATFORM_KINDS:
            raise MalformedMessage(f"bad platform {self.platform!r}")
        if not (0.0 <= self.battery <= 1.0):
            raise MalformedMessage(f"battery out of range: {self.battery}")
        if not all(abs(c) < float("inf") and c == c for c in self.position):
            raise MalformedMessage("non-finite position")
        if self.status not in AGENT_STATUSES:
            raise MalformedMessage(f"bad status {self.status!r}")

    def to_fields(self) -> list:
        return [
            self.agent_id,
            self.platform,
            list(self.position),
            float(self.battery),
            self.status,
            self.task_id,
            self.payload,
            int(self.fidelity_level),
            int(self.config_hash),
        ]

    @classmethod
    def from_fields(cls, f: list) -> "Heartbeat":
        return cls(f[0], f[1], tuple(f[2]), f[3], f[4], f[5], f[6], f[7], f[8])


@dataclass
class Job:
    job_id: str
    tactic_instance_id: str
    primitive: str
    goal: list[tuple[float, float, float]]  # single goal = one-element list
    params: dict
    platforms: list[str] = field(default_factory=list)   # empty = any
    payloads: list[str] = field(default_factory=list)    # empty = any
    selection_group: list[str] = field(default_factory=list)  # empty = any agent

    def to_fields(self) -> list:
        return [
            self.job_id,
            self.tactic_instance_id,
            self.primitive,
            [list(p) for p in self.goal],
            self.params,
            list(self.platforms),
            list(self.payloads),
            sorted(self.selection_group),
        ]

    @classmethod
    def from_fields(cls, f: list) -> "Job":
        return cls(f[0], f[1], f[2], [tuple(p) for p in f[3]], f[4], f[5], f[6], f[7])


#: Bid value meaning "not bidding on this job".
DECLINE = None


@dataclass
class Bid:
    job_id: str
    agent_id: str
    value: float | None  # None = decline; lower is better

    def to_fields(self) -> list:
        return [self.job_id, self.agent_id, self.value]

    @classmethod
    def from_fields(cls, f: list) -> "Bid":
        return cls(f[0], f[1], f[2])


@dataclass
class Cmd:
    assignments: list[tuple[str, str]]  # (job id, agent id)
    cancellations: list[str] = field(default_factory=list)

    def to_fields(self) -> list:
        return [[list(a) for a in self.assignments], list(self.cancellations)]

    @classmethod
    def from_fields(cls, f: list) -> "Cmd":
        return cls([tuple(a) for a in f[0]], f[1])


@dataclass
class Detection:
    reporter_id: str
    outer_id: int
    inner_id: int | None
    role: str
    position: tuple[float, float, float]
    timestamp: float

    def to_fields(self) -> list:
        return [
            self.reporter_id,
            int(self.outer_id),
            self.inner_id,
            self.role,
            list(self.position),
            float(self.timestamp),
        ]

    @classmethod
    def from_fields(cls, f: list) -> "Detection":
        return cls(f[0], f[1], f[2], f[3], tuple(f[4]), f[5])


@dataclass
class GridOverlay:
    name: str
    origin: tuple[float, float]
    cell_size: float
    width: int
    height: int
    values: list[float]  # row-major, width*height, each in [0,1] or sentinel -1

    def to_fields(self) -> list:
        return [
            self.name,
            list(self.origin),
            float(self.cell_size),
            int(self.width),
            int(self.height),
            [float(v) for v in self.values],
        ]

    @classmethod
    def from_fields(cls, f: list) -> "GridOverlay":
        return cls(f[0], tuple(f[1]), f[2], f[3], f[4], f[5])


# /bidding carries both Job and Cmd-response Bid traffic; a leading tag
# disambiguates since field lists are positional.
def encode_bidding(msg: Job | Bid) -> list:
    tag = "job" if isinstance(msg, Job) else "bid"
    return [tag] + msg.to_fields()


def decode_bidding(fields: list) -> Job | Bid:
    tag, rest = fields[0], fields[1:]
    if tag == "job":
        return Job.from_fields(rest)
    if tag == "bid":
        return Bid.from_fields(rest)
    raise MalformedMessage(f"unknown bidding tag {tag!r}")


def build_topic_table() -> TopicTable:
    table = TopicTable()
    table.register(TOPIC_A2C_HEARTBEAT, Heartbeat)
    table.register(TOPIC_C2_HEARTBEAT, Heartbeat)
    table.register(TOPIC_BIDDING, (Job, Bid))
    table.register(TOPIC_COMMAND, Cmd)
    table.register(TOPIC_DETECTIONS, Detection)
    table.register(TOPIC_GRID, GridOverlay)
    table.register(TOPIC_SKETCH, None)
    table.register(TOPIC_TACTIC_DEFS, None)
    table.register(TOPIC_TACTIC_INVOKE, None)
    table.register(TOPIC_TACTIC_STATUS, None)
    return table


STATUS_COLORS = {
    "idle": "green",
    "killed": "orange",
    "disabled": "red",
    "tasked": "blue",
    "unknown": "orange",
}


@dataclass
class AgentRecord:
    heartbeat: Heartbeat
    last_seen: float


class AgentTable:
    """Discovered agents keyed by id; agents are never forgotten, only staled."""

    def __init__(self):
        self.records: dict[str, AgentRecord] = {}
        self.malformed_count = 0

    def ingest_heartbeat(self, hb: Heartbeat, now: float) -> bool:
        try:
            hb.validate()
        except MalformedMessage:
            self.malformed_count += 1
            return False
        self.records[hb.agent_id] = AgentRecord(hb, now)
        return True

    def status(self, agent_id: str, now: float) -> str:
        rec = self.records[agent_id]
        if now - rec.last_seen > STALENESS_S:
            return "unknown"
        return rec.heartbeat.status

    def status_color(self, agent_id: str, now: float) -> str:
        return STATUS_COLORS[self.status(agent_id, now)]

    def agent_ids(self) -> list[str]:
        return sorted(self.records)

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class ArtifactEntry:
    outer_id: int
    role: str
    position: tuple[float, float, float]
    inner_id: int | None = None
    identified: bool = False
    reporters: set[str] = field(default_factory=set)
    first_seen: float = 0.0
    last_seen: float = 0.0


class ArtifactStore:
    """Central intel store: append-only by outer id, never downgrades identified."""

    def __init__(self):
        self.entries: dict[int, ArtifactEntry] = {}

    def ingest_detection(self, d: Detection) -> ArtifactEntry:
        entry = self.entries.get(d.outer_id)
        if entry is None:
            entry = ArtifactEntry(
                outer_id=d.outer_id,
                role=d.role,
                position=d.position,
                first_seen=d.timestamp,
            )
            self.entries[d.outer_id] = entry
        entry.reporters.add(d.reporter_id)
        entry.last_seen = max(entry.last_seen, d.timestamp)
        if d.inner_id is not None:
            entry.inner_id = d.inner_id
            entry.identified = True
            entry.role = d.role  # inner tag carries the true role
        elif not entry.identified:
            entry.role = d.role
        return entry

    def __len__(self) -> int:
        return len(self.entries)

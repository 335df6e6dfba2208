"""NAK-based reliable multicast over the mesh, plus the fire-and-forget class.

Packet layout: 1-byte type tag (0=ODATA, 1=RDATA, 2=SPM, 3=NAK, 4=GONE),
4-byte sender id, 2-byte group id, 8-byte big-endian sequence, then the frame
payload for data packets. SPM carries the sender's highest sequence in the
sequence field.

Tuning (all simulation-clock seconds): ambient SPM every 30 s while data is
flowing, a single end-of-transmission SPM 30 s after the last data packet,
NAK backoff uniform in (0, 2], NAK repeat every 10 s, at most 3 NAK attempts,
repairs batched on an 800 ms interval and capped at 1024 repair bytes per
sender per sliding 1-second window.
"""

from __future__ import annotations

import struct
from collections import OrderedDict, deque
from dataclasses import dataclass, field

import numpy as np

from .meshnet import Delivery, MeshNet

ODATA, RDATA, SPM, NAK, GONE = range(5)

HEADER = struct.Struct(">BIHQ")

AMBIENT_SPM_PERIOD_S = 30.0
EOT_SPM_DELAY_S = 30.0
NAK_BACKOFF_S = 2.0
NAK_REPEAT_S = 10.0
NAK_MAX_ATTEMPTS = 3
REPAIR_INTERVAL_S = 0.8
REPAIR_RATE_BYTES_PER_S = 1024
SEND_WINDOW = 256
REORDER_BUFFER_CAP = 256


def pack_packet(tag: int, sender: int, group: int, seq: int, payload: bytes = b"") -> bytes:
    return HEADER.pack(tag, sender, group, seq) + payload


def unpack_packet(data: bytes) -> tuple[int, int, int, int, bytes]:
    tag, sender, group, seq = HEADER.unpack_from(data)
    return tag, sender, group, seq, data[HEADER.size:]


@dataclass
class SenderState:
    group: int
    next_seq: int = 0
    window: OrderedDict = field(default_factory=OrderedDict)  # seq -> frame
    last_data_time: float | None = None
    last_spm_time: float | None = None
    eot_sent: bool = False
    pending_repairs: set = field(default_factory=set)
    last_repair_flush: float = float("-inf")
    repair_log: deque = field(default_factory=deque)  # (time, bytes) in last 1 s


@dataclass
class NakRecord:
    seq: int
    backoff_deadline: float
    repeat_deadline: float = 0.0
    attempts: int = 0


@dataclass
class ReceiverState:
    group: int
    sender: int
    expected: int = 0
    highest_seen: int = -1
    buffer: dict = field(default_factory=dict)     # seq -> frame
    missing: dict = field(default_factory=dict)    # seq -> NakRecord
    abandoned: set = field(default_factory=set)


class Transport:
    """Per-node endpoint owning sender/receiver state for each joined group."""

    def __init__(self, node_id: str, numeric_id: int, mesh: MeshNet, seed: int = 0):
        self.node_id = node_id
        self.numeric_id = numeric_id
        self.mesh = mesh
        self.rng = np.random.default_rng(seed)
        self.senders: dict[int, SenderState] = {}
        self.receivers: dict[tuple[int, int], ReceiverState] = {}
        self.reliable_groups: set[int] = set()
        # counters for harness inspection
        self.naks_sent = 0
        self.rdata_sent = 0
        self.spms_sent = 0
        self.loss_count = 0
        self.duplicate_count = 0

    def join(self, group: int, reliable: bool) -> None:
        self.mesh.join(group, self.node_id)
        if reliable:
            self.reliable_groups.add(group)

    # --- sending ---

    def send(self, group: int, frame: bytes, now: float) -> None:
        if group not in self.reliable_groups:
            self.mesh.inject(self.node_id, group,
                             pack_packet(ODATA, self.numeric_id, group, 0, frame), now)
            return
        st = self.senders.setdefault(group, SenderState(group))
        seq = st.next_seq
        st.next_seq += 1
        st.window[seq] = frame
        while len(st.window) > SEND_WINDOW:
            st.window.popitem(last=False)
        st.last_data_time = now
        if st.last_spm_time is None:
            st.last_spm_time = now
        st.eot_sent = False
        self.mesh.inject(self.node_id, group,
                         pack_packet(ODATA, self.numeric_id, group, seq, frame), now)

    # --- receiving ---

    def on_delivery(self, d: Delivery, now: float) -> list[tuple[int, int, bytes]]:
        """Process one mesh delivery; returns (group, sender id, frame) triples
        delivered to the application, in order."""
        tag, sender, group, seq, payload = unpack_packet(d.payload)
        if group not in self.reliable_groups:
            if tag == ODATA:
                return [(group, sender, payload)]
            return []
        if sender == self.numeric_id:
            if tag == NAK:
                self._on_nak(group, seq, now)
            return []
        if tag in (ODATA, RDATA):
            return self._on_data(group, sender, seq, payload, now)
        if tag == SPM:
            self._on_spm(group, sender, seq, now)
        elif tag == GONE:
            return self._on_gone(group, sender, seq)
        # NAKs from other receivers are ignored (no suppression).
        return []

    def _receiver(self, group: int, sender: int) -> ReceiverState:
        return self.receivers.setdefault((group, sender), ReceiverState(group, sender))

    def _on_data(self, group, sender, seq, frame, now) -> list[tuple[int, int, bytes]]:
        rs = self._receiver(group, sender)
        if seq < rs.expected or seq in rs.buffer or seq in rs.abandoned:
            self.duplicate_count += 1
            return []
        if len(rs.buffer) >= REORDER_BUFFER_CAP:
            return []
        rs.buffer[seq] = frame
        rs.missing.pop(seq, None)
        self._note_gaps(rs, seq, now)
        rs.highest_seen = max(rs.highest_seen, seq)
        return self._drain(rs)

    def _note_gaps(self, rs: ReceiverState, upto_exclusive: int, now: float) -> None:
        hi = min(upto_exclusive, rs.expected + REORDER_BUFFER_CAP)
        for q in range(rs.expected, hi):
            if q not in rs.buffer and q not in rs.missing and q not in rs.abandoned:
                backoff = float(self.rng.uniform(0.0, NAK_BACKOFF_S))
                rs.missing[q] = NakRecord(q, backoff_deadline=now + backoff)

    def _on_spm(self, group, sender, highest, now) -> None:
        rs = self._receiver(group, sender)
        self._note_gaps(rs, highest + 1, now)
        rs.highest_seen = max(rs.highest_seen, highest)

    def _on_gone(self, group, sender, seq) -> list[tuple[int, int, bytes]]:
        rs = self._receiver(group, sender)
        if seq >= rs.expected and seq not in rs.buffer and seq not in rs.abandoned:
            self._abandon(rs, seq)
            return self._drain(rs)
        return []

    def _abandon(self, rs: ReceiverState, seq: int) -> None:
        rs.missing.pop(seq, None)
        rs.abandoned.add(seq)
        self.loss_count += 1

    def _drain(self, rs: ReceiverState) -> list[tuple[int, int, bytes]]:
        out = []
        while True:
            if rs.expected in rs.buffer:
                out.append((rs.group, rs.sender, rs.buffer.pop(rs.expected)))
            elif rs.expected in rs.abandoned:
                rs.abandoned.discard(rs.expected)
            else:
                break
            rs.expected += 1
        return out

    def _on_nak(self, group: int, seq: int, now: float) -> None:
        st = self.senders.get(group)
        if st is None:
            return
        if seq in st.window:
            st.pending_repairs.add(seq)
        elif seq < st.next_seq:
            self.mesh.inject(self.node_id, group,
                             pack_packet(GONE, self.numeric_id, group, seq), now)

    # --- timers ---

    def tick(self, now: float) -> list[tuple[int, int, bytes]]:
        """Drive timers; returns frames unblocked by head-of-line abandonment."""
        for group, st in self.senders.items():
            self._tick_sender(group, st, now)
        unblocked: list[tuple[int, int, bytes]] = []
        for rs in list(self.receivers.values()):
            unblocked.extend(self._tick_receiver(rs, now))
        return unblocked

    def _tick_sender(self, group: int, st: SenderState, now: float) -> None:
        if st.last_data_time is not None and not st.eot_sent:
            if now - st.last_data_time >= EOT_SPM_DELAY_S:
                self._emit_spm(group, st, now)
                st.eot_sent = True
            elif now - st.last_spm_time >= AMBIENT_SPM_PERIOD_S:
                self._emit_spm(group, st, now)
        if st.pending_repairs and now - st.last_repair_flush >= REPAIR_INTERVAL_S:
            self._flush_repairs(group, st, now)

    def _emit_spm(self, group: int, st: SenderState, now: float) -> None:
        self.mesh.inject(self.node_id, group,
                         pack_packet(SPM, self.numeric_id, group, st.next_seq - 1), now)
        st.last_spm_time = now
        self.spms_sent += 1

    def _flush_repairs(self, group: int, st: SenderState, now: float) -> None:
        st.last_repair_flush = now
        while st.repair_log and now - st.repair_log[0][0] >= 1.0:
            st.repair_log.popleft()
        budget = REPAIR_RATE_BYTES_PER_S - sum(b for _, b in st.repair_log)
        for seq in sorted(st.pending_repairs):
            frame = st.window.get(seq)
            if frame is None:
                st.pending_repairs.discard(seq)
                continue
            packet = pack_packet(RDATA, self.numeric_id, group, seq, frame)
            if len(packet) > budget:
                break
            self.mesh.inject(self.node_id, group, packet, now)
            st.repair_log.append((now, len(packet)))
            budget -= len(packet)
            st.pending_repairs.discard(seq)
            self.rdata_sent += 1

    def _tick_receiver(self, rs: ReceiverState, now: float) -> list[tuple[int, int, bytes]]:
        unblocked: list[tuple[int, int, bytes]] = []
        for rec in sorted(rs.missing.values(), key=lambda r: r.seq):
            if rec.attempts == 0:
                if now >= rec.backoff_deadline:
                    self._emit_nak(rs, rec, now)
            elif now >= rec.repeat_deadline:
                if rec.attempts < NAK_MAX_ATTEMPTS:
                    self._emit_nak(rs, rec, now)
                else:
                    self._abandon(rs, rec.seq)
                    unblocked.extend(self._drain(rs))
        return unblocked

    def _emit_nak(self, rs: ReceiverState, rec: NakRecord, now: float) -> None:
        # a NAK names the data sender's session, not the requester
        self.mesh.inject(self.node_id, rs.group,
                         pack_packet(NAK, rs.sender, rs.group, rec.seq), now)
        rec.attempts += 1
        rec.repeat_deadline = now + NAK_REPEAT_S
        self.naks_sent += 1

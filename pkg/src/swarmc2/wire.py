"""Binary application-protocol framing: DJB2 topic hash header + MessagePack payload.

A frame is 4 bytes of big-endian topic hash followed by one MessagePack-encoded
value per schema field, concatenated in schema declaration order. Field names do
not travel on the wire; order carries identity.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field


class CodecError(Exception):
    """Malformed frame or payload/schema mismatch."""


class UnknownTopicError(CodecError):
    """Frame hash not present in the topic table."""


def djb2_hash(name: str | bytes) -> int:
    """Additive DJB2 over the UTF-8 bytes of ``name``, modulo 2^32."""
    if isinstance(name, str):
        name = name.encode("utf-8")
    h = 5381
    for c in name:
        h = (h * 33 + c) & 0xFFFFFFFF
    return h


# --- MessagePack encoding (subset: nil, bool, int, float64, str, bin, array, map) ---

def pack_value(obj) -> bytes:
    out = bytearray()
    _pack_into(obj, out)
    return bytes(out)


def _pack_into(obj, out: bytearray) -> None:
    if obj is None:
        out.append(0xC0)
    elif obj is True:
        out.append(0xC3)
    elif obj is False:
        out.append(0xC2)
    elif isinstance(obj, int):
        _pack_int(obj, out)
    elif isinstance(obj, float):
        out.append(0xCB)
        out += struct.pack(">d", obj)
    elif isinstance(obj, str):
        data = obj.encode("utf-8")
        n = len(data)
        if n < 32:
            out.append(0xA0 | n)
        elif n < 256:
            out += struct.pack(">BB", 0xD9, n)
        elif n < 65536:
            out += struct.pack(">BH", 0xDA, n)
        else:
            out += struct.pack(">BI", 0xDB, n)
        out += data
    elif isinstance(obj, (bytes, bytearray)):
        n = len(obj)
        if n < 256:
            out += struct.pack(">BB", 0xC4, n)
        elif n < 65536:
            out += struct.pack(">BH", 0xC5, n)
        else:
            out += struct.pack(">BI", 0xC6, n)
        out += obj
    elif isinstance(obj, (list, tuple)):
        n = len(obj)
        if n < 16:
            out.append(0x90 | n)
        elif n < 65536:
            out += struct.pack(">BH", 0xDC, n)
        else:
            out += struct.pack(">BI", 0xDD, n)
        for item in obj:
            _pack_into(item, out)
    elif isinstance(obj, dict):
        n = len(obj)
        if n < 16:
            out.append(0x80 | n)
        elif n < 65536:
            out += struct.pack(">BH", 0xDE, n)
        else:
            out += struct.pack(">BI", 0xDF, n)
        for k, v in obj.items():
            _pack_into(k, out)
            _pack_into(v, out)
    else:
        raise CodecError(f"unpackable type {type(obj).__name__}")


def _pack_int(v: int, out: bytearray) -> None:
    if 0 <= v < 128:
        out.append(v)
    elif -32 <= v < 0:
        out.append(v & 0xFF)
    elif 0 <= v < 256:
        out += struct.pack(">BB", 0xCC, v)
    elif 0 <= v < 65536:
        out += struct.pack(">BH", 0xCD, v)
    elif 0 <= v < 2**32:
        out += struct.pack(">BI", 0xCE, v)
    elif 0 <= v < 2**64:
        out += struct.pack(">BQ", 0xCF, v)
    elif -128 <= v < 0:
        out += struct.pack(">Bb", 0xD0, v)
    elif -32768 <= v < 0:
        out += struct.pack(">Bh", 0xD1, v)
    elif -(2**31) <= v < 0:
        out += struct.pack(">Bi", 0xD2, v)
    elif -(2**63) <= v < 0:
        out += struct.pack(">Bq", 0xD3, v)
    else:
        raise CodecError(f"integer out of 64-bit range: {v}")


class Unpacker:
    """Streaming decoder over a buffer of concatenated MessagePack values."""

    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.pos = offset

    def has_more(self) -> bool:
        return self.pos < len(self.data)

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CodecError("truncated payload")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self):
        tag = self._take(1)[0]
        if tag < 0x80:
            return tag
        if tag >= 0xE0:
            return tag - 256
        if 0xA0 <= tag < 0xC0:
            return self._take(tag & 0x1F).decode("utf-8")
        if 0x90 <= tag < 0xA0:
            return [self.unpack() for _ in range(tag & 0x0F)]
        if 0x80 <= tag < 0x90:
            return {self.unpack(): self.unpack() for _ in range(tag & 0x0F)}
        if tag == 0xC0:
            return None
        if tag == 0xC2:
            return False
        if tag == 0xC3:
            return True
        if tag == 0xC4:
            return bytes(self._take(self._take(1)[0]))
        if tag == 0xC5:
            return bytes(self._take(struct.unpack(">H", self._take(2))[0]))
        if tag == 0xC6:
            return bytes(self._take(struct.unpack(">I", self._take(4))[0]))
        if tag == 0xCB:
            return struct.unpack(">d", self._take(8))[0]
        if tag == 0xCC:
            return self._take(1)[0]
        if tag == 0xCD:
            return struct.unpack(">H", self._take(2))[0]
        if tag == 0xCE:
            return struct.unpack(">I", self._take(4))[0]
        if tag == 0xCF:
            return struct.unpack(">Q", self._take(8))[0]
        if tag == 0xD0:
            return struct.unpack(">b", self._take(1))[0]
        if tag == 0xD1:
            return struct.unpack(">h", self._take(2))[0]
        if tag == 0xD2:
            return struct.unpack(">i", self._take(4))[0]
        if tag == 0xD3:
            return struct.unpack(">q", self._take(8))[0]
        if tag == 0xD9:
            return self._take(self._take(1)[0]).decode("utf-8")
        if tag == 0xDA:
            return self._take(struct.unpack(">H", self._take(2))[0]).decode("utf-8")
        if tag == 0xDB:
            return self._take(struct.unpack(">I", self._take(4))[0]).decode("utf-8")
        if tag == 0xDC:
            return [self.unpack() for _ in range(struct.unpack(">H", self._take(2))[0])]
        if tag == 0xDD:
            return [self.unpack() for _ in range(struct.unpack(">I", self._take(4))[0])]
        if tag == 0xDE:
            n = struct.unpack(">H", self._take(2))[0]
            return {self.unpack(): self.unpack() for _ in range(n)}
        if tag == 0xDF:
            n = struct.unpack(">I", self._take(4))[0]
            return {self.unpack(): self.unpack() for _ in range(n)}
        raise CodecError(f"unsupported type tag 0x{tag:02x}")


# --- Topic table and framing ---

@dataclass
class TopicTable:
    """Registered topics: 32-bit DJB2 hash -> (name, schema field count)."""

    entries: dict[int, tuple[str, object]] = field(default_factory=dict)
    by_name: dict[str, int] = field(default_factory=dict)
    drop_count: int = 0
    decode_error_count: int = 0

    def register(self, name: str, schema=None) -> int:
        h = djb2_hash(name)
        if h in self.entries and self.entries[h][0] != name:
            raise CodecError(
                f"topic hash collision: {name!r} vs {self.entries[h][0]!r}"
            )
        self.entries[h] = (name, schema)
        self.by_name[name] = h
        return h

    def schema_for(self, name: str):
        return self.entries[self.by_name[name]][1]


def encode_frame(table: TopicTable, topic: str, fields: list) -> bytes:
    if topic not in table.by_name:
        raise UnknownTopicError(topic)
    out = bytearray(struct.pack(">I", table.by_name[topic]))
    for value in fields:
        _pack_into(value, out)
    return bytes(out)


def decode_frame(table: TopicTable, frame: bytes) -> tuple[str, list] | None:
    """Decode a frame against the table.

    Returns (topic name, field list), or None when the topic hash is unknown
    (the frame is silently dropped and the drop counter incremented).
    Raises CodecError for under-length or malformed frames of known topics.
    """
    if len(frame) < 4:
        raise CodecError(f"frame shorter than 4-byte header: {len(frame)} bytes")
    h = struct.unpack(">I", frame[:4])[0]
    entry = table.entries.get(h)
    if entry is None:
        table.drop_count += 1
        return None
    unpacker = Unpacker(frame, offset=4)
    values = []
    try:
        while unpacker.has_more():
            values.append(unpacker.unpack())
    except CodecError:
        table.decode_error_count += 1
        raise
    return entry[0], values

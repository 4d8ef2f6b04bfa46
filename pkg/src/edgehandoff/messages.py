"""Protocol messages and the bit-exact frame codec.

Wire layout (big-endian)::

    magic 0xED 0x6E | version u8 | msg_type u8
    | sender_kind u8 | sender_id u64 | receiver_kind u8 | receiver_id u64
    | seq u32 | payload_len u16 | payload

The 28-byte header travels in clear so the simulator can route frames, and
is bound into every sealed body as associated data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from enum import IntEnum

from . import crypto
from .errors import (
    BadEntityKind, BadMagic, BadVersion, LengthError, PayloadTooLarge, TrailingBytes, Truncated,
    UnknownMsgType,
)

MAGIC = b"\xed\x6e"
VERSION = 1
MAX_PAYLOAD = 0xFFFF
_HEADER = struct.Struct(">2sBBBQBQIH")
HEADER_LEN = _HEADER.size  # 28


class Kind(IntEnum):
    NODE = 0
    EDGE = 1
    NAME_SERVER = 2


@dataclass(frozen=True, order=True)
class EntityId:
    kind: Kind
    id: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not 0 <= self.id < 2**64:
            raise ValueError(f"entity id out of range: {self.id}")

    def encode(self) -> bytes:
        return struct.pack(">BQ", self.kind, self.id)

    def __str__(self):
        return f"{self.kind.name.lower().replace('_', '')}:{self.id}"

    @classmethod
    def parse(cls, text: str) -> "EntityId":
        kind, _, num = text.partition(":")
        kinds = {"node": Kind.NODE, "edge": Kind.EDGE, "nameserver": Kind.NAME_SERVER, "ns": Kind.NAME_SERVER}
        if kind not in kinds or not num.isdigit():
            raise ValueError(f"bad entity id {text!r}")
        return cls(kinds[kind], int(num))


def node(i: int) -> EntityId:
    return EntityId(Kind.NODE, i)


def edge(i: int) -> EntityId:
    return EntityId(Kind.EDGE, i)


NAME_SERVER = EntityId(Kind.NAME_SERVER, 0)


class MsgType(IntEnum):
    NODE_JOIN_REQUEST = 0x01
    CHALLENGE = 0x02
    CHALLENGE_RESPONSE = 0x03
    AUTH_ACK = 0x04
    SERVER_JOIN_REQUEST = 0x05
    REGISTER_EDGE = 0x06
    REGISTER_ACK = 0x07
    RECOMMEND_REQUEST = 0x08
    RECOMMEND_REPLY = 0x09
    HANDOFF_TRANSFER = 0x0A
    HANDOFF_ACK = 0x0B
    RECONNECT_REQUEST = 0x0C
    CONNECT_ACK = 0x0D
    KEY_RENEW = 0x0E
    KEY_RENEW_CONFIRM = 0x0F
    DATA_FRAME = 0x10
    DISCONNECT = 0x11
    REJECT = 0x12


class RejectReason(IntEnum):
    UNKNOWN_KEY = 0x01
    CHALLENGE_FAILED = 0x02
    DENYLISTED = 0x03
    DIGEST_MISMATCH = 0x04
    REPLAY_DETECTED = 0x05
    NOT_REGISTERED = 0x06
    CAPACITY_EXCEEDED = 0x07


@dataclass(frozen=True)
class Frame:
    msg_type: MsgType
    sender: EntityId
    receiver: EntityId
    seq: int
    payload: bytes = b""
    version: int = VERSION

    def header(self, payload_len: int | None = None) -> bytes:
        n = len(self.payload) if payload_len is None else payload_len
        return _HEADER.pack(MAGIC, self.version, self.msg_type,
                            self.sender.kind, self.sender.id,
                            self.receiver.kind, self.receiver.id, self.seq, n)


def encode_frame(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload of {len(frame.payload)} bytes exceeds {MAX_PAYLOAD}")
    return frame.header() + bytes(frame.payload)


def decode_frame(data: bytes) -> Frame:
    data = bytes(data)
    if data[:2] != MAGIC[:len(data[:2])]:
        raise BadMagic("bad magic")
    if len(data) < HEADER_LEN:
        raise Truncated("frame shorter than header")
    magic, version, mtype, skind, sid, rkind, rid, seq, plen = _HEADER.unpack_from(data)
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    try:
        mtype = MsgType(mtype)
    except ValueError:
        raise UnknownMsgType(f"unknown msg_type 0x{mtype:02x}") from None
    try:
        sender, receiver = EntityId(skind, sid), EntityId(rkind, rid)
    except ValueError:
        raise BadEntityKind("unknown entity kind") from None
    body = data[HEADER_LEN:]
    if len(body) < plen:
        raise Truncated(f"declared payload_len {plen} but {len(body)} bytes present")
    if len(body) > plen:
        raise TrailingBytes(f"{len(body) - plen} trailing bytes")
    return Frame(mtype, sender, receiver, seq, body, version)


def sealed_len(body_len: int, prefix_len: int = 0) -> int:
    return prefix_len + crypto.NONCE_LEN + body_len + crypto.TAG_LEN


def seal_body(key: bytes, frame: Frame, body: bytes, rng, prefix: bytes = b"") -> bytes:
    """Return ``prefix || nonce || aead_seal(key, nonce, header, body)``.

    The AAD is the header of ``frame`` with payload_len set to the final
    payload length, so any later change to addressing or seq breaks the tag.
    """
    n = sealed_len(len(body), len(prefix))
    nonce = rng.randbytes(crypto.NONCE_LEN)
    return bytes(prefix) + nonce + crypto.aead_seal(key, nonce, frame.header(n), body)


def open_body(key: bytes, frame: Frame, prefix_len: int = 0) -> bytes:
    payload = frame.payload
    if len(payload) < prefix_len + crypto.NONCE_LEN + crypto.TAG_LEN:
        raise LengthError("sealed payload too short")
    nonce = payload[prefix_len:prefix_len + crypto.NONCE_LEN]
    return crypto.aead_open(key, nonce, frame.header(), payload[prefix_len + crypto.NONCE_LEN:])


# --- message bodies -------------------------------------------------------

def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 255:
        raise ValueError("string field longer than 255 bytes")
    return bytes([len(raw)]) + raw


def _unpack_str(buf: bytes, off: int) -> tuple[str, int]:
    if off >= len(buf):
        raise LengthError("truncated string field")
    n = buf[off]
    end = off + 1 + n
    if end > len(buf):
        raise LengthError("truncated string field")
    return buf[off + 1:end].decode("utf-8"), end


class _Fixed:
    """Mixin for bodies with a fixed struct layout."""

    _fmt: struct.Struct

    def pack(self) -> bytes:
        return self._fmt.pack(*self._values())

    def _values(self):
        return [getattr(self, f) for f in self.__dataclass_fields__]

    @classmethod
    def unpack(cls, raw: bytes):
        if len(raw) != cls._fmt.size:
            raise LengthError(f"{cls.__name__} body must be {cls._fmt.size} bytes, got {len(raw)}")
        return cls(*cls._fmt.unpack(raw))


@dataclass(frozen=True)
class NodeJoinBody(_Fixed):
    node_id: int
    psk_index: int
    psk: bytes
    _fmt = struct.Struct(">QH16s")


JOIN_PURPOSE_NETWORK = 0
JOIN_PURPOSE_PEERING = 1


@dataclass(frozen=True)
class ServerJoinBody:
    edge_id: int
    psk_index: int
    psk: bytes
    purpose: int
    x: float
    y: float
    capacity: int
    name: str
    address: str

    _fmt = struct.Struct(">QH16sBddI")

    def pack(self) -> bytes:
        return (self._fmt.pack(self.edge_id, self.psk_index, self.psk, self.purpose,
                               self.x, self.y, self.capacity)
                + _pack_str(self.name) + _pack_str(self.address))

    @classmethod
    def unpack(cls, raw: bytes):
        if len(raw) < cls._fmt.size:
            raise LengthError("ServerJoinBody truncated")
        fixed = cls._fmt.unpack_from(raw)
        name, off = _unpack_str(raw, cls._fmt.size)
        address, off = _unpack_str(raw, off)
        if off != len(raw):
            raise LengthError("ServerJoinBody has trailing bytes")
        return cls(*fixed, name, address)


@dataclass(frozen=True)
class ChallengeBody(_Fixed):
    challenge: bytes
    _fmt = struct.Struct(">16s")


@dataclass(frozen=True)
class NodeAuthAckBody(_Fixed):
    edge_id: int
    app_digest: bytes
    _fmt = struct.Struct(">Q32s")


@dataclass(frozen=True)
class EdgeAuthAckBody(_Fixed):
    edge_id: int
    reg_nonce: bytes
    ns_nonce: bytes
    _fmt = struct.Struct(">Q16s16s")


@dataclass(frozen=True)
class RegisterEdgeBody:
    edge_id: int
    x: float
    y: float
    capacity: int
    reg_nonce: bytes
    name: str
    address: str

    _fmt = struct.Struct(">QddI16s")

    def pack(self) -> bytes:
        return (self._fmt.pack(self.edge_id, self.x, self.y, self.capacity, self.reg_nonce)
                + _pack_str(self.name) + _pack_str(self.address))

    @classmethod
    def unpack(cls, raw: bytes):
        if len(raw) < cls._fmt.size:
            raise LengthError("RegisterEdgeBody truncated")
        fixed = cls._fmt.unpack_from(raw)
        name, off = _unpack_str(raw, cls._fmt.size)
        address, off = _unpack_str(raw, off)
        if off != len(raw):
            raise LengthError("RegisterEdgeBody has trailing bytes")
        return cls(*fixed, name, address)


class RegisterStatus(IntEnum):
    OK = 0
    DUPLICATE_EDGE = 1
    DUPLICATE_NAME = 2
    UNAUTHORIZED = 3


@dataclass(frozen=True)
class RegisterAckBody(_Fixed):
    edge_id: int
    status: int
    ns_nonce: bytes
    _fmt = struct.Struct(">QB16s")


@dataclass(frozen=True)
class RecommendRequestBody(_Fixed):
    node_id: int
    x: float
    y: float
    exclude: int
    _fmt = struct.Struct(">QddQ")


@dataclass(frozen=True)
class RecommendReplyBody(_Fixed):
    node_id: int
    found: int
    edge_id: int
    _fmt = struct.Struct(">QBQ")


@dataclass(frozen=True)
class HandoffTransferBody(_Fixed):
    node_id: int
    session_key: bytes
    app_digest: bytes
    remaining_ttl: float
    _fmt = struct.Struct(">Q16s32sd")


@dataclass(frozen=True)
class HandoffAckBody(_Fixed):
    node_id: int
    _fmt = struct.Struct(">Q")


@dataclass(frozen=True)
class ReconnectBody(_Fixed):
    app_digest: bytes
    nonce: bytes
    _fmt = struct.Struct(">32s16s")


@dataclass(frozen=True)
class ConnectAckBody(_Fixed):
    edge_id: int
    _fmt = struct.Struct(">Q")


@dataclass(frozen=True)
class KeyRenewBody(_Fixed):
    renew_nonce: bytes
    _fmt = struct.Struct(">16s")


@dataclass(frozen=True)
class KeyRenewConfirmBody(_Fixed):
    renew_nonce: bytes
    _fmt = struct.Struct(">16s")


DISCONNECT_MIGRATE = 1
DISCONNECT_REJOIN = 0
DISCONNECT_NONE = 2


@dataclass(frozen=True)
class DisconnectBody(_Fixed):
    target_edge: int
    mode: int
    _fmt = struct.Struct(">QB")


@dataclass(frozen=True)
class RejectBody(_Fixed):
    reason: int
    subject: int
    _fmt = struct.Struct(">BQ")


def with_payload(frame: Frame, payload: bytes) -> Frame:
    return replace(frame, payload=bytes(payload))


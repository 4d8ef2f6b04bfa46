"""Plumbing shared by the node, edge and name-server state machines."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from . import crypto
from .messages import EntityId, Frame, MsgType, open_body, seal_body


@dataclass
class Counters:
    full_auths: int = 0
    peer_auths: int = 0
    challenges_issued: int = 0
    aead_ops: int = 0
    hash_ops: int = 0
    bytes_sent: int = 0
    replays_detected: int = 0
    tampers_detected: int = 0
    jamming_alerts: int = 0
    denylist_size: int = 0
    handoffs_completed: int = 0
    attack_events: int = 0
    dropped_frames: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EventRecord:
    time: float
    entity: EntityId
    kind: str
    subject: EntityId | None = None
    detail: str = ""


@dataclass
class Endpoint:
    """Identity, sequence counters, crypto-op accounting and an event log."""

    entity: EntityId
    counters: Counters = field(default_factory=Counters)
    events: list = field(default_factory=list)
    send_seq: dict = field(default_factory=dict)

    def next_seq(self, receiver: EntityId) -> int:
        seq = self.send_seq.get(receiver, 0)
        if seq > 0xFFFFFFFF:
            raise OverflowError("sequence space exhausted for this peer")
        self.send_seq[receiver] = seq + 1
        return seq

    def emit(self, msg_type: MsgType, receiver: EntityId, body: bytes, key: bytes | None,
             rng, prefix: bytes = b"") -> Frame:
        """Build an outbound frame; the body is sealed under ``key`` unless key is None."""
        frame = Frame(msg_type, self.entity, receiver, self.next_seq(receiver))
        if key is None:
            return Frame(msg_type, self.entity, receiver, frame.seq, bytes(prefix) + bytes(body))
        self.counters.aead_ops += 1
        return Frame(msg_type, self.entity, receiver, frame.seq,
                     seal_body(key, frame, body, rng, prefix))

    def open(self, key: bytes, frame: Frame, prefix_len: int = 0) -> bytes:
        self.counters.aead_ops += 1
        return open_body(key, frame, prefix_len)

    def hash(self, data: bytes) -> bytes:
        self.counters.hash_ops += 1
        return crypto.lw_hash(data)

    def log(self, now: float, kind: str, subject: EntityId | None = None, detail: str = "") -> None:
        self.events.append(EventRecord(now, self.entity, kind, subject, detail))

    def tamper(self, now: float, frame: Frame, detail: str = "") -> None:
        self.counters.tampers_detected += 1
        self.counters.dropped_frames += 1
        self.log(now, "TamperDetected", frame.sender, detail or frame.msg_type.name)

    def replay(self, now: float, frame: Frame) -> None:
        self.counters.replays_detected += 1
        self.counters.dropped_frames += 1
        self.log(now, "ReplayDetected", frame.sender, f"{frame.msg_type.name} seq={frame.seq}")

    def drop(self, now: float, frame: Frame, reason: str) -> None:
        self.counters.dropped_frames += 1
        self.log(now, "Dropped", frame.sender, f"{frame.msg_type.name}: {reason}")

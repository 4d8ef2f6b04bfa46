"""Name Server: registry of edge metadata and the edge-recommendation service."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import crypto
from .endpoint import Endpoint
from .errors import (
    AuthFailure, DuplicateEdge, DuplicateName, LengthError, NotFound, UnauthorizedRegistrar,
)
from .messages import (
    NAME_SERVER, EntityId, Frame, Kind, MsgType, RecommendReplyBody, RecommendRequestBody,
    RegisterAckBody, RegisterEdgeBody, RegisterStatus, edge,
)


@dataclass
class NameRecord:
    edge_id: EntityId
    name: str
    address: str
    position: tuple[float, float]
    capacity: int
    current_load: int = 0
    authenticated_by: EntityId = NAME_SERVER
    registered_at: float = 0.0

    def dump_line(self) -> str:
        x, y = self.position
        return (f"{self.edge_id.id}\t{self.name}\t{self.address}\t{x:.3f}\t{y:.3f}\t"
                f"{self.capacity}\t{self.current_load}\t{self.authenticated_by}\t{self.registered_at:.6f}")


@dataclass
class Weights:
    distance: float = 0.7
    load: float = 0.3
    distance_norm: float = 1000.0


def edge_score(node_position, record: NameRecord, weights: Weights) -> float:
    dist = math.hypot(node_position[0] - record.position[0], node_position[1] - record.position[1])
    return weights.distance * (dist / weights.distance_norm) + weights.load * (record.current_load / record.capacity)


@dataclass
class Registry:
    records: dict = field(default_factory=dict)
    name_index: dict = field(default_factory=dict)
    address_index: dict = field(default_factory=dict)
    weights: Weights = field(default_factory=Weights)

    def register(self, record: NameRecord, authenticator: EntityId, now: float = 0.0) -> NameRecord:
        if record.edge_id in self.records:
            raise DuplicateEdge(f"{record.edge_id} already registered")
        if authenticator == NAME_SERVER:
            # bootstrap: only the very first edge may self-register
            if self.records:
                raise UnauthorizedRegistrar("bootstrap registration after the registry is populated")
        elif authenticator not in self.records:
            raise UnauthorizedRegistrar(f"{authenticator} is not a registered edge")
        if record.name in self.name_index:
            raise DuplicateName(f"name {record.name!r} already in use")
        record.authenticated_by = authenticator
        record.registered_at = now
        self.records[record.edge_id] = record
        self.name_index[record.name] = record.edge_id
        self.address_index[record.address] = record.edge_id
        return record

    def recommend(self, node_position, exclude: EntityId | None) -> EntityId | None:
        best = None
        for rec in self.records.values():
            if rec.edge_id == exclude or rec.current_load >= rec.capacity:
                continue
            key = (edge_score(node_position, rec, self.weights), rec.edge_id.id)
            if best is None or key < best[0]:
                best = (key, rec.edge_id)
        return None if best is None else best[1]

    def lookup(self, key) -> NameRecord:
        """Find a record by name, address token, or EntityId."""
        if isinstance(key, EntityId):
            edge_id = key
        else:
            edge_id = self.name_index.get(key) or self.address_index.get(key)
        if edge_id is None or edge_id not in self.records:
            raise NotFound(key)
        return self.records[edge_id]

    def update_load(self, edge_id: EntityId, delta: int) -> int:
        rec = self.lookup(edge_id)
        rec.current_load = min(max(rec.current_load + delta, 0), rec.capacity)
        return rec.current_load

    def authentication_chain(self, edge_id: EntityId) -> list:
        """Follow authenticated_by links back to the bootstrap record."""
        chain = [edge_id]
        cur = self.records[edge_id]
        while cur.authenticated_by != NAME_SERVER:
            if len(chain) > len(self.records):
                raise RuntimeError(f"authentication cycle through {edge_id}")
            chain.append(cur.authenticated_by)
            cur = self.records[cur.authenticated_by]
        return chain

    def dump(self) -> str:
        return "".join(self.records[k].dump_line() + "\n" for k in sorted(self.records))


class NameServer(Endpoint):
    """Message-driven front end of the registry.

    Each edge talks to the Name Server under its own channel key, derived
    from DK and the nonce pair exchanged when the edge was registered.
    """

    def __init__(self, dk: bytes, weights: Weights | None = None):
        super().__init__(NAME_SERVER)
        self.dk = crypto.SymmetricKey(dk)
        self.registry = Registry(weights=weights or Weights())
        self.channel_keys: dict = {}
        self.used_nonces: set = set()
        self.last_seen: dict = {}

    # direct API -------------------------------------------------------
    def ns_register(self, record: NameRecord, authenticator: EntityId, now: float = 0.0):
        return self.registry.register(record, authenticator, now)

    def ns_recommend(self, node_position, exclude: EntityId | None):
        return self.registry.recommend(node_position, exclude)

    def ns_lookup(self, key):
        return self.registry.lookup(key)

    def ns_update_load(self, edge_id: EntityId, delta: int):
        return self.registry.update_load(edge_id, delta)

    # wire -----------------------------------------------------------------
    def handle(self, frame: Frame, now: float, rng) -> list:
        if frame.sender.kind != Kind.EDGE:
            self.drop(now, frame, "not an edge")
            return []
        if frame.msg_type == MsgType.REGISTER_EDGE:
            return self._handle_register(frame, now, rng)
        if frame.msg_type == MsgType.RECOMMEND_REQUEST:
            return self._handle_recommend(frame, now, rng)
        self.drop(now, frame, "unexpected message")
        return []

    def _channel_key(self, sender: EntityId):
        return self.channel_keys.get(sender)

    def _fresh(self, frame: Frame, now: float) -> bool:
        last = self.last_seen.get(frame.sender)
        if last is not None and frame.seq <= last:
            self.replay(now, frame)
            return False
        self.last_seen[frame.sender] = frame.seq
        return True

    def _handle_register(self, frame, now, rng):
        key = self._channel_key(frame.sender)
        bootstrap = key is None
        try:
            body = RegisterEdgeBody.unpack(self.open(self.dk if bootstrap else key, frame))
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        if not self._fresh(frame, now):
            return []
        if bootstrap and body.edge_id != frame.sender.id:
            self.drop(now, frame, "bootstrap registration must be for the sender itself")
            return []
        authenticator = NAME_SERVER if bootstrap else frame.sender
        record = NameRecord(edge(body.edge_id), body.name, body.address, (body.x, body.y), body.capacity)
        ns_nonce = crypto.make_challenge(rng, self.used_nonces)
        try:
            self.registry.register(record, authenticator, now)
            status = RegisterStatus.OK
            self.channel_keys[record.edge_id] = crypto.derive_session_key(self.dk, body.reg_nonce, ns_nonce)
            self.counters.hash_ops += 1
            self.log(now, "EdgeRegistered", record.edge_id, f"by {authenticator}")
        except DuplicateEdge:
            status = RegisterStatus.DUPLICATE_EDGE
        except DuplicateName:
            status = RegisterStatus.DUPLICATE_NAME
        except UnauthorizedRegistrar:
            status = RegisterStatus.UNAUTHORIZED
        reply = RegisterAckBody(body.edge_id, status, ns_nonce).pack()
        return [self.emit(MsgType.REGISTER_ACK, frame.sender, reply, self.dk if bootstrap else key, rng)]

    def _handle_recommend(self, frame, now, rng):
        key = self._channel_key(frame.sender)
        if key is None:
            self.drop(now, frame, "no channel key for sender")
            return []
        try:
            body = RecommendRequestBody.unpack(self.open(key, frame))
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        if not self._fresh(frame, now):
            return []
        choice = self.registry.recommend((body.x, body.y), edge(body.exclude))
        reply = RecommendReplyBody(body.node_id, int(choice is not None), choice.id if choice else 0)
        return [self.emit(MsgType.RECOMMEND_REPLY, frame.sender, reply.pack(), key, rng)]

    def state_digest(self) -> tuple:
        return (tuple(sorted((str(k), r.current_load) for k, r in self.registry.records.items())),
                tuple(sorted(str(k) for k in self.channel_keys)))

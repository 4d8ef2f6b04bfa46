"""Edge server state machine.

An edge authenticates nodes and peer edges, keeps the per-node
authentication cache, renews keys, and runs both sides of the handoff:
the old edge hands the node's session key and app digest to the new edge
over a pairwise peer channel, so the node reconnects without a new
challenge exchange.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import crypto
from .endpoint import Endpoint
from .errors import (
    AuthFailure, ChallengeFailed, LengthError, NoPendingChallenge, NotRegistered, UnexpectedMessage,
    UnknownNode, UnknownSender,
)
from .messages import (
    DISCONNECT_MIGRATE, DISCONNECT_NONE, DISCONNECT_REJOIN, JOIN_PURPOSE_NETWORK,
    JOIN_PURPOSE_PEERING, NAME_SERVER, ChallengeBody, ConnectAckBody, DisconnectBody,
    EdgeAuthAckBody, EntityId, Frame, HandoffAckBody, HandoffTransferBody, Kind, KeyRenewBody,
    KeyRenewConfirmBody, MsgType, NodeAuthAckBody, NodeJoinBody, ReconnectBody,
    RecommendReplyBody, RecommendRequestBody, RegisterAckBody, RegisterEdgeBody, RegisterStatus,
    RejectBody, RejectReason, ServerJoinBody, edge, node,
)

LOCAL = "Local"
MIGRATED = "Migrated"

MIGRATION = "migration"
BASELINE = "baseline"


@dataclass
class EdgeConfig:
    ttl: float = 600.0
    renew_timeout_ticks: int = 3
    failure_threshold: int = 3
    pdr_threshold: float = 0.5
    pdr_window: int = 50
    mode: str = MIGRATION


@dataclass
class Directory:
    """Administrator-provisioned identity records readable by every edge.

    ``fingerprints`` maps any entity to its device fingerprint; ``app_digests``
    maps nodes to the code signature of their approved application image.
    """

    fingerprints: dict = field(default_factory=dict)
    app_digests: dict = field(default_factory=dict)


@dataclass
class EdgeProvisioning:
    edge_id: EntityId
    dk: bytes
    psk_set: dict  # index -> key
    fingerprint: bytes
    name: str
    address: str
    position: tuple
    capacity: int
    model: str = ""

    def __post_init__(self):
        if self.edge_id.kind != Kind.EDGE:
            raise ValueError("edge_id must be an edge entity")
        if not self.psk_set:
            raise ValueError("psk_set must not be empty")
        if self.capacity < 1:
            raise ValueError("capacity must be positive")
        self.dk = crypto.SymmetricKey.provisioned(self.dk)
        self.psk_set = {i: crypto.SymmetricKey.provisioned(k) for i, k in self.psk_set.items()}


@dataclass
class PdrWindow:
    """Delivery outcomes of the most recent ``window_len`` expected frames.

    Expected frames are inferred from sequence-number gaps, so a frame lost
    on the air shows up as a miss once a later frame arrives.
    """

    window_len: int = 50
    outcomes: deque = field(init=False, repr=False)

    def __post_init__(self):
        self.outcomes = deque(maxlen=self.window_len)

    def record(self, gap: int) -> None:
        self.outcomes.extend([False] * min(gap - 1, self.window_len))
        self.outcomes.append(True)

    @property
    def expected(self) -> int:
        return len(self.outcomes)

    @property
    def delivered(self) -> int:
        return sum(self.outcomes)

    @property
    def ratio(self) -> float:
        return self.delivered / self.expected if self.outcomes else 1.0

    def reset(self) -> None:
        self.outcomes.clear()


@dataclass
class AuthCacheEntry:
    node_id: EntityId
    session_key: bytes
    app_digest: bytes
    created_at: float
    last_renewed: float
    ttl: float
    shared: bool = False
    origin: str = LOCAL
    last_seq_seen: int | None = None
    active: bool = True
    renew_nonce: bytes | None = None
    renew_ticks: int = 0

    def expired(self, now: float) -> bool:
        return now - self.last_renewed >= self.ttl

    def remaining_ttl(self, now: float) -> float:
        return max(self.ttl - (now - self.last_renewed), 0.0)


@dataclass
class _Pending:
    """An outstanding challenge this edge issued."""

    psk_index: int
    psk: bytes
    challenge: bytes
    purpose: int | None = None  # None for nodes
    join: ServerJoinBody | None = None


@dataclass
class _OutgoingJoin:
    """A server join this edge started toward ``via`` (network join or peering)."""

    via: EntityId
    purpose: int
    psk_index: int
    psk: bytes
    challenge: bytes | None = None
    responder_nonce: bytes | None = None


@dataclass
class _Handoff:
    node_id: EntityId
    target: EntityId | None = None
    stage: str = "recommend"


class EdgeServer(Endpoint):
    def __init__(self, prov: EdgeProvisioning, directory: Directory, config: EdgeConfig | None = None):
        super().__init__(prov.edge_id)
        self.prov = prov
        self.dk = prov.dk
        self.directory = directory
        self.config = config or EdgeConfig()
        self.cache: dict = {}
        self.peer_keys: dict = {}
        self.denylist: set = set()
        self.failures: dict = {}
        self.pdr_windows: dict = {}
        self.registered = False
        self.ns_key: bytes | None = None
        self.used_nonces: set = set()
        self.pending: dict = {}
        self.outgoing: dict = {}
        self.handoffs: dict = {}
        self.registrations: dict = {}
        self.bootstrap_nonce: bytes | None = None
        self.peer_seq: dict = {}
        self.delivered: list = []
        self.held: dict = {}

    @property
    def capacity(self) -> int:
        return self.prov.capacity

    @property
    def position(self):
        return self.prov.position

    def active_load(self) -> int:
        return sum(1 for e in self.cache.values() if e.active and not e.shared)

    # -- bootstrap and network join (this edge as newcomer) ------------------
    def bootstrap(self, now: float, rng) -> list:
        """Self-register as the first edge of the network."""
        self.bootstrap_nonce = crypto.make_challenge(rng, self.used_nonces)
        x, y = self.position
        body = RegisterEdgeBody(self.entity.id, x, y, self.capacity, self.bootstrap_nonce,
                                self.prov.name, self.prov.address).pack()
        return [self.emit(MsgType.REGISTER_EDGE, NAME_SERVER, body, self.dk, rng)]

    def join_network(self, via: EntityId, now: float, rng, purpose: int = JOIN_PURPOSE_NETWORK) -> list:
        index = sorted(self.prov.psk_set)[rng.randrange(len(self.prov.psk_set))]
        psk = self.prov.psk_set[index]
        self.outgoing[via] = _OutgoingJoin(via, purpose, index, psk)
        x, y = self.position
        body = ServerJoinBody(self.entity.id, index, bytes(psk), purpose, x, y, self.capacity,
                              self.prov.name, self.prov.address).pack()
        return [self.emit(MsgType.SERVER_JOIN_REQUEST, via, body, self.dk, rng)]

    # -- dispatch ------------------------------------------------------------
    def handle(self, frame: Frame, now: float, rng) -> list:
        if frame.sender in self.denylist:
            self.counters.attack_events += 1
            self.drop(now, frame, "denylisted")
            return []
        table = {
            MsgType.NODE_JOIN_REQUEST: self.handle_node_join,
            MsgType.SERVER_JOIN_REQUEST: self.handle_server_join,
            MsgType.CHALLENGE: self._on_challenge,
            MsgType.CHALLENGE_RESPONSE: self._on_challenge_response,
            MsgType.AUTH_ACK: self._on_auth_ack,
            MsgType.REGISTER_ACK: self._on_register_ack,
            MsgType.RECOMMEND_REPLY: self._on_recommend_reply,
            MsgType.HANDOFF_TRANSFER: self.receive_handoff,
            MsgType.HANDOFF_ACK: self._on_handoff_ack,
            MsgType.RECONNECT_REQUEST: self.handle_reconnect,
            MsgType.KEY_RENEW_CONFIRM: self._on_renew_confirm,
            MsgType.DATA_FRAME: self.handle_data,
            MsgType.REJECT: self._on_reject,
        }
        handler = table.get(frame.msg_type)
        if handler is None:
            raise UnexpectedMessage(f"edge does not accept {frame.msg_type.name}")
        if frame.msg_type == MsgType.DATA_FRAME:
            self.handle_data(frame, now)
            return []
        return handler(frame, now, rng)

    # -- helpers -------------------------------------------------------------
    def _reject(self, to: EntityId, reason: RejectReason, subject: EntityId | None, rng) -> Frame:
        body = RejectBody(int(reason), subject.id if subject else 0).pack()
        return self.emit(MsgType.REJECT, to, body, self.dk, rng)

    def _fail(self, sender: EntityId, now: float) -> None:
        self.failures[sender] = self.failures.get(sender, 0) + 1
        if self.failures[sender] >= self.config.failure_threshold:
            self._denylist(sender, now)

    def _denylist(self, who: EntityId, now: float) -> None:
        self.denylist.add(who)
        self.counters.denylist_size = len(self.denylist)
        self.cache.pop(who, None)
        self.peer_keys.pop(who, None)
        self.pending.pop(who, None)
        self.pdr_windows.pop(who, None)
        self.log(now, "Denylisted", who)

    def _peer_fresh(self, frame: Frame, now: float) -> bool:
        """Replay check for frames authenticated under a peer or Name Server key."""
        last = self.peer_seq.get(frame.sender)
        if last is not None and frame.seq <= last:
            self.replay(now, frame)
            return False
        self.peer_seq[frame.sender] = frame.seq
        return True

    def _node_fresh(self, entry: AuthCacheEntry, frame: Frame, now: float) -> bool:
        """Replay check plus PDR bookkeeping for frames under a node's session key."""
        last = entry.last_seq_seen
        if last is not None and frame.seq <= last:
            self.replay(now, frame)
            return False
        gap = 1 if last is None else frame.seq - last
        entry.last_seq_seen = frame.seq
        window = self.pdr_windows.setdefault(entry.node_id, PdrWindow(self.config.pdr_window))
        window.record(gap)
        return True

    def _new_window(self, node_id: EntityId) -> None:
        self.pdr_windows[node_id] = PdrWindow(self.config.pdr_window)

    # -- node join -----------------------------------------------------------
    def handle_node_join(self, frame: Frame, now: float, rng) -> list:
        try:
            body = NodeJoinBody.unpack(self.open(self.dk, frame))
        except (AuthFailure, LengthError):
            self.counters.attack_events += 1
            self.tamper(now, frame)
            return []
        if body.node_id != frame.sender.id or frame.sender.kind != Kind.NODE:
            self.counters.attack_events += 1
            self.tamper(now, frame, "join body does not match sender")
            return []
        entry = self.cache.get(frame.sender)
        if entry is not None and entry.last_seq_seen is not None and frame.seq <= entry.last_seq_seen:
            self.replay(now, frame)
            return []
        psk = self.prov.psk_set.get(body.psk_index)
        if psk is None or not crypto.digest_equal(psk, body.psk):
            self.counters.attack_events += 1
            self.log(now, "UnknownKey", frame.sender)
            out = [self._reject(frame.sender, RejectReason.UNKNOWN_KEY, frame.sender, rng)]
            self._fail(frame.sender, now)
            return out
        challenge = crypto.make_challenge(rng, self.used_nonces)
        self.pending[frame.sender] = _Pending(body.psk_index, psk, challenge)
        self.counters.challenges_issued += 1
        return [self.emit(MsgType.CHALLENGE, frame.sender, ChallengeBody(challenge).pack(), psk, rng)]

    def _on_challenge_response(self, frame: Frame, now: float, rng) -> list:
        return self.verify_node(frame, now, rng) if frame.sender.kind == Kind.NODE \
            else self._verify_server(frame, now, rng)

    def verify_node(self, frame: Frame, now: float, rng) -> list:
        pend = self.pending.get(frame.sender)
        if pend is None:
            if frame.sender in self.cache:
                self.replay(now, frame)
                return []
            raise NoPendingChallenge(f"no challenge outstanding for {frame.sender}")
        expected_fp = self.directory.fingerprints.get(frame.sender, b"")
        try:
            self.counters.aead_ops += 1
            responder_nonce = crypto.verify_challenge(pend.psk, pend.challenge, expected_fp, frame.payload)
        except (ChallengeFailed, LengthError):
            del self.pending[frame.sender]
            self.counters.attack_events += 1
            self.log(now, "ChallengeFailed", frame.sender)
            out = [self._reject(frame.sender, RejectReason.CHALLENGE_FAILED, frame.sender, rng)]
            self._fail(frame.sender, now)
            return out
        del self.pending[frame.sender]
        if frame.sender not in self.cache and len(self.cache) >= self.capacity:
            self.log(now, "CapacityExceeded", frame.sender)
            return [self._reject(frame.sender, RejectReason.CAPACITY_EXCEEDED, frame.sender, rng)]
        key = crypto.derive_session_key(pend.psk, pend.challenge, responder_nonce)
        self.counters.hash_ops += 1
        digest = self.directory.app_digests.get(frame.sender, bytes(crypto.DIGEST_LEN))
        self.cache[frame.sender] = AuthCacheEntry(
            frame.sender, key, digest, now, now, self.config.ttl, last_seq_seen=frame.seq)
        self._new_window(frame.sender)
        self.failures.pop(frame.sender, None)
        self.counters.full_auths += 1
        self.log(now, "NodeAuthenticated", frame.sender)
        body = NodeAuthAckBody(self.entity.id, digest).pack()
        return [self.emit(MsgType.AUTH_ACK, frame.sender, body, key, rng)]

    # -- server join (this edge as authenticator) -------------------------------
    def handle_server_join(self, frame: Frame, now: float, rng) -> list:
        if not self.registered:
            raise NotRegistered(f"{self.entity} is not registered and cannot authenticate")
        try:
            body = ServerJoinBody.unpack(self.open(self.dk, frame))
        except (AuthFailure, LengthError):
            self.counters.attack_events += 1
            self.tamper(now, frame)
            return []
        if body.edge_id != frame.sender.id or frame.sender.kind != Kind.EDGE:
            self.counters.attack_events += 1
            self.tamper(now, frame, "join body does not match sender")
            return []
        crossing = self.outgoing.get(frame.sender)
        if crossing is not None and body.purpose == JOIN_PURPOSE_PEERING and self.entity < frame.sender:
            # both sides asked to peer at once; the lower id's request wins
            self.drop(now, frame, "crossing peering join")
            return []
        psk = self.prov.psk_set.get(body.psk_index)
        if psk is None or not crypto.digest_equal(psk, body.psk):
            self.counters.attack_events += 1
            out = [self._reject(frame.sender, RejectReason.DENYLISTED, frame.sender, rng)]
            self._denylist(frame.sender, now)
            return out
        challenge = crypto.make_challenge(rng, self.used_nonces)
        self.pending[frame.sender] = _Pending(body.psk_index, psk, challenge, body.purpose, body)
        self.counters.challenges_issued += 1
        return [self.emit(MsgType.CHALLENGE, frame.sender, ChallengeBody(challenge).pack(), psk, rng)]

    def _verify_server(self, frame: Frame, now: float, rng) -> list:
        pend = self.pending.get(frame.sender)
        if pend is None:
            if frame.sender in self.peer_keys:
                self.replay(now, frame)
                return []
            raise NoPendingChallenge(f"no challenge outstanding for {frame.sender}")
        del self.pending[frame.sender]
        expected_fp = self.directory.fingerprints.get(frame.sender, b"")
        try:
            self.counters.aead_ops += 1
            responder_nonce = crypto.verify_challenge(pend.psk, pend.challenge, expected_fp, frame.payload)
        except (ChallengeFailed, LengthError):
            self.counters.attack_events += 1
            self.log(now, "ChallengeFailed", frame.sender)
            out = [self._reject(frame.sender, RejectReason.CHALLENGE_FAILED, frame.sender, rng)]
            self._fail(frame.sender, now)
            return out
        key = crypto.derive_session_key(pend.psk, pend.challenge, responder_nonce)
        self.counters.hash_ops += 1
        self.peer_keys[frame.sender] = key
        self.counters.peer_auths += 1
        self.log(now, "PeerAuthenticated", frame.sender,
                 "peering" if pend.purpose == JOIN_PURPOSE_PEERING else "network join")
        if pend.purpose == JOIN_PURPOSE_PEERING:
            ack = EdgeAuthAckBody(self.entity.id, bytes(16), bytes(16)).pack()
            frames = [self.emit(MsgType.AUTH_ACK, frame.sender, ack, key, rng)]
            if self.outgoing.get(frame.sender) and self.outgoing[frame.sender].purpose == JOIN_PURPOSE_PEERING:
                del self.outgoing[frame.sender]
            return frames + self._flush_peering(frame.sender, now, rng)
        j = pend.join
        reg_nonce = crypto.make_challenge(rng, self.used_nonces)
        self.registrations[frame.sender] = reg_nonce
        body = RegisterEdgeBody(j.edge_id, j.x, j.y, j.capacity, reg_nonce, j.name, j.address).pack()
        return [self.emit(MsgType.REGISTER_EDGE, NAME_SERVER, body, self.ns_key, rng)]

    def _on_register_ack(self, frame: Frame, now: float, rng) -> list:
        if frame.sender != NAME_SERVER:
            raise UnexpectedMessage("RegisterAck from a non-Name-Server sender")
        key = self.dk if self.ns_key is None else self.ns_key
        try:
            ack = RegisterAckBody.unpack(self.open(key, frame))
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        if not self._peer_fresh(frame, now):
            return []
        if ack.edge_id == self.entity.id and self.bootstrap_nonce is not None:
            if ack.status == RegisterStatus.OK:
                self.ns_key = crypto.derive_session_key(self.dk, self.bootstrap_nonce, ack.ns_nonce)
                self.counters.hash_ops += 1
                self.registered = True
                self.log(now, "Registered", NAME_SERVER, "bootstrap")
            self.bootstrap_nonce = None
            return []
        newcomer = edge(ack.edge_id)
        reg_nonce = self.registrations.pop(newcomer, None)
        if reg_nonce is None or newcomer not in self.peer_keys:
            self.drop(now, frame, "unsolicited RegisterAck")
            return []
        if ack.status != RegisterStatus.OK:
            self.peer_keys.pop(newcomer, None)
            self.log(now, "RegistrationRefused", newcomer, RegisterStatus(ack.status).name)
            return [self._reject(newcomer, RejectReason.NOT_REGISTERED, newcomer, rng)]
        body = EdgeAuthAckBody(self.entity.id, reg_nonce, ack.ns_nonce).pack()
        return [self.emit(MsgType.AUTH_ACK, newcomer, body, self.peer_keys[newcomer], rng)]

    # -- server join (this edge as joiner) -------------------------------------
    def _on_challenge(self, frame: Frame, now: float, rng) -> list:
        out = self.outgoing.get(frame.sender)
        if out is None or out.challenge is not None:
            raise UnexpectedMessage(f"Challenge from {frame.sender} without a join in progress")
        try:
            challenge = ChallengeBody.unpack(self.open(out.psk, frame)).challenge
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        response = crypto.solve_challenge(out.psk, challenge, self.prov.fingerprint, rng)
        self.counters.aead_ops += 1
        out.challenge = challenge
        out.responder_nonce = response[:crypto.NONCE_LEN]
        return [self.emit(MsgType.CHALLENGE_RESPONSE, frame.sender, response, None, rng)]

    def _on_auth_ack(self, frame: Frame, now: float, rng) -> list:
        out = self.outgoing.get(frame.sender)
        if out is None or out.challenge is None:
            raise UnexpectedMessage(f"AuthAck from {frame.sender} without a join in progress")
        key = crypto.derive_session_key(out.psk, out.challenge, out.responder_nonce)
        self.counters.hash_ops += 1
        try:
            ack = EdgeAuthAckBody.unpack(self.open(key, frame))
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        del self.outgoing[frame.sender]
        self.peer_keys[frame.sender] = key
        self.peer_seq[frame.sender] = frame.seq
        if out.purpose == JOIN_PURPOSE_NETWORK:
            self.ns_key = crypto.derive_session_key(self.dk, ack.reg_nonce, ack.ns_nonce)
            self.counters.hash_ops += 1
            self.registered = True
            self.log(now, "Registered", frame.sender, "network join")
            return []
        self.log(now, "PeeringEstablished", frame.sender)
        frames = []
        for held in self.held.pop(frame.sender, []):
            frames += self.receive_handoff(held, now, rng)
        return frames + self._flush_peering(frame.sender, now, rng)

    def _flush_peering(self, peer: EntityId, now: float, rng) -> list:
        """Send the handoffs that were waiting for a pairwise key with ``peer``."""
        frames = []
        for h in sorted(self.handoffs.values(), key=lambda h: h.node_id):
            if h.target == peer and h.stage == "peering":
                frames += self._transfer(h, now, rng)
        return frames

    # -- handoff, old edge side ------------------------------------------------
    def initiate_handoff(self, node_id: EntityId, node_position, now: float, rng) -> list:
        entry = self.cache.get(node_id)
        if entry is None or entry.shared or not entry.active:
            raise UnknownNode(f"{node_id} has no active entry at {self.entity}")
        if node_id in self.handoffs or entry.renew_nonce is not None:
            return []  # already moving, or a renewal must settle first
        if self.ns_key is None:
            raise NotRegistered(f"{self.entity} has no Name Server channel")
        self.handoffs[node_id] = _Handoff(node_id)
        x, y = node_position
        body = RecommendRequestBody(node_id.id, x, y, self.entity.id).pack()
        self.log(now, "HandoffStarted", node_id)
        return [self.emit(MsgType.RECOMMEND_REQUEST, NAME_SERVER, body, self.ns_key, rng)]

    def _on_recommend_reply(self, frame: Frame, now: float, rng) -> list:
        if frame.sender != NAME_SERVER or self.ns_key is None:
            raise UnexpectedMessage("RecommendReply from a non-Name-Server sender")
        try:
            reply = RecommendReplyBody.unpack(self.open(self.ns_key, frame))
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        if not self._peer_fresh(frame, now):
            return []
        node_id = node(reply.node_id)
        h = self.handoffs.get(node_id)
        entry = self.cache.get(node_id)
        if h is None or h.stage != "recommend" or entry is None:
            self.drop(now, frame, "no handoff awaiting recommendation")
            return []
        if not reply.found:
            del self.handoffs[node_id]
            self.log(now, "NoRecommendation", node_id)
            directive = DisconnectBody(0, DISCONNECT_NONE).pack()
            out = [self.emit(MsgType.DISCONNECT, node_id, directive, entry.session_key, rng)]
            del self.cache[node_id]
            return out
        target = edge(reply.edge_id)
        h.target = target
        if self.config.mode == BASELINE:
            del self.handoffs[node_id]
            directive = DisconnectBody(target.id, DISCONNECT_REJOIN).pack()
            out = [self.emit(MsgType.DISCONNECT, node_id, directive, entry.session_key, rng)]
            del self.cache[node_id]
            self.pdr_windows.pop(node_id, None)
            self.log(now, "HandoffDirected", node_id, f"rejoin at {target}")
            return out
        if target not in self.peer_keys:
            h.stage = "peering"
            if target in self.outgoing:
                return []
            return self.join_network(target, now, rng, purpose=JOIN_PURPOSE_PEERING)
        return self._transfer(h, now, rng)

    def _transfer(self, h: _Handoff, now: float, rng) -> list:
        entry = self.cache.get(h.node_id)
        if entry is None:
            del self.handoffs[h.node_id]
            return []
        body = HandoffTransferBody(h.node_id.id, bytes(entry.session_key), entry.app_digest,
                                   entry.remaining_ttl(now)).pack()
        frames = [self.emit(MsgType.HANDOFF_TRANSFER, h.target, body, self.peer_keys[h.target], rng)]
        entry.shared = True
        entry.renew_nonce = None
        h.stage = "transferred"
        directive = DisconnectBody(h.target.id, DISCONNECT_MIGRATE).pack()
        frames.append(self.emit(MsgType.DISCONNECT, h.node_id, directive, entry.session_key, rng))
        self.log(now, "HandoffTransferred", h.node_id, f"to {h.target}")
        return frames

    def _on_handoff_ack(self, frame: Frame, now: float, rng) -> list:
        key = self.peer_keys.get(frame.sender)
        if key is None:
            self.drop(now, frame, "unknown peer")
            return []
        try:
            ack = HandoffAckBody.unpack(self.open(key, frame))
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        if not self._peer_fresh(frame, now):
            return []
        h = self.handoffs.pop(node(ack.node_id), None)
        if h is not None:
            self.log(now, "HandoffAcked", h.node_id, f"by {frame.sender}")
        return []

    def _on_reject(self, frame: Frame, now: float, rng) -> list:
        try:
            reject = RejectBody.unpack(self.open(self.dk, frame))
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        try:
            reason = RejectReason(reject.reason).name
        except ValueError:
            reason = str(reject.reason)
        self.outgoing.pop(frame.sender, None)
        self.held.pop(frame.sender, None)
        if frame.sender.kind == Kind.EDGE and reject.subject:
            h = self.handoffs.get(node(reject.subject))
            if h is not None and h.target == frame.sender:
                del self.handoffs[h.node_id]
        self.log(now, "RejectedBy", frame.sender, reason)
        return []

    # -- handoff, new edge side ------------------------------------------------
    def receive_handoff(self, frame: Frame, now: float, rng) -> list:
        key = self.peer_keys.get(frame.sender)
        out = self.outgoing.get(frame.sender)
        if key is None and out is not None and out.challenge is not None:
            # overtook the AuthAck that completes our peering with the sender
            self.held.setdefault(frame.sender, []).append(frame)
            self.log(now, "TransferHeld", frame.sender)
            return []
        if key is None:
            self.counters.attack_events += 1
            self.drop(now, frame, "transfer from unauthenticated peer")
            return []
        try:
            t = HandoffTransferBody.unpack(self.open(key, frame))
        except (AuthFailure, LengthError):
            self.counters.attack_events += 1
            self.tamper(now, frame)
            return []
        if not self._peer_fresh(frame, now):
            return []
        node_id = node(t.node_id)
        ack = HandoffAckBody(t.node_id).pack()
        current = self.cache.get(node_id)
        if current is not None and current.origin == LOCAL and not current.shared:
            # the node already re-authenticated here; the transferred key is stale
            self.log(now, "TransferSuperseded", node_id)
            return [self.emit(MsgType.HANDOFF_ACK, frame.sender, ack, key, rng)]
        if node_id in self.denylist:
            return [self._reject(frame.sender, RejectReason.DENYLISTED, node_id, rng)]
        if current is None and len(self.cache) >= self.capacity:
            self.log(now, "CapacityExceeded", node_id)
            return [self._reject(frame.sender, RejectReason.CAPACITY_EXCEEDED, node_id, rng)]
        ttl = self.config.ttl
        last_seq = current.last_seq_seen if current is not None else None
        self.cache[node_id] = AuthCacheEntry(
            node_id, crypto.SymmetricKey(t.session_key), t.app_digest, now,
            now - (ttl - t.remaining_ttl), ttl, origin=MIGRATED, last_seq_seen=last_seq, active=False)
        self.log(now, "HandoffReceived", node_id, f"from {frame.sender}")
        return [self.emit(MsgType.HANDOFF_ACK, frame.sender, ack, key, rng)]

    def handle_reconnect(self, frame: Frame, now: float, rng) -> list:
        entry = self.cache.get(frame.sender)
        if entry is None or entry.origin != MIGRATED or entry.shared:
            self.log(now, "NoMigratedEntry", frame.sender)
            return [self._reject(frame.sender, RejectReason.NOT_REGISTERED, frame.sender, rng)]
        try:
            req = ReconnectBody.unpack(self.open(entry.session_key, frame))
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        if not self._node_fresh(entry, frame, now):
            return []
        if not crypto.digest_equal(req.app_digest, entry.app_digest):
            del self.cache[frame.sender]
            self.pdr_windows.pop(frame.sender, None)
            self.log(now, "DigestMismatch", frame.sender)
            return [self._reject(frame.sender, RejectReason.DIGEST_MISMATCH, frame.sender, rng)]
        entry.active = True
        self._new_window(frame.sender)
        self.pdr_windows[frame.sender].record(1)
        self.counters.handoffs_completed += 1
        self.log(now, "NodeReconnected", frame.sender)
        return [self.emit(MsgType.CONNECT_ACK, frame.sender, ConnectAckBody(self.entity.id).pack(),
                          entry.session_key, rng)]

    # -- key renewal -------------------------------------------------------------
    def renew_keys(self, now: float, rng) -> list:
        frames = []
        for node_id in sorted(self.cache):
            entry = self.cache[node_id]
            if entry.renew_nonce is not None:
                entry.renew_ticks += 1
                if entry.renew_ticks >= self.config.renew_timeout_ticks:
                    del self.cache[node_id]
                    self.pdr_windows.pop(node_id, None)
                    self.log(now, "RenewTimeout", node_id)
                continue
            if not entry.expired(now):
                continue
            if entry.shared or not entry.active:
                # responsibility moved to the new edge (or the node never arrived)
                del self.cache[node_id]
                self.pdr_windows.pop(node_id, None)
                self.log(now, "EntryRetired", node_id, "shared" if entry.shared else "inactive")
                continue
            if node_id in self.handoffs:
                continue
            entry.renew_nonce = crypto.make_challenge(rng, self.used_nonces)
            entry.renew_ticks = 0
            frames.append(self.emit(MsgType.KEY_RENEW, node_id, KeyRenewBody(entry.renew_nonce).pack(),
                                    entry.session_key, rng))
        return frames

    def _on_renew_confirm(self, frame: Frame, now: float, rng) -> list:
        entry = self.cache.get(frame.sender)
        if entry is None:
            raise UnknownSender(f"{frame.sender} has no cache entry")
        if entry.renew_nonce is None:
            if entry.last_seq_seen is not None and frame.seq <= entry.last_seq_seen:
                self.replay(now, frame)
            else:
                self.drop(now, frame, "no renewal outstanding")
            return []
        responder_nonce = frame.payload[:crypto.NONCE_LEN]
        new_key = crypto.derive_session_key(entry.session_key, entry.renew_nonce, responder_nonce)
        self.counters.hash_ops += 1
        try:
            body = KeyRenewConfirmBody.unpack(self.open(new_key, frame, prefix_len=crypto.NONCE_LEN))
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []
        if not crypto.digest_equal(body.renew_nonce, entry.renew_nonce):
            self.tamper(now, frame, "renew nonce mismatch")
            return []
        if not self._node_fresh(entry, frame, now):
            return []
        entry.session_key = new_key
        entry.last_renewed = now
        entry.renew_nonce = None
        entry.renew_ticks = 0
        self.log(now, "KeyRenewed", frame.sender)
        return []

    # -- data plane and PDR ----------------------------------------------------
    def handle_data(self, frame: Frame, now: float, rng=None):
        """Returns the delivered payload, or None when the frame was dropped."""
        entry = self.cache.get(frame.sender)
        if entry is None or not entry.active:
            self.drop(now, frame, "unknown sender")
            return None
        try:
            payload = self.open(entry.session_key, frame)
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return None
        if not self._node_fresh(entry, frame, now):
            return None
        self.delivered.append((frame.sender, payload))
        return payload

    def pdr_check(self, now: float) -> list:
        alerts = []
        for node_id in sorted(self.pdr_windows):
            w = self.pdr_windows[node_id]
            if w.expected < w.window_len or w.ratio >= self.config.pdr_threshold:
                continue
            self.counters.jamming_alerts += 1
            self.log(now, "JammingSuspected", node_id, f"pdr={w.delivered}/{w.expected}")
            alerts.append(node_id)
            w.reset()
        return alerts

    def on_tick(self, now: float, rng) -> list:
        frames = self.renew_keys(now, rng)
        self.pdr_check(now)
        return frames

    def state_digest(self) -> tuple:
        """Protocol state without counters or logs (used by side-effect checks)."""
        cache = tuple(sorted(
            (str(k), bytes(e.session_key), e.app_digest, e.shared, e.origin, e.last_seq_seen,
             e.active, e.renew_nonce, e.last_renewed)
            for k, e in self.cache.items()))
        return (cache, tuple(sorted(map(str, self.peer_keys))), tuple(sorted(map(str, self.denylist))),
                tuple(sorted(map(str, self.pending))), tuple(sorted(map(str, self.handoffs))),
                self.registered, len(self.delivered))

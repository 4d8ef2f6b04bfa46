"""Mobile IoT node state machine."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import crypto
from .endpoint import Endpoint
from .errors import AuthFailure, InvalidPhase, LengthError, NotConnected, UnexpectedMessage
from .messages import (
    DISCONNECT_MIGRATE, DISCONNECT_REJOIN, ChallengeBody, ConnectAckBody, DisconnectBody,
    EntityId, Frame, Kind, KeyRenewBody, KeyRenewConfirmBody, MsgType, NodeAuthAckBody,
    NodeJoinBody, ReconnectBody, RejectBody, RejectReason, edge,
)


class Phase(enum.Enum):
    IDLE = "Idle"
    JOINING = "Joining"
    AWAITING_ACK = "AwaitingAck"
    CONNECTED = "Connected"
    RECONNECTING = "Reconnecting"


@dataclass
class NodeProvisioning:
    node_id: EntityId
    dk: bytes
    psk_set: list  # [(index, key)]
    fingerprint: bytes
    app_image: bytes
    model: str = ""

    def __post_init__(self):
        if self.node_id.kind != Kind.NODE:
            raise ValueError("node_id must be a node entity")
        if not self.psk_set:
            raise ValueError("psk_set must not be empty")
        indices = [i for i, _ in self.psk_set]
        if len(set(indices)) != len(indices):
            raise ValueError("psk indices must be unique")
        self.dk = crypto.SymmetricKey.provisioned(self.dk)
        self.psk_set = [(i, crypto.SymmetricKey.provisioned(k)) for i, k in self.psk_set]


@dataclass
class _PendingJoin:
    edge: EntityId
    psk_index: int
    psk: bytes
    challenge: bytes | None = None
    responder_nonce: bytes | None = None


class NodeAgent(Endpoint):
    def __init__(self, prov: NodeProvisioning):
        super().__init__(prov.node_id)
        self.prov = prov
        self.app_image = bytes(prov.app_image)
        self.phase = Phase.IDLE
        self.current_edge: EntityId | None = None
        self.session_key: bytes | None = None
        self.key_created_at: float | None = None
        self.pending: _PendingJoin | None = None
        self.reconnect_target: EntityId | None = None
        self.challenges_answered = 0
        self.handoff_rejoin = False

    # -- operations ------------------------------------------------------
    def initiate_join(self, target_edge: EntityId, now: float, rng) -> list:
        if self.phase != Phase.IDLE:
            raise InvalidPhase(f"join requires Idle, node is {self.phase.value}")
        index, psk = self.prov.psk_set[rng.randrange(len(self.prov.psk_set))]
        self.pending = _PendingJoin(target_edge, index, psk)
        self.phase = Phase.JOINING
        body = NodeJoinBody(self.entity.id, index, bytes(psk)).pack()
        self.log(now, "JoinStarted", target_edge, f"psk_index={index}")
        return [self.emit(MsgType.NODE_JOIN_REQUEST, target_edge, body, self.prov.dk, rng)]

    def send_data(self, payload: bytes, now: float, rng) -> Frame:
        if self.phase != Phase.CONNECTED:
            raise NotConnected(f"node is {self.phase.value}")
        return self.emit(MsgType.DATA_FRAME, self.current_edge, payload, self.session_key, rng)

    def code_signature(self) -> bytes:
        return self.hash(self.app_image)

    def handle(self, frame: Frame, now: float, rng) -> list:
        handler = {
            MsgType.CHALLENGE: self._on_challenge,
            MsgType.AUTH_ACK: self._on_auth_ack,
            MsgType.KEY_RENEW: self._on_key_renew,
            MsgType.DISCONNECT: self._on_disconnect,
            MsgType.CONNECT_ACK: self._on_connect_ack,
            MsgType.REJECT: self._on_reject,
        }.get(frame.msg_type)
        if handler is None:
            raise UnexpectedMessage(f"node does not accept {frame.msg_type.name}")
        try:
            return handler(frame, now, rng)
        except (AuthFailure, LengthError):
            self.tamper(now, frame)
            return []

    # -- handlers ----------------------------------------------------------
    def _expect(self, frame: Frame, phase: Phase, peer: EntityId | None):
        if self.phase != phase or frame.sender != peer:
            raise UnexpectedMessage(f"{frame.msg_type.name} from {frame.sender} while {self.phase.value}")

    def _on_challenge(self, frame, now, rng):
        self._expect(frame, Phase.JOINING, self.pending and self.pending.edge)
        challenge = ChallengeBody.unpack(self.open(self.pending.psk, frame)).challenge
        response = crypto.solve_challenge(self.pending.psk, challenge, self.prov.fingerprint, rng)
        self.counters.aead_ops += 1
        self.challenges_answered += 1
        self.pending.challenge = challenge
        self.pending.responder_nonce = response[:crypto.NONCE_LEN]
        self.phase = Phase.AWAITING_ACK
        return [self.emit(MsgType.CHALLENGE_RESPONSE, frame.sender, response, None, rng)]

    def _on_auth_ack(self, frame, now, rng):
        self._expect(frame, Phase.AWAITING_ACK, self.pending and self.pending.edge)
        p = self.pending
        key = crypto.derive_session_key(p.psk, p.challenge, p.responder_nonce)
        self.counters.hash_ops += 1
        ack = NodeAuthAckBody.unpack(self.open(key, frame))
        if not crypto.digest_equal(ack.app_digest, self.code_signature()):
            self.log(now, "DigestAckMismatch", frame.sender)
        self.session_key = key
        self.key_created_at = now
        self.current_edge = frame.sender
        self.pending = None
        self.phase = Phase.CONNECTED
        self.counters.full_auths += 1
        self.log(now, "Authenticated", frame.sender)
        if self.handoff_rejoin:
            self.handoff_rejoin = False
            self.counters.handoffs_completed += 1
            self.log(now, "HandoffCompleted", frame.sender, "rejoin")
        return []

    def _on_key_renew(self, frame, now, rng):
        self._expect(frame, Phase.CONNECTED, self.current_edge)
        nonce_r = KeyRenewBody.unpack(self.open(self.session_key, frame)).renew_nonce
        responder_nonce = rng.randbytes(crypto.NONCE_LEN)
        new_key = crypto.derive_session_key(self.session_key, nonce_r, responder_nonce)
        self.counters.hash_ops += 1
        self.session_key = new_key
        self.key_created_at = now
        body = KeyRenewConfirmBody(nonce_r).pack()
        return [self.emit(MsgType.KEY_RENEW_CONFIRM, frame.sender, body, new_key, rng,
                          prefix=responder_nonce)]

    def _on_disconnect(self, frame, now, rng):
        self._expect(frame, Phase.CONNECTED, self.current_edge)
        directive = DisconnectBody.unpack(self.open(self.session_key, frame))
        target = edge(directive.target_edge)
        if directive.mode == DISCONNECT_MIGRATE:
            self.phase = Phase.RECONNECTING
            self.reconnect_target = target
            body = ReconnectBody(self.code_signature(), rng.randbytes(crypto.NONCE_LEN)).pack()
            self.log(now, "Reconnecting", target)
            return [self.emit(MsgType.RECONNECT_REQUEST, target, body, self.session_key, rng)]
        self._reset()
        if directive.mode == DISCONNECT_REJOIN:
            self.handoff_rejoin = True
            return self.initiate_join(target, now, rng)
        self.log(now, "NoRecommendation", frame.sender)
        return []

    def _on_connect_ack(self, frame, now, rng):
        self._expect(frame, Phase.RECONNECTING, self.reconnect_target)
        ConnectAckBody.unpack(self.open(self.session_key, frame))
        self.current_edge = frame.sender
        self.reconnect_target = None
        self.phase = Phase.CONNECTED
        self.counters.handoffs_completed += 1
        self.log(now, "HandoffCompleted", frame.sender)
        return []

    def _on_reject(self, frame, now, rng):
        peers = {self.current_edge, self.reconnect_target, self.pending and self.pending.edge}
        if frame.sender not in peers:
            raise UnexpectedMessage(f"Reject from unrelated {frame.sender}")
        reject = RejectBody.unpack(self.open(self.prov.dk, frame))
        try:
            reason = RejectReason(reject.reason)
        except ValueError:
            reason = reject.reason
        rejoin = self.phase == Phase.RECONNECTING and reason == RejectReason.NOT_REGISTERED
        target = self.reconnect_target
        self.log(now, "Rejected", frame.sender, getattr(reason, "name", str(reason)))
        self._reset()
        self.handoff_rejoin = rejoin
        if rejoin:
            # the new edge holds no migrated entry: start over with a full join
            return self.initiate_join(target, now, rng)
        return []

    def _reset(self):
        self.phase = Phase.IDLE
        self.session_key = None
        self.current_edge = None
        self.key_created_at = None
        self.pending = None
        self.reconnect_target = None

    def state_digest(self) -> tuple:
        """Protocol state without counters or logs (used by side-effect checks)."""
        return (self.phase, self.current_edge, self.session_key, self.reconnect_target,
                self.pending and (self.pending.edge, self.pending.challenge), self.app_image)

"""Deterministic discrete-event harness wiring nodes, edges and the Name Server.

Everything random comes from one ``random.Random`` seeded by the scenario.
Draws happen in event order.  Inside an event the link draws come first
(drop, then jitter, then the tamper bit if a tamper rule fires), and the
receiving entity's own draws (nonces, challenges) follow as it handles the frame.
Provisioning draws happen once, before the first event.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import Counter
from dataclasses import dataclass, field

from . import crypto
from .edge import BASELINE, Directory, EdgeConfig, EdgeProvisioning, EdgeServer
from .errors import CodecError, EdgeHandoffError, NoCapturedFrame, UnknownLink
from .messages import (
    HEADER_LEN, JOIN_PURPOSE_NETWORK, NAME_SERVER, EntityId, Frame, Kind, MsgType, NodeJoinBody,
    ServerJoinBody, decode_frame, edge, encode_frame, node, seal_body,
)
from .metrics import MetricsRecord, RunMetrics, compare_report, energy_proxy
from .nameserver import NameServer, Weights
from .node import NodeAgent, NodeProvisioning, Phase
from .scenario import AdversarySpec, FrameFilter, LinkParams, ScenarioSpec, app_image_for

# event kinds, in the order their payloads are documented
DELIVER = "Deliver"
TICK = "TimerTick"
ADVERSARY = "AdversaryAction"
ACTION = "ScenarioAction"


@dataclass(frozen=True)
class LinkModel:
    latency_base: float = 0.01
    latency_jitter: float = 0.0
    drop_prob: float = 0.0

    @classmethod
    def from_params(cls, p: LinkParams) -> "LinkModel":
        return cls(p.latency, p.jitter, p.drop)


@dataclass(order=True)
class Event:
    time: float
    seq: int
    kind: str = field(compare=False)
    data: tuple = field(compare=False, default=())


@dataclass
class _InFlight:
    raw: bytes
    src: EntityId
    dst: EntityId
    sent_at: float
    tampered: bool = False
    origin: str = "entity"  # entity | replay | forge


@dataclass
class _Rule:
    spec: AdversarySpec
    remaining: int


def _link_key(a: EntityId, b: EntityId) -> tuple:
    return (a, b) if a <= b else (b, a)


def _parse_link(text: str) -> tuple:
    a, _, b = text.partition("-")
    return _link_key(EntityId.parse(a), EntityId.parse(b))


def position_at(waypoints, t: float) -> tuple:
    """Piecewise-linear interpolation; clamps before the first and after the last waypoint."""
    if t <= waypoints[0][0]:
        return (waypoints[0][1], waypoints[0][2])
    for (t0, x0, y0), (t1, x1, y1) in zip(waypoints, waypoints[1:]):
        if t <= t1:
            f = (t - t0) / (t1 - t0)
            return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
    return (waypoints[-1][1], waypoints[-1][2])


def _matches(flt: FrameFilter, raw: bytes, src: EntityId, dst: EntityId) -> bool:
    if flt.sender is not None and EntityId.parse(flt.sender) != src:
        return False
    if flt.receiver is not None and EntityId.parse(flt.receiver) != dst:
        return False
    if flt.msg_type is not None:
        return len(raw) > 3 and raw[3] == MsgType[flt.msg_type]
    return True


def _msg_name(raw: bytes) -> str:
    try:
        return MsgType(raw[3]).name
    except (IndexError, ValueError):
        return "?"


@dataclass
class RunResult:
    transcript: list
    metrics: RunMetrics
    world: "World"

    @property
    def transcript_text(self) -> str:
        return "".join(line + "\n" for line in self.transcript)

    @property
    def violations(self) -> list:
        return self.world.violations


class World:
    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.queue: list = []
        self._seq = 0
        self.now = 0.0
        self.transcript: list = []
        self.violations: list = []
        self.stats = Counter()
        self.captures: dict = {}
        self.capture_rules: list = []
        self.tamper_rules: list = []
        self.adversary_ids: set = set()
        self.adversary_seq: Counter = Counter()
        self.denylisted_at: dict = {}
        self.ever_handed_off: set = set()
        self._event_marks: dict = {}
        self._load_reported: dict = {}
        self._data_counter: Counter = Counter()

        self.links = {}
        self.default_link = LinkModel.from_params(spec.links.default)
        for o in spec.links.overrides:
            self.links[_link_key(EntityId.parse(o.a), EntityId.parse(o.b))] = LinkModel.from_params(o)

        self._provision()

    # -- setup -----------------------------------------------------------------
    def _provision(self) -> None:
        spec, p = self.spec, self.spec.params
        rng = self.rng
        self.dk = crypto.random_key(rng)
        self.psks = [crypto.random_key(rng) for _ in range(p.psk_count)]
        self.directory = Directory()
        self.ns = NameServer(self.dk, Weights(p.weight_distance, p.weight_load, p.distance_norm))
        self.entities: dict = {NAME_SERVER: self.ns}
        self.edges: dict = {}
        self.nodes: dict = {}
        self.node_specs: dict = {}
        cfg = EdgeConfig(p.ttl, p.renew_timeout_ticks, p.failure_threshold, p.pdr_threshold,
                         p.pdr_window, spec.mode)
        for e in spec.edges:
            eid = edge(e.id)
            fp = crypto.device_fingerprint(eid.encode(), e.model, rng.randbytes(16))
            self.directory.fingerprints[eid] = fp
            prov = EdgeProvisioning(eid, self.dk, dict(enumerate(self.psks)), fp, e.name,
                                    e.address or f"{e.name}.edge.local", tuple(e.position), e.capacity, e.model)
            self.edges[eid] = self.entities[eid] = EdgeServer(prov, self.directory, cfg)
        for n in spec.nodes:
            nid = node(n.id)
            fp = crypto.device_fingerprint(nid.encode(), n.model, rng.randbytes(16))
            image = app_image_for(spec, n)
            self.directory.fingerprints[nid] = fp
            self.directory.app_digests[nid] = crypto.lw_hash(image)
            prov = NodeProvisioning(nid, self.dk, [(i, self.psks[i]) for i in n.psk_indices], fp, image, n.model)
            self.nodes[nid] = self.entities[nid] = NodeAgent(prov)
            self.node_specs[nid] = n

    def _schedule_initial(self) -> None:
        spec = self.spec
        for i, e in enumerate(spec.edges):
            at = e.join_at if e.join_at is not None else 0.2 * i
            self.schedule(at, ACTION, ("edge_up", edge(e.id)))
        default_node_at = 0.2 * len(spec.edges) + 0.5
        for n in spec.nodes:
            nid = node(n.id)
            at = n.join_at if n.join_at is not None else default_node_at
            self.schedule(at, ACTION, ("join", nid, n.initial_edge))
            if n.data_interval is not None:
                start = n.data_start if n.data_start is not None else at + 0.5
                self.schedule(start, ACTION, ("data", nid))
        for a in spec.actions:
            self.schedule(a.time, ACTION, (a.kind, node(a.node), a.edge))
        for a in spec.adversary:
            self.schedule(a.time, ADVERSARY, (a,))
        if self.edges:
            self.schedule(spec.params.tick_interval, TICK, (1,))
        if spec.test_hooks.force_invariant_violation:
            self.schedule(0.0, ACTION, ("force_violation",))

    def schedule(self, time: float, kind: str, data: tuple) -> Event:
        ev = Event(time, self._seq, kind, data)
        self._seq += 1
        heapq.heappush(self.queue, ev)
        return ev

    # -- transcript --------------------------------------------------------------
    def record(self, kind: str, sender, receiver, msg: str, outcome: str, detail: str = "") -> None:
        self.transcript.append(
            f"{self.now:.6f} | {kind} | {sender if sender is not None else '-'} | "
            f"{receiver if receiver is not None else '-'} | {msg} | {outcome} | {detail}")

    def _flush_events(self, ent) -> None:
        start = self._event_marks.get(ent.entity, 0)
        for ev in ent.events[start:]:
            self.record("EVENT", ent.entity, ev.subject, "-", ev.kind, ev.detail)
            self._on_entity_event(ent, ev)
        self._event_marks[ent.entity] = len(ent.events)

    # -- links -----------------------------------------------------------------
    def link(self, a: EntityId, b: EntityId) -> LinkModel:
        known = self.entities.keys() | self.adversary_ids
        if a not in known or b not in known:
            raise UnknownLink(f"no link between {a} and {b}")
        return self.links.get(_link_key(a, b), self.default_link)

    def set_drop(self, which: str, value: float) -> None:
        if which == "*":
            self.default_link = LinkModel(self.default_link.latency_base, self.default_link.latency_jitter, value)
            self.links = {k: LinkModel(m.latency_base, m.latency_jitter, value) for k, m in self.links.items()}
            return
        key = _parse_link(which)
        m = self.links.get(key, self.default_link)
        self.links[key] = LinkModel(m.latency_base, m.latency_jitter, value)

    def send(self, raw: bytes, src: EntityId, dst: EntityId, now: float, origin: str = "entity"):
        """Put one frame on the link; returns the scheduled Deliver event or None if dropped."""
        link = self.link(src, dst)
        msg = _msg_name(raw)
        self.stats["frames_sent"] += 1
        if origin == "entity":
            self.entities[src].counters.bytes_sent += len(raw)
        self.record("SEND", src, dst, msg, "sent" if origin == "entity" else origin, f"len=0x{len(raw):x}")
        for rule in self.capture_rules:
            if rule.remaining > 0 and _matches(rule.spec.filter, raw, src, dst):
                rule.remaining -= 1
                self.captures.setdefault(rule.spec.ref, []).append((raw, src, dst))
                self.record("CAPTURE", src, dst, msg, rule.spec.ref, f"len=0x{len(raw):x}")
        if self.rng.random() < link.drop_prob:
            self.stats["frames_dropped"] += 1
            self.record("DROP", src, dst, msg, "lost", f"len=0x{len(raw):x}")
            return None
        delay = link.latency_base
        if link.latency_jitter > 0:
            delay += self.rng.uniform(0.0, link.latency_jitter)
        tampered = False
        for rule in self.tamper_rules:
            if rule.remaining > 0 and _matches(rule.spec.filter, raw, src, dst):
                rule.remaining -= 1
                raw = self._flip(raw, rule.spec.bit_index)
                tampered = True
                self.stats["frames_tampered"] += 1
                break
        return self.schedule(now + delay, DELIVER, (_InFlight(raw, src, dst, now, tampered, origin),))

    def _flip(self, raw: bytes, bit_index) -> bytes:
        nbits = len(raw) * 8
        if bit_index is None:
            lo = HEADER_LEN * 8 if len(raw) > HEADER_LEN else 0
            bit = self.rng.randrange(lo, nbits)
        else:
            bit = bit_index % nbits
        buf = bytearray(raw)
        buf[bit // 8] ^= 0x80 >> (bit % 8)
        self.record("TAMPER", None, None, _msg_name(raw), "flipped", f"bit={bit} len=0x{len(raw):x}")
        return bytes(buf)

    def _send_all(self, src, frames, now) -> None:
        for f in frames:
            try:
                self.send(encode_frame(f), src, f.receiver, now)
            except UnknownLink as exc:
                self.stats["frames_unroutable"] += 1
                self.record("DROP", src, f.receiver, f.msg_type.name, "UnknownLink", str(exc))

    # -- adversary ---------------------------------------------------------------
    def adversary_step(self, a: AdversarySpec, now: float) -> list:
        """Apply one scripted adversary action; returns the events it scheduled."""
        scheduled = []
        if a.action == "capture":
            self.capture_rules.append(_Rule(a, a.count))
            self.record("ADVERSARY", None, None, a.filter.msg_type or "*", "capture-armed", f"ref={a.ref}")
        elif a.action == "tamper":
            self.tamper_rules.append(_Rule(a, a.count))
            self.record("ADVERSARY", None, None, a.filter.msg_type or "*", "tamper-armed", f"count={a.count}")
        elif a.action == "set_drop":
            self.set_drop(a.link, a.value)
            self.record("ADVERSARY", None, None, "-", "set-drop", f"link={a.link} value={a.value}")
        elif a.action == "replay":
            frames = self.captures.get(a.ref)
            if not frames:
                raise NoCapturedFrame(f"nothing captured under {a.ref!r}")
            for i in range(a.count):
                raw, src, dst = frames[i % len(frames)]
                scheduled.append(self.schedule(now + i * a.interval, ADVERSARY, ("inject", raw, src, dst, "replay")))
        elif a.action == "forge_join":
            fake = EntityId(Kind.NODE if a.role == "node" else Kind.EDGE, a.fake_id)
            self.adversary_ids.add(fake)
            for i in range(a.count):
                scheduled.append(self.schedule(now + i * a.interval, ADVERSARY,
                                               ("forge", fake, edge(a.target))))
        return scheduled

    def _forge(self, fake: EntityId, target: EntityId) -> bytes:
        known = set(self.psks)
        while True:
            key = self.rng.randbytes(crypto.KEY_LEN)
            if key not in known and any(key):
                break
        index = self.rng.randrange(len(self.psks))
        if fake.kind == Kind.NODE:
            body = NodeJoinBody(fake.id, index, key).pack()
            mt = MsgType.NODE_JOIN_REQUEST
        else:
            body = ServerJoinBody(fake.id, index, key, JOIN_PURPOSE_NETWORK, 0.0, 0.0, 1,
                                  f"rogue-{fake.id}", f"rogue-{fake.id}.local").pack()
            mt = MsgType.SERVER_JOIN_REQUEST
        seq = self.adversary_seq[(fake, target)]
        self.adversary_seq[(fake, target)] += 1
        frame = Frame(mt, fake, target, seq)
        return encode_frame(Frame(mt, fake, target, seq, seal_body(self.dk, frame, body, self.rng)))

    # -- event handlers ------------------------------------------------------------
    def _deliver(self, f: _InFlight) -> None:
        now = self.now
        if now < f.sent_at:
            self.violate(f"causality: delivery at {now} precedes send at {f.sent_at}")
        self.stats["frames_delivered"] += 1
        msg = _msg_name(f.raw)
        if f.dst in self.adversary_ids:
            self.record("DELIVER", f.src, f.dst, msg, "adversary", f"len=0x{len(f.raw):x}")
            if msg in ("AUTH_ACK", "CONNECT_ACK"):
                self.violate(f"adversary {f.dst} received {msg}")
            return
        ent = self.entities[f.dst]
        try:
            frame = decode_frame(f.raw)
        except CodecError as exc:
            ent.counters.tampers_detected += 1
            ent.counters.dropped_frames += 1
            ent.log(now, "TamperDetected", f.src, f"malformed: {type(exc).__name__}")
            self.record("DELIVER", f.src, f.dst, msg, "TamperDetected", f"len=0x{len(f.raw):x}")
            self._flush_events(ent)
            return
        if frame.receiver != ent.entity:
            ent.counters.tampers_detected += 1
            ent.counters.dropped_frames += 1
            ent.log(now, "TamperDetected", frame.sender, f"misaddressed to {frame.receiver}")
            self.record("DELIVER", f.src, f.dst, msg, "TamperDetected", f"len=0x{len(f.raw):x}")
            self._flush_events(ent)
            return

        denied = isinstance(ent, EdgeServer) and frame.sender in ent.denylist
        before_digest = ent.state_digest() if (f.tampered or denied) else None
        before = ent.counters.as_dict()
        out, outcome = [], None
        try:
            out = ent.handle(frame, now, self.rng) or []
        except EdgeHandoffError as exc:
            ent.counters.dropped_frames += 1
            outcome = type(exc).__name__
        after = ent.counters
        if outcome is None:
            if after.tampers_detected > before["tampers_detected"]:
                outcome = "TamperDetected"
            elif after.replays_detected > before["replays_detected"]:
                outcome = "ReplayDetected"
            elif after.dropped_frames > before["dropped_frames"]:
                outcome = "dropped"
            else:
                outcome = "accepted"
        self.record("DELIVER", f.src, f.dst, msg, outcome, f"len=0x{len(f.raw):x}")
        if f.tampered and outcome == "TamperDetected" and ent.state_digest() != before_digest:
            self.violate(f"tampered {msg} changed state at {ent.entity}")
        if denied and (out or ent.state_digest() != before_digest):
            self.violate(f"denylisted {frame.sender} changed state or drew a response at {ent.entity}")
        self._flush_events(ent)
        self._send_all(ent.entity, out, now)
        self._after_step(ent)

    def _tick(self, k: int) -> None:
        now = self.now
        radius = self.spec.params.coverage_radius
        for eid in sorted(self.edges):
            e = self.edges[eid]
            out = e.on_tick(now, self.rng)
            out += self._handoff_triggers(e, now, radius)
            self._flush_events(e)
            self._send_all(eid, out, now)
            self._after_step(e)
        nxt = (k + 1) * self.spec.params.tick_interval
        if nxt <= self.spec.duration:
            self.schedule(nxt, TICK, (k + 1,))

    def _handoff_triggers(self, e: EdgeServer, now: float, radius: float) -> list:
        if not e.registered:
            return []
        out = []
        for nid in sorted(e.cache):
            entry = e.cache[nid]
            if entry.shared or not entry.active or entry.renew_nonce is not None or nid in e.handoffs:
                continue
            if nid not in self.node_specs:
                continue
            pos = position_at(self.node_specs[nid].waypoints, now)
            d = math.dist(pos, e.position)
            if d <= radius:
                continue
            closer = any(math.dist(pos, o.position) < d for oid, o in self.edges.items()
                         if oid != e.entity and o.registered)
            if closer:
                try:
                    out += e.initiate_handoff(nid, pos, now, self.rng)
                except EdgeHandoffError as exc:
                    self.record("EVENT", e.entity, nid, "-", "HandoffNotStarted", type(exc).__name__)
        return out

    def _action(self, data: tuple) -> None:
        now, kind = self.now, data[0]
        if kind == "edge_up":
            e = self.edges[data[1]]
            spec = next(s for s in self.spec.edges if s.id == e.entity.id)
            if spec.join_via is None:
                out = e.bootstrap(now, self.rng)
            else:
                out = e.join_network(edge(spec.join_via), now, self.rng)
            self.record("ACTION", e.entity, None, "-", "edge-up",
                        "bootstrap" if spec.join_via is None else f"via edge:{spec.join_via}")
            self._send_all(e.entity, out, now)
        elif kind == "join":
            n: NodeAgent = self.nodes[data[1]]
            target = edge(data[2]) if data[2] is not None else self._nearest_edge(n.entity)
            if target is None or n.phase != Phase.IDLE:
                self.record("ACTION", n.entity, target, "-", "join-skipped", n.phase.value)
                return
            self.record("ACTION", n.entity, target, "-", "join")
            out = n.initiate_join(target, now, self.rng)
            self._flush_events(n)
            self._send_all(n.entity, out, now)
        elif kind == "data":
            n = self.nodes[data[1]]
            if n.phase == Phase.CONNECTED:
                self._data_counter[n.entity] += 1
                payload = f"{n.entity}#{self._data_counter[n.entity]}".encode()
                self._send_all(n.entity, [n.send_data(payload, now, self.rng)], now)
            nxt = now + self.node_specs[n.entity].data_interval
            if nxt <= self.spec.duration:
                self.schedule(nxt, ACTION, ("data", n.entity))
        elif kind == "alter_app":
            n = self.nodes[data[1]]
            img = bytearray(n.app_image or b"\x00")
            img[-1] ^= 0x01
            n.app_image = bytes(img)
            self.record("ACTION", n.entity, None, "-", "alter-app", f"len=0x{len(img):x}")
        elif kind == "force_violation":
            self.record("ACTION", None, None, "-", "force-violation")
            self.violate("forced by test hook")

    def _nearest_edge(self, nid: EntityId):
        pos = position_at(self.node_specs[nid].waypoints, self.now)
        ready = [(math.dist(pos, e.position), eid) for eid, e in self.edges.items() if e.registered]
        return min(ready)[1] if ready else None

    def _adversary(self, data: tuple) -> None:
        now = self.now
        if data[0] == "inject":
            _, raw, src, dst, origin = data
            self.stats["frames_replayed"] += 1
            self.send(raw, src, dst, now, origin="replay")
        elif data[0] == "forge":
            _, fake, target = data
            self.stats["frames_forged"] += 1
            self.send(self._forge(fake, target), fake, target, now, origin="forge")
        else:
            a: AdversarySpec = data[0]
            try:
                self.adversary_step(a, now)
            except NoCapturedFrame as exc:
                self.record("ADVERSARY", None, None, "-", "NoCapturedFrame", str(exc))

    # -- invariants --------------------------------------------------------------
    def violate(self, what: str) -> None:
        self.violations.append(f"{self.now:.6f}: {what}")
        self.record("INVARIANT", None, None, "-", "violated", what)

    def _on_entity_event(self, ent, ev) -> None:
        if ev.kind == "Denylisted":
            self.denylisted_at.setdefault((ent.entity, ev.subject), self.now)
        elif ev.kind in ("HandoffTransferred", "HandoffDirected"):
            self.ever_handed_off.add(ev.subject)
        elif ev.kind == "KeyRenewed" and ev.subject in self.ever_handed_off:
            holders = [eid for eid, e in self.edges.items() if ev.subject in e.cache]
            if len(holders) != 1:
                self.violate(f"key-at-one-edge: {ev.subject} held by {[str(h) for h in holders]}")

    def _after_step(self, ent) -> None:
        if not isinstance(ent, EdgeServer):
            return
        if len(ent.cache) > ent.capacity:
            self.violate(f"{ent.entity} cache {len(ent.cache)} exceeds capacity {ent.capacity}")
        leaked = ent.denylist & (ent.cache.keys() | ent.peer_keys.keys())
        if leaked:
            self.violate(f"{ent.entity} holds keys for denylisted {sorted(map(str, leaked))}")
        if ent.registered and ent.entity in self.ns.registry.records:
            load = ent.active_load()
            delta = load - self._load_reported.get(ent.entity, 0)
            if delta:
                self.ns.ns_update_load(ent.entity, delta)
                self._load_reported[ent.entity] = load

    def _final_checks(self) -> None:
        seen = Counter()
        for e in self.edges.values():
            seen.update(e.delivered)
        for (nid, payload), c in sorted(seen.items()):
            if c > 1:
                self.violate(f"payload {payload!r} from {nid} delivered {c} times")
        s = self.stats
        in_flight = sum(1 for ev in self.queue if ev.kind == DELIVER)
        if s["frames_sent"] != s["frames_delivered"] + s["frames_dropped"] + in_flight:
            self.violate(f"conservation: sent {s['frames_sent']} != delivered {s['frames_delivered']} "
                         f"+ dropped {s['frames_dropped']} + in flight {in_flight}")
        s["frames_in_flight"] = in_flight
        for ent in self.entities.values():
            if any(v < 0 for v in ent.counters.as_dict().values()):
                self.violate(f"{ent.entity} has a negative counter")
        for eid in sorted(self.edges):
            e = self.edges[eid]
            listed = e.denylist & self.ns.registry.records.keys()
            if listed:
                self.violate(f"registry holds {sorted(map(str, listed))} denylisted by {eid}")
            if eid in self.ns.registry.records and self.ns.registry.records[eid].current_load != e.active_load():
                self.violate(f"load telemetry for {eid} out of sync")

    # -- run -------------------------------------------------------------------------
    def run(self) -> RunResult:
        self._schedule_initial()
        duration = self.spec.duration
        while self.queue and self.queue[0].time <= duration:
            ev = heapq.heappop(self.queue)
            self.now = ev.time
            self.stats["events"] += 1
            if ev.kind == DELIVER:
                self._deliver(ev.data[0])
            elif ev.kind == TICK:
                self._tick(ev.data[0])
            elif ev.kind == ACTION:
                self._action(ev.data)
            elif ev.kind == ADVERSARY:
                self._adversary(ev.data)
        self.now = duration
        self._final_checks()
        return RunResult(self.transcript, self.metrics(), self)

    def metrics(self) -> RunMetrics:
        coeff = self.spec.params.energy
        records = []
        for eid in sorted(self.entities):
            c = self.entities[eid].counters.as_dict()
            records.append(MetricsRecord(str(eid), c, energy_proxy(c, coeff.aead, coeff.hash, coeff.byte)))
        node_e = sum(r.energy_proxy for r in records if r.entity.startswith("node:"))
        total = sum(r.energy_proxy for r in records)
        summary = {
            "mode": self.spec.mode,
            "seed": self.spec.seed,
            "duration": self.spec.duration,
            "energy_proxy_nodes": node_e,
            "energy_proxy_total": total,
            "app_deliveries": sum(len(e.delivered) for e in self.edges.values()),
            "invariant_violations": len(self.violations),
            **{k: self.stats[k] for k in ("events", "frames_sent", "frames_delivered", "frames_dropped",
                                          "frames_tampered", "frames_replayed", "frames_forged",
                                          "frames_unroutable", "frames_in_flight")},
        }
        return RunMetrics(records, summary)


def run(spec: ScenarioSpec) -> RunResult:
    return World(spec).run()


def compare_modes(spec: ScenarioSpec):
    mig = run(spec.with_mode("migration"))
    base = run(spec.with_mode(BASELINE))
    return compare_report(mig.metrics, base.metrics), mig, base

import pytest

from edgehandoff import crypto
from edgehandoff.edge import LOCAL, MIGRATED, AuthCacheEntry, PdrWindow
from edgehandoff.errors import NoPendingChallenge, NotRegistered, UnknownNode
from edgehandoff.messages import (
    ChallengeBody, Frame, MsgType, NodeJoinBody, RejectBody, RejectReason, ServerJoinBody, edge,
    node, open_body, seal_body, with_payload,
)
from edgehandoff.node import Phase

from conftest import Net

N1 = node(1)


def sent(net, mt):
    return [f for f in net.bus.log if f.msg_type == mt]


def reject_reason(net, frame):
    return RejectReason(RejectBody.unpack(open_body(net.dk, frame)).reason)


def forged_join(net, who, target=edge(1), psk=None, seq=0, server=False):
    psk = psk or crypto.random_key(net.rng)
    mt = MsgType.SERVER_JOIN_REQUEST if server else MsgType.NODE_JOIN_REQUEST
    body = (ServerJoinBody(who.id, 0, psk, 0, 0.0, 0.0, 1, "x", "y") if server
            else NodeJoinBody(who.id, 0, psk)).pack()
    f = Frame(mt, who, target, seq)
    return with_payload(f, seal_body(net.dk, f, body, net.rng))


def test_full_node_join(net):
    net.join()
    e, n = net.edges[1], net.nodes[1]
    entry = e.cache[N1]
    assert entry.origin == LOCAL and not entry.shared
    assert n.phase == Phase.CONNECTED and n.session_key == entry.session_key
    assert e.counters.full_auths == 1 == n.counters.full_auths
    assert [f.msg_type for f in net.bus.log[-4:]] == [
        MsgType.NODE_JOIN_REQUEST, MsgType.CHALLENGE, MsgType.CHALLENGE_RESPONSE, MsgType.AUTH_ACK]


def test_unknown_key_rejected_then_denylisted(net):
    e = net.edges[1]
    rogue = node(77)
    for seq in range(3):
        assert rogue not in e.denylist
        (r,) = e.handle(forged_join(net, rogue, seq=seq), 0.0, net.rng)
        assert reject_reason(net, r) == RejectReason.UNKNOWN_KEY
    assert rogue in e.denylist
    before = e.state_digest()
    assert e.handle(forged_join(net, rogue, seq=9), 0.0, net.rng) == []
    assert e.state_digest() == before


def test_wrong_psk_response_fails(net):
    e = net.edges[1]
    psk = net.psks[0]
    (ch,) = e.handle(forged_join(net, N1, psk=psk), 0.0, net.rng)
    challenge = ChallengeBody.unpack(open_body(psk, ch)).challenge
    bad = crypto.solve_challenge(net.psks[1], challenge, net.directory.fingerprints[N1], net.rng)
    (r,) = e.handle(Frame(MsgType.CHALLENGE_RESPONSE, N1, edge(1), 1, bad), 0.0, net.rng)
    assert reject_reason(net, r) == RejectReason.CHALLENGE_FAILED and N1 not in e.cache
    with pytest.raises(NoPendingChallenge):
        e.handle(Frame(MsgType.CHALLENGE_RESPONSE, N1, edge(1), 2, bad), 0.0, net.rng)


def test_challenge_response_replay(net):
    net.join()
    e = net.edges[1]
    (resp,) = [f for f in sent(net, MsgType.CHALLENGE_RESPONSE) if f.sender == N1]
    assert e.handle(resp, 1.0, net.rng) == []
    assert e.counters.replays_detected == 1


def test_server_join_registers_newcomer(net):
    log = net.bus.types()
    assert ("edge:2", "edge:1", "SERVER_JOIN_REQUEST") in log
    assert ("edge:1", "nameserver:0", "REGISTER_EDGE") in log
    assert net.ns.registry.records[edge(2)].authenticated_by == edge(1)
    assert net.ns.registry.authentication_chain(edge(3)) == [edge(3), edge(2), edge(1)]


def test_server_join_unknown_key_and_unregistered(net):
    e = net.edges[1]
    rogue = edge(50)
    (r,) = e.handle(forged_join(net, rogue, server=True), 0.0, net.rng)
    assert reject_reason(net, r) == RejectReason.DENYLISTED and rogue in e.denylist
    assert e.handle(forged_join(net, rogue, seq=1, server=True), 0.0, net.rng) == []
    lone = Net(seed=3, edges=((1, (0.0, 0.0)), (2, (1.0, 1.0))))
    with pytest.raises(NotRegistered):
        lone.edges[1].handle(forged_join(lone, edge(2), server=True), 0.0, lone.rng)


def handoff(net, src=1, pos=(520.0, 0.0)):
    net.bus.post(net.edges[src].initiate_handoff(N1, pos, net.bus.now, net.rng))
    net.bus.pump()


def test_migration_handoff(net):
    net.join()
    handoff(net)
    a, b, n = net.edges[1], net.edges[2], net.nodes[1]
    assert a.cache[N1].shared
    assert b.cache[N1].origin == MIGRATED and b.cache[N1].active
    assert n.current_edge == edge(2) and n.phase == Phase.CONNECTED
    assert n.counters.full_auths == 1 and n.counters.handoffs_completed == 1
    assert len(sent(net, MsgType.CHALLENGE_RESPONSE)) == 3  # two peer joins + one node join
    assert not [f for f in sent(net, MsgType.CHALLENGE) if f.receiver == N1][1:]
    with pytest.raises(UnknownNode):
        net.edges[3].initiate_handoff(N1, (0, 0), 0.0, net.rng)


def test_recommendation_excludes_current_edge(net):
    net.join(e=2)
    handoff(net, src=2, pos=(500.0, 0.0))
    assert net.nodes[1].current_edge in (edge(1), edge(3))


def test_baseline_handoff_rejoins(rng):
    net = Net(edges=((1, (0.0, 0.0)), (2, (500.0, 0.0))), mode="baseline").bring_up().join()
    handoff(net)
    n = net.nodes[1]
    assert N1 not in net.edges[1].cache and net.edges[2].cache[N1].origin == LOCAL
    assert n.counters.full_auths == 2 and n.counters.handoffs_completed == 1
    assert not sent(net, MsgType.HANDOFF_TRANSFER)


def test_digest_mismatch_on_reconnect(net):
    net.join()
    net.nodes[1].app_image += b"!"
    handoff(net)
    rejects = [f for f in sent(net, MsgType.REJECT) if f.receiver == N1]
    assert [reject_reason(net, r) for r in rejects] == [RejectReason.DIGEST_MISMATCH]
    assert not sent(net, MsgType.CONNECT_ACK) and N1 not in net.edges[2].cache
    assert net.nodes[1].phase == Phase.IDLE


def test_reconnect_before_transfer_rejoins(net):
    net.join()
    net.bus.drop_filter = lambda f: f.msg_type == MsgType.HANDOFF_TRANSFER
    handoff(net)
    n = net.nodes[1]
    rejects = [f for f in sent(net, MsgType.REJECT) if f.receiver == N1]
    assert [reject_reason(net, r) for r in rejects] == [RejectReason.NOT_REGISTERED]
    assert n.phase == Phase.CONNECTED and n.current_edge == edge(2) and n.counters.full_auths == 2


def test_capacity_rejects_transfer(net):
    net.join()
    b = net.edges[2]
    for i in range(b.capacity):
        b.cache[node(100 + i)] = AuthCacheEntry(node(100 + i), bytes(16), bytes(32), 0.0, 0.0, 600.0)
    handoff(net)
    (r,) = [f for f in sent(net, MsgType.REJECT) if f.receiver == edge(1)]
    body = RejectBody.unpack(open_body(net.dk, r))
    assert body.reason == 0x07 and N1 not in b.cache
    # the node's fallback full join is refused for the same reason
    last = [f for f in sent(net, MsgType.REJECT) if f.receiver == N1][-1]
    assert reject_reason(net, last) == RejectReason.CAPACITY_EXCEEDED


def test_transfer_from_unknown_peer_dropped(net):
    b = net.edges[2]
    f = Frame(MsgType.HANDOFF_TRANSFER, edge(9), edge(2), 0, bytes(100))
    assert b.handle(f, 0.0, net.rng) == [] and b.counters.attack_events == 1


def test_renewal_lifecycle():
    net = Net(ttl=10, edges=((1, (0.0, 0.0)), (2, (500.0, 0.0)))).bring_up().join()
    a = net.edges[1]
    assert a.renew_keys(5.0, net.rng) == []  # within ttl
    old = a.cache[N1].session_key
    net.bus.now = 10.0
    frames = a.renew_keys(10.0, net.rng)
    assert [f.msg_type for f in frames] == [MsgType.KEY_RENEW]
    net.bus.post(frames)
    net.bus.pump()
    assert a.cache[N1].session_key != old and a.cache[N1].last_renewed == 10.0
    stale = net.nodes[1].emit(MsgType.DATA_FRAME, edge(1), b"old-key", old, net.rng)
    a.handle(stale, 11.0, net.rng)
    assert a.counters.tampers_detected == 1
    handoff(net)
    assert a.renew_keys(25.0, net.rng) == [] and N1 not in a.cache  # shared entry retired


def test_renewal_timeout_deletes_entry():
    net = Net(ttl=10).bring_up().join()
    a = net.edges[1]
    a.renew_keys(10.0, net.rng)  # KeyRenew never delivered
    for t in (11.0, 12.0):
        a.renew_keys(t, net.rng)
        assert N1 in a.cache
    a.renew_keys(13.0, net.rng)
    assert N1 not in a.cache


def test_data_replay_and_tamper(net):
    net.join()
    a, n = net.edges[1], net.nodes[1]
    f = n.send_data(b"payload", 1.0, net.rng)
    assert a.handle_data(f, 1.0) == b"payload"
    assert a.handle_data(f, 1.1) is None and a.counters.replays_detected == 1
    g = n.send_data(b"other", 1.2, net.rng)
    bad = bytearray(g.payload)
    bad[20] ^= 4
    assert a.handle_data(with_payload(g, bytes(bad)), 1.2) is None
    assert a.counters.tampers_detected == 1
    assert [p for _, p in a.delivered] == [b"payload"]


def test_pdr_window_arithmetic():
    w = PdrWindow(50)
    w.record(1)
    w.record(2)  # seq 7 after 5
    assert (w.delivered, w.expected) == (2, 3)
    w.record(1)
    assert 0 <= w.ratio <= 1 and w.delivered <= w.expected


def test_pdr_check_threshold(net):
    net.join()
    a = net.edges[1]
    w = a.pdr_windows[N1]
    for _ in range(20):
        w.record(3)
    assert w.expected == 50 and a.pdr_check(5.0) == [N1] and a.counters.jamming_alerts == 1
    for _ in range(10):
        w.record(3)
    assert a.pdr_check(6.0) == []  # under window_len, not evaluated

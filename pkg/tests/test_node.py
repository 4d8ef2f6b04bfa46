import pytest

from edgehandoff import crypto
from edgehandoff.errors import InvalidPhase, NotConnected, UnexpectedMessage
from edgehandoff.messages import (
    ChallengeBody, Frame, MsgType, NodeJoinBody, edge, node, open_body, seal_body, with_payload,
)
from edgehandoff.node import NodeAgent, NodeProvisioning, Phase

from conftest import Net


def _agent(rng, n_psk=4):
    psks = [(i, crypto.random_key(rng)) for i in range(n_psk)]
    dk = crypto.random_key(rng)
    return NodeAgent(NodeProvisioning(node(1), dk, psks, b"F" * 16, b"image")), dk, dict(psks)


def test_join_request_carries_chosen_psk(rng):
    agent, dk, psks = _agent(rng)
    (frame,) = agent.initiate_join(edge(1), 0.0, rng)
    assert frame.msg_type == MsgType.NODE_JOIN_REQUEST and agent.phase == Phase.JOINING
    body = NodeJoinBody.unpack(open_body(dk, frame))
    assert body.node_id == 1 and psks[body.psk_index] == body.psk


def test_join_requires_idle(rng):
    agent, _, _ = _agent(rng)
    agent.initiate_join(edge(1), 0.0, rng)
    with pytest.raises(InvalidPhase):
        agent.initiate_join(edge(1), 0.0, rng)


def test_challenge_answer_is_48_bytes(rng):
    agent, _, psks = _agent(rng)
    (join,) = agent.initiate_join(edge(1), 0.0, rng)
    psk = psks[NodeJoinBody.unpack(open_body(agent.prov.dk, join)).psk_index]
    f = Frame(MsgType.CHALLENGE, edge(1), node(1), 0)
    challenge = with_payload(f, seal_body(psk, f, ChallengeBody(b"c" * 16).pack(), rng))
    (resp,) = agent.handle(challenge, 0.0, rng)
    assert resp.msg_type == MsgType.CHALLENGE_RESPONSE and len(resp.payload) == 48
    assert agent.phase == Phase.AWAITING_ACK


def test_wrong_phase_and_unsealable(rng):
    agent, _, _ = _agent(rng)
    f = Frame(MsgType.CHALLENGE, edge(1), node(1), 0, bytes(48))
    with pytest.raises(UnexpectedMessage):
        agent.handle(f, 0.0, rng)
    with pytest.raises(UnexpectedMessage):
        agent.handle(Frame(MsgType.DATA_FRAME, edge(1), node(1), 0), 0.0, rng)
    agent.initiate_join(edge(1), 0.0, rng)
    before = agent.state_digest()
    assert agent.handle(f, 0.0, rng) == []
    assert agent.state_digest() == before and agent.counters.tampers_detected == 1


def test_send_data_seq_and_phase(rng):
    agent, _, _ = _agent(rng)
    with pytest.raises(NotConnected):
        agent.send_data(b"x", 0.0, rng)
    net = Net().bring_up().join()
    n = net.nodes[1]
    a, b = n.send_data(b"one", 1.0, net.rng), n.send_data(b"two", 1.0, net.rng)
    assert b.seq == a.seq + 1
    net.bus.post([a, b])
    net.bus.pump()
    assert [p for _, p in net.edges[1].delivered] == [b"one", b"two"]


def test_code_signature():
    net = Net().bring_up().join()
    n = net.nodes[1]
    assert n.code_signature() == n.code_signature() == net.edges[1].cache[node(1)].app_digest
    n.app_image = b"X" + n.app_image[1:]
    assert n.code_signature() != net.edges[1].cache[node(1)].app_digest


def test_key_renew_both_sides():
    net = Net(ttl=5).bring_up().join()
    n, e = net.nodes[1], net.edges[1]
    old = n.session_key
    net.bus.post(e.renew_keys(6.0, net.rng))
    net.bus.pump()
    assert n.session_key != old and e.cache[node(1)].session_key == n.session_key
    assert e.cache[node(1)].renew_nonce is None


def test_reject_returns_to_idle_without_retry():
    net = Net().bring_up()
    n = net.nodes[1]
    n.prov.psk_set[:] = [(0, crypto.random_key(net.rng)), (2, crypto.random_key(net.rng))]
    net.join()
    assert n.phase == Phase.IDLE and n.session_key is None
    assert sum(1 for f in net.bus.log if f.msg_type == MsgType.NODE_JOIN_REQUEST) == 1

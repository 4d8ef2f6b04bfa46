import random
from collections import deque
from pathlib import Path

import pytest

from edgehandoff import crypto
from edgehandoff.edge import Directory, EdgeConfig, EdgeProvisioning, EdgeServer
from edgehandoff.messages import decode_frame, edge, encode_frame, node
from edgehandoff.nameserver import NameServer
from edgehandoff.node import NodeAgent, NodeProvisioning

DATA = Path(__file__).parent / "data"
ROOT = Path(__file__).parent.parent
SCENARIOS = ROOT / "scenarios"


def parse_kat(path):
    """Yield dicts from an LWC-style KAT file (``Count = n`` blocks)."""
    block = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            if block:
                yield block
                block = {}
            continue
        k, _, v = line.partition("=")
        block[k.strip()] = v.strip()
    if block:
        yield block


class Bus:
    """Zero-latency FIFO wiring between state machines, for unit tests.

    Every frame goes through the real codec so wire bugs surface here too.
    """

    def __init__(self, rng, *entities):
        self.rng = rng
        self.now = 0.0
        self.entities = {e.entity: e for e in entities}
        self.queue = deque()
        self.log = []
        self.drop_filter = None

    def add(self, ent):
        self.entities[ent.entity] = ent

    def post(self, frames):
        for f in frames:
            self.queue.append(encode_frame(f))

    def pump(self, limit=1000):
        n = 0
        while self.queue:
            raw = self.queue.popleft()
            f = decode_frame(raw)
            self.log.append(f)
            if self.drop_filter and self.drop_filter(f):
                continue
            dst = self.entities.get(f.receiver)
            if dst is None:
                continue
            self.post(dst.handle(f, self.now, self.rng) or [])
            n += 1
            assert n < limit, "message storm"
        return n

    def types(self):
        return [(str(f.sender), str(f.receiver), f.msg_type.name) for f in self.log]


class Net:
    """A small provisioned network: name server, edges, nodes sharing one PSK pool."""

    def __init__(self, seed=1, edges=((1, (0.0, 0.0)),), nodes=(1,), mode="migration", **cfg):
        self.rng = random.Random(seed)
        self.dk = crypto.random_key(self.rng)
        self.psks = [crypto.random_key(self.rng) for _ in range(4)]
        self.directory = Directory()
        self.config = EdgeConfig(mode=mode, **cfg)
        self.ns = NameServer(self.dk)
        self.bus = Bus(self.rng, self.ns)
        self.edges = {}
        self.nodes = {}
        for i, pos in edges:
            eid = edge(i)
            fp = crypto.device_fingerprint(eid.encode(), "edge", b"salt")
            self.directory.fingerprints[eid] = fp
            prov = EdgeProvisioning(eid, self.dk, dict(enumerate(self.psks)), fp, f"e{i}",
                                    f"e{i}.local", pos, 4)
            self.edges[i] = EdgeServer(prov, self.directory, self.config)
            self.bus.add(self.edges[i])
        for i in nodes:
            nid = node(i)
            fp = crypto.device_fingerprint(nid.encode(), "sensor", b"salt")
            image = f"app-{i}".encode()
            self.directory.fingerprints[nid] = fp
            self.directory.app_digests[nid] = crypto.lw_hash(image)
            prov = NodeProvisioning(nid, self.dk, [(0, self.psks[0]), (2, self.psks[2])], fp, image)
            self.nodes[i] = NodeAgent(prov)
            self.bus.add(self.nodes[i])

    def bring_up(self):
        ids = sorted(self.edges)
        self.bus.post(self.edges[ids[0]].bootstrap(0.0, self.rng))
        self.bus.pump()
        for prev, i in zip(ids, ids[1:]):
            self.bus.post(self.edges[i].join_network(edge(prev), 0.0, self.rng))
            self.bus.pump()
        assert all(e.registered for e in self.edges.values())
        return self

    def join(self, n=1, e=1):
        self.bus.post(self.nodes[n].initiate_join(edge(e), self.bus.now, self.rng))
        self.bus.pump()
        return self


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def net():
    return Net(edges=((1, (0.0, 0.0)), (2, (500.0, 0.0)), (3, (1000.0, 0.0)))).bring_up()

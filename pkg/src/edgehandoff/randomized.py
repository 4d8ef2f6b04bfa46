"""Seeded random scenario generator for property sweeps."""

from __future__ import annotations

import random

from .scenario import ScenarioSpec, parse_scenario


def random_scenario(seed: int, *, edges: int = 4, nodes: int = 3, duration: float = 180.0,
                    mode: str = "migration") -> ScenarioSpec:
    """Roaming nodes over a row of edges with short key lifetimes, so renewals
    and handoffs interleave. Links are lossless but jittered."""
    rng = random.Random(seed)
    spacing = 500.0
    edge_list = []
    for i in range(edges):
        e = {"id": i + 1, "name": f"e{i + 1}", "position": [i * spacing, rng.uniform(-50, 50)],
             "capacity": 8}
        if i:
            e["join_via"] = rng.randrange(1, i + 1)
        edge_list.append(e)
    span = (edges - 1) * spacing
    node_list = []
    for n in range(nodes):
        t, wps = 0.0, []
        while t <= duration:
            wps.append([round(t, 3), round(rng.uniform(-100, span + 100), 1), round(rng.uniform(-80, 80), 1)])
            t += rng.uniform(8.0, 20.0)
        node_list.append({"id": n + 1, "psk_indices": rng.sample(range(8), rng.randint(1, 3)),
                          "waypoints": wps, "data_interval": rng.choice([0.5, 1.0, 2.0])})
    data = {
        "seed": seed,
        "duration": duration,
        "mode": mode,
        "params": {"ttl": rng.choice([6.0, 9.0, 13.0, 17.0])},
        "edges": edge_list,
        "nodes": node_list,
        "links": {"default": {"latency": 0.01, "jitter": 0.004}},
    }
    return parse_scenario(data, f"<random:{seed}>")

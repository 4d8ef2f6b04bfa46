"""Run metrics, the energy proxy, transcript reconciliation and mode comparison.

The energy proxy is a declared cost model, not a measurement: a weighted
count of AEAD calls, hash calls and bytes put on the air.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from .endpoint import Counters

COUNTER_FIELDS = tuple(Counters().as_dict())

# counters that can be recomputed from transcript lines alone
_EVENT_COUNTERS = {
    "replays_detected": ("ReplayDetected",),
    "tampers_detected": ("TamperDetected",),
    "jamming_alerts": ("JammingSuspected",),
    "denylist_size": ("Denylisted",),
}


def energy_proxy(counters: dict, aead: float = 1.0, hash: float = 1.0, byte: float = 0.01) -> float:
    return aead * counters["aead_ops"] + hash * counters["hash_ops"] + byte * counters["bytes_sent"]


@dataclass
class MetricsRecord:
    entity: str
    counters: dict
    energy_proxy: float

    def to_json(self) -> str:
        return json.dumps({"entity": self.entity, **self.counters, "energy_proxy": self.energy_proxy},
                          sort_keys=True)


@dataclass
class RunMetrics:
    records: list
    summary: dict

    def by_entity(self, name: str) -> MetricsRecord:
        for r in self.records:
            if r.entity == name:
                return r
        raise KeyError(name)

    def to_jsonl(self) -> str:
        lines = [r.to_json() for r in self.records]
        lines.append(json.dumps({"summary": True, **self.summary}, sort_keys=True))
        return "\n".join(lines) + "\n"


def parse_line(line: str) -> list:
    parts = line.split(" | ", 6)
    if len(parts) != 7:
        raise ValueError(f"malformed transcript line: {line!r}")
    return parts


def recount(transcript: list) -> dict:
    """Recompute per-entity counters from transcript lines."""
    out: dict = {}

    def bump(entity, name, by=1):
        out.setdefault(entity, Counter())[name] += by

    for line in transcript:
        _, kind, sender, receiver, msg, outcome, detail = parse_line(line)
        if kind == "SEND" and outcome == "sent":
            bump(sender, "bytes_sent", int(detail.split("len=0x", 1)[1].split()[0], 16))
            if msg == "CHALLENGE":
                bump(sender, "challenges_issued")
        elif kind == "EVENT":
            for name, kinds in _EVENT_COUNTERS.items():
                if outcome in kinds:
                    bump(sender, name)
            if outcome in ("Authenticated", "NodeAuthenticated"):
                bump(sender, "full_auths")
            elif outcome in ("HandoffCompleted", "NodeReconnected"):
                bump(sender, "handoffs_completed")
    return out


def reconcile(transcript: list, metrics: RunMetrics) -> list:
    """List every counter whose reported value differs from the transcript recount."""
    counted = recount(transcript)
    fields = ("bytes_sent", "challenges_issued", "full_auths", "handoffs_completed", *_EVENT_COUNTERS)
    problems = []
    for rec in metrics.records:
        got = counted.get(rec.entity, Counter())
        for f in fields:
            if rec.counters[f] != got[f]:
                problems.append(f"{rec.entity}.{f}: reported {rec.counters[f]}, transcript {got[f]}")
    return problems


@dataclass
class Comparison:
    migration: RunMetrics
    baseline: RunMetrics
    lines: list = field(default_factory=list)

    @property
    def saving_pct(self) -> float:
        m = self.migration.summary["energy_proxy_total"]
        b = self.baseline.summary["energy_proxy_total"]
        return 100.0 * (b - m) / b if b else 0.0

    @property
    def node_saving_pct(self) -> float:
        m = self.migration.summary["energy_proxy_nodes"]
        b = self.baseline.summary["energy_proxy_nodes"]
        return 100.0 * (b - m) / b if b else 0.0


def _nodes(metrics: RunMetrics) -> list:
    return [r for r in metrics.records if r.entity.startswith("node:")]


def compare_report(migration: RunMetrics, baseline: RunMetrics) -> Comparison:
    cmp = Comparison(migration, baseline)
    lines = cmp.lines
    lines.append(f"seed: {migration.summary['seed']}")
    lines.append("energy proxy: declared cost model "
                 "(aead_ops, hash_ops and bytes_sent weighted by configured coefficients)")
    for m, b in zip(_nodes(migration), _nodes(baseline)):
        lines.append(f"{m.entity} full_auths: migration {m.counters['full_auths']} "
                     f"baseline {b.counters['full_auths']}")
        lines.append(f"{m.entity} handoffs_completed: migration {m.counters['handoffs_completed']} "
                     f"baseline {b.counters['handoffs_completed']}")
        lines.append(f"{m.entity} energy_proxy: migration {m.energy_proxy:.2f} baseline {b.energy_proxy:.2f}")
    ms, bs = migration.summary, baseline.summary
    lines.append(f"node energy_proxy: migration {ms['energy_proxy_nodes']:.2f} "
                 f"baseline {bs['energy_proxy_nodes']:.2f} saving {cmp.node_saving_pct:.2f}%")
    lines.append(f"total energy_proxy: migration {ms['energy_proxy_total']:.2f} "
                 f"baseline {bs['energy_proxy_total']:.2f} saving {cmp.saving_pct:.2f}%")
    return cmp

"""Scenario files: strict YAML schema, loading, and validation diagnostics."""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

import pydantic
import yaml
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from .errors import ParseError, ValidationError
from .messages import EntityId, MsgType


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class EnergyCoefficients(_Strict):
    aead: float = Field(1.0, ge=0)
    hash: float = Field(1.0, ge=0)
    byte: float = Field(0.01, ge=0)


class Params(_Strict):
    ttl: float = Field(600.0, gt=0)
    renew_timeout_ticks: int = Field(3, ge=1)
    failure_threshold: int = Field(3, ge=1)
    pdr_threshold: float = Field(0.5, ge=0, le=1)
    pdr_window: int = Field(50, ge=1)
    coverage_radius: float = Field(300.0, gt=0)
    weight_distance: float = 0.7
    weight_load: float = 0.3
    distance_norm: float = Field(1000.0, gt=0)
    psk_count: int = Field(8, ge=1, le=65535)
    tick_interval: float = Field(1.0, gt=0)
    energy: EnergyCoefficients = EnergyCoefficients()


class NameServerSpec(_Strict):
    address: str = "ns.local"


class EdgeSpec(_Strict):
    id: int = Field(ge=1, lt=2**64)
    name: str = Field(min_length=1, max_length=64)
    address: Optional[str] = None
    position: tuple[float, float]
    capacity: int = Field(16, ge=1)
    model: str = "edge-x86"
    join_via: Optional[int] = None
    join_at: Optional[float] = Field(None, ge=0)


class NodeSpec(_Strict):
    id: int = Field(ge=0, lt=2**64)
    psk_indices: list[int] = Field(min_length=1)
    model: str = "sensor-v1"
    app_image: Optional[str] = None
    app_image_hex: Optional[str] = None
    app_image_ref: Optional[str] = None
    waypoints: list[tuple[float, float, float]] = Field(min_length=1)
    join_at: Optional[float] = Field(None, ge=0)
    initial_edge: Optional[int] = None
    data_interval: Optional[float] = Field(1.0, gt=0)
    data_start: Optional[float] = Field(None, ge=0)

    @field_validator("waypoints")
    @classmethod
    def _increasing(cls, wps):
        for a, b in zip(wps, wps[1:]):
            if not b[0] > a[0]:
                raise ValueError(f"waypoint times must be strictly increasing ({a[0]} then {b[0]})")
        return wps

    @field_validator("psk_indices")
    @classmethod
    def _unique(cls, idx):
        if len(set(idx)) != len(idx):
            raise ValueError("psk_indices must be unique")
        return idx

    @model_validator(mode="after")
    def _one_image_source(self):
        given = [f for f in ("app_image", "app_image_hex", "app_image_ref") if getattr(self, f) is not None]
        if len(given) > 1:
            raise ValueError(f"give at most one of app_image, app_image_hex, app_image_ref (got {given})")
        if self.app_image_hex is not None:
            bytes.fromhex(self.app_image_hex)
        return self


class LinkParams(_Strict):
    latency: float = Field(0.01, ge=0)
    jitter: float = Field(0.0, ge=0)
    drop: float = Field(0.0, ge=0, le=1)


class LinkOverride(LinkParams):
    a: str
    b: str

    @field_validator("a", "b")
    @classmethod
    def _entity(cls, v):
        EntityId.parse(v)
        return v


class LinksSpec(_Strict):
    default: LinkParams = LinkParams()
    overrides: list[LinkOverride] = []


class FrameFilter(_Strict):
    msg_type: Optional[str] = None
    sender: Optional[str] = None
    receiver: Optional[str] = None

    @field_validator("msg_type")
    @classmethod
    def _known_type(cls, v):
        if v is not None and v not in MsgType.__members__:
            raise ValueError(f"unknown msg_type {v!r}")
        return v

    @field_validator("sender", "receiver")
    @classmethod
    def _entity(cls, v):
        if v is not None:
            EntityId.parse(v)
        return v


class AdversarySpec(_Strict):
    time: float = Field(ge=0)
    action: Literal["capture", "replay", "tamper", "forge_join", "set_drop"]
    filter: FrameFilter = FrameFilter()
    ref: Optional[str] = None
    count: int = Field(1, ge=1)
    interval: float = Field(0.001, ge=0)
    bit_index: Optional[int] = Field(None, ge=0)
    fake_id: Optional[int] = Field(None, ge=0, lt=2**64)
    role: Literal["node", "server"] = "node"
    target: Optional[int] = None
    link: Optional[str] = None
    value: Optional[float] = Field(None, ge=0, le=1)

    @model_validator(mode="after")
    def _required(self):
        need = {
            "capture": ["ref"], "replay": ["ref"], "tamper": [],
            "forge_join": ["fake_id", "target"], "set_drop": ["link", "value"],
        }[self.action]
        missing = [f for f in need if getattr(self, f) is None]
        if missing:
            raise ValueError(f"{self.action} requires {', '.join(missing)}")
        return self


class ActionSpec(_Strict):
    time: float = Field(ge=0)
    kind: Literal["alter_app", "join"]
    node: int
    edge: Optional[int] = None


class TestHooks(_Strict):
    force_invariant_violation: bool = False


class ScenarioSpec(_Strict):
    seed: int = Field(0, ge=0, lt=2**64)
    duration: float = Field(gt=0)
    mode: Literal["migration", "baseline"] = "migration"
    params: Params = Params()
    name_server: NameServerSpec = NameServerSpec()
    edges: list[EdgeSpec] = []
    nodes: list[NodeSpec] = []
    links: LinksSpec = LinksSpec()
    adversary: list[AdversarySpec] = []
    actions: list[ActionSpec] = []
    test_hooks: TestHooks = TestHooks()
    _base_dir: Path = PrivateAttr(default_factory=Path)

    @model_validator(mode="after")
    def _cross_checks(self):
        problems = []
        seen = set()
        for e in self.edges:
            if e.id in seen:
                problems.append(f"edges: duplicate edge id {e.id}")
            seen.add(e.id)
        names = [e.name for e in self.edges]
        for n in sorted({n for n in names if names.count(n) > 1}):
            problems.append(f"edges: duplicate edge name {n!r}")
        boot = [e.id for e in self.edges if e.join_via is None]
        if self.edges and len(boot) != 1:
            problems.append(f"edges: exactly one bootstrap edge (join_via unset) required, got {boot}")
        for e in self.edges:
            if e.join_via is not None and e.join_via not in seen:
                problems.append(f"edges: edge {e.id} join_via refers to unknown edge {e.join_via}")
            if e.join_via == e.id:
                problems.append(f"edges: edge {e.id} cannot join via itself")
        node_ids = set()
        for n in self.nodes:
            if n.id in node_ids:
                problems.append(f"nodes: duplicate node id {n.id}")
            node_ids.add(n.id)
            bad = [i for i in n.psk_indices if i >= self.params.psk_count]
            if bad:
                problems.append(f"nodes: node {n.id} psk_indices {bad} outside psk_count {self.params.psk_count}")
            if n.initial_edge is not None and n.initial_edge not in seen:
                problems.append(f"nodes: node {n.id} initial_edge {n.initial_edge} is not an edge")
        if self.nodes and not self.edges:
            problems.append("nodes: nodes present but no edges defined")
        for a in self.actions:
            if a.node not in node_ids:
                problems.append(f"actions: unknown node {a.node}")
            if a.edge is not None and a.edge not in seen:
                problems.append(f"actions: unknown edge {a.edge}")
        for a in self.adversary:
            if a.action == "forge_join" and a.target not in seen:
                problems.append(f"adversary: forge_join target {a.target} is not an edge")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def base_dir(self) -> Path:
        return self._base_dir

    def with_mode(self, mode: str) -> "ScenarioSpec":
        return self.model_copy(update={"mode": mode})

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return self.model_copy(update={"seed": seed})


def _format_errors(err: pydantic.ValidationError) -> list[str]:
    out = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = e["msg"]
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        out.append(f"{loc}: {msg}")
    return out


def parse_scenario(data, source: str = "<scenario>") -> ScenarioSpec:
    if not isinstance(data, dict):
        raise ValidationError(f"{source}: top level must be a mapping", [f"{source}: <root>: expected a mapping"])
    try:
        return ScenarioSpec.model_validate(data)
    except pydantic.ValidationError as exc:
        diags = [f"{source}: {d}" for d in _format_errors(exc)]
        raise ValidationError(diags[0], diags) from None


def load_scenario(path) -> ScenarioSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot read scenario: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown location"
        raise ParseError(f"{path}: {where}: {exc.problem}") from None
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from None
    spec = parse_scenario(data, str(path))
    spec._base_dir = path.parent
    for n in spec.nodes:
        if n.app_image_ref is not None and not (path.parent / n.app_image_ref).is_file():
            raise ValidationError(f"{path}: nodes: node {n.id} app_image_ref {n.app_image_ref!r} not found")
    return spec


def app_image_for(spec: ScenarioSpec, n: NodeSpec) -> bytes:
    if n.app_image_hex is not None:
        return bytes.fromhex(n.app_image_hex)
    if n.app_image_ref is not None:
        return (spec.base_dir / n.app_image_ref).read_bytes()
    if n.app_image is not None:
        return n.app_image.encode("utf-8")
    return f"firmware:{n.model}:node-{n.id}".encode("utf-8")

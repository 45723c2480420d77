"""Scenario files: loading, validation with field-path diagnostics, bundled scenarios."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from ..policy import AbacError, AbacPolicy, BandwidthStageConfig, PolicyConfig, PolicyError, StageConfigError

ASSET_KINDS = ("camera", "microphone", "handheld", "drone", "ugs")
TECHNOLOGIES = ("fourg", "lorawan")
ATTACK_KINDS = ("degrade_bandwidth", "jam", "blind", "destroy")
LINK_ATTACKS = ("degrade_bandwidth", "jam")
PAYLOAD_MODES = ("color_video", "grayscale_video", "still_images", "object_count", "audio")
DEFAULT_PAYLOAD_REQUIREMENTS = {
    "color_video": 5.0, "grayscale_video": 1.0, "still_images": 0.1,
    "object_count": 0.01, "audio": 0.05,
}
BUNDLED = ("usecase1_bandwidth", "usecase2_jam", "usecase3_blind", "usecase4_kinetic")
_ID = re.compile(r"[A-Za-z][A-Za-z0-9_-]*")


class ScenarioError(ValueError):
    """Invalid scenario; ``issues`` holds one ``path: message`` string per problem."""

    def __init__(self, issues):
        self.issues = [issues] if isinstance(issues, str) else list(issues)
        super().__init__("; ".join(self.issues))


@dataclass(frozen=True)
class AssetSpec:
    id: str
    kind: str
    position: Tuple[float, float]
    movable: bool = False
    attributes: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class LinkSpec:
    id: str
    sender: str
    receiver: str
    technology: str
    capacity_mbps: float
    active: bool = True


@dataclass(frozen=True)
class AttackEvent:
    tick: int
    kind: str
    target: str
    multiplier: Optional[float] = None

    def to_record(self) -> dict:
        rec = {"kind": self.kind, "target": self.target}
        if self.multiplier is not None:
            rec["multiplier"] = self.multiplier
        return rec


@dataclass(frozen=True)
class SimSettings:
    payload_requirements: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_PAYLOAD_REQUIREMENTS))
    drone_speed: float = 10.0
    noise: float = 0.05
    nominal_luminance: float = 0.8
    blinded_luminance: float = 0.02
    audio_level: float = 0.6


@dataclass(frozen=True)
class Scenario:
    name: str
    assets: Tuple[AssetSpec, ...]
    links: Tuple[LinkSpec, ...]
    attacks: Tuple[AttackEvent, ...]
    duration_ticks: int
    seed: int
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    settings: SimSettings = field(default_factory=SimSettings)
    abac_enforced: bool = False

    def events_at(self, tick: int) -> List[AttackEvent]:
        return [a for a in self.attacks if a.tick == tick]

    def asset(self, asset_id: str) -> AssetSpec:
        return next(a for a in self.assets if a.id == asset_id)


# -- loading -----------------------------------------------------------------

def _num(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


class _Checker:
    def __init__(self):
        self.issues: List[str] = []

    def fail(self, path: str, message: str) -> None:
        self.issues.append(f"{path}: {message}")

    def field(self, obj: Mapping, key: str, path: str, kind, default=None, required=True):
        if not isinstance(obj, Mapping):
            self.fail(path, "expected an object")
            return default
        if key not in obj:
            if required:
                self.fail(f"{path}.{key}" if path else key, "missing")
            return default
        value = obj[key]
        ok = {
            "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
            "num": _num,
            "bool": lambda v: isinstance(v, bool),
            "str": lambda v: isinstance(v, str),
            "list": lambda v: isinstance(v, list),
            "dict": lambda v: isinstance(v, Mapping),
        }[kind](value)
        if not ok:
            self.fail(f"{path}.{key}" if path else key, f"expected {kind}, got {value!r}")
            return default
        return value


def scenario_from_dict(data: Any, name: str = "scenario") -> Scenario:
    ck = _Checker()
    if not isinstance(data, Mapping):
        raise ScenarioError("(root): expected a JSON object")
    duration = ck.field(data, "duration_ticks", "", "int", 1)
    if isinstance(duration, int) and duration <= 0:
        ck.fail("duration_ticks", "must be a positive integer")
    seed = ck.field(data, "seed", "", "int", 0)

    assets: List[AssetSpec] = []
    ids: set = set()
    for i, row in enumerate(ck.field(data, "assets", "", "list", []) or []):
        path = f"assets[{i}]"
        aid = ck.field(row, "id", path, "str", "")
        kind = ck.field(row, "kind", path, "str", "")
        pos = ck.field(row, "position", path, "list", [0, 0])
        movable = ck.field(row, "movable", path, "bool", False, required=False)
        attrs = ck.field(row, "attributes", path, "dict", {}, required=False)
        if aid and not _ID.fullmatch(aid):
            ck.fail(f"{path}.id", f"{aid!r} is not a valid identifier")
        if aid in ids:
            ck.fail(f"{path}.id", f"duplicate id {aid!r}")
        if kind and kind not in ASSET_KINDS:
            ck.fail(f"{path}.kind", f"unknown kind {kind!r} (expected one of {', '.join(ASSET_KINDS)})")
        if not (isinstance(pos, list) and len(pos) == 2 and all(_num(v) for v in pos)):
            ck.fail(f"{path}.position", "expected [x, y] numbers")
            pos = [0, 0]
        ids.add(aid)
        assets.append(AssetSpec(aid, kind, (float(pos[0]), float(pos[1])), bool(movable), dict(attrs or {})))

    links: List[LinkSpec] = []
    link_ids: set = set()
    active_senders: Dict[str, str] = {}
    for i, row in enumerate(ck.field(data, "links", "", "list", []) or []):
        path = f"links[{i}]"
        lid = ck.field(row, "id", path, "str", "")
        ends = ck.field(row, "endpoints", path, "list", [])
        tech = ck.field(row, "technology", path, "str", "fourg")
        cap = ck.field(row, "capacity_mbps", path, "num", 1.0)
        active = ck.field(row, "active", path, "bool", True, required=False)
        if lid and not _ID.fullmatch(lid):
            ck.fail(f"{path}.id", f"{lid!r} is not a valid identifier")
        if lid in link_ids or lid in ids:
            ck.fail(f"{path}.id", f"duplicate id {lid!r}")
        link_ids.add(lid)
        if not (isinstance(ends, list) and len(ends) == 2):
            ck.fail(f"{path}.endpoints", "expected [sender, receiver]")
            ends = ["", ""]
        for j, end in enumerate(ends):
            if end not in ids:
                ck.fail(f"{path}.endpoints[{j}]", f"unknown asset {end!r}")
        if tech not in TECHNOLOGIES:
            ck.fail(f"{path}.technology", f"unknown technology {tech!r}")
        if _num(cap) and cap <= 0:
            ck.fail(f"{path}.capacity_mbps", "must be > 0")
        if active:
            if ends[0] in active_senders:
                ck.fail(f"{path}.active", f"{ends[0]} already sends over {active_senders[ends[0]]}")
            active_senders[ends[0]] = lid
        links.append(LinkSpec(lid, ends[0], ends[1], tech, float(cap), bool(active)))

    attacks: List[AttackEvent] = []
    for i, row in enumerate(ck.field(data, "attacks", "", "list", [], required=False) or []):
        path = f"attacks[{i}]"
        tick = ck.field(row, "tick", path, "int", 0)
        kind = ck.field(row, "kind", path, "str", "")
        if isinstance(tick, int) and isinstance(duration, int) and not 0 <= tick < duration:
            ck.fail(f"{path}.tick", f"must be in [0, {duration})")
        if kind not in ATTACK_KINDS:
            ck.fail(f"{path}.kind", f"unknown attack kind {kind!r}")
            continue
        key = "link" if kind in LINK_ATTACKS else "asset"
        target = ck.field(row, key, path, "str", "")
        if target and target not in (link_ids if key == "link" else ids):
            ck.fail(f"{path}.{key}", f"unknown {key} {target!r}")
        multiplier = None
        if kind == "degrade_bandwidth":
            multiplier = ck.field(row, "multiplier", path, "num", 1.0)
            if _num(multiplier) and not 0 <= multiplier <= 1:
                ck.fail(f"{path}.multiplier", "must be in [0, 1]")
        attacks.append(AttackEvent(tick, kind, target, multiplier))

    policy, settings, enforced = _policy(ck, data.get("policy", {}))
    if ck.issues:
        raise ScenarioError(ck.issues)
    attacks.sort(key=lambda a: a.tick)
    return Scenario(str(data.get("name", name)), tuple(assets), tuple(links), tuple(attacks),
                    duration, seed, policy, settings, enforced)


def _policy(ck: _Checker, raw) -> Tuple[PolicyConfig, SimSettings, bool]:
    if not isinstance(raw, Mapping):
        ck.fail("policy", "expected an object")
        raw = {}
    kwargs: Dict[str, Any] = {}
    if "stages" in raw:
        try:
            kwargs["stages"] = BandwidthStageConfig.from_rows(raw["stages"])
        except (StageConfigError, TypeError) as exc:
            ck.fail("policy.stages", str(exc))
    for key, kind in (("jam_floor_mbps", "num"), ("jam_ticks", "int"),
                      ("blind_threshold", "num"), ("blind_ticks", "int")):
        value = ck.field(raw, key, "policy", kind, required=False)
        if value is not None:
            kwargs[key] = value
    enforced = "abac" in raw
    if enforced:
        try:
            kwargs["abac"] = AbacPolicy.from_config(raw["abac"])
        except (AbacError, TypeError, AttributeError) as exc:
            ck.fail("policy.abac", str(exc))
    engine_attrs = ck.field(raw, "engine_attributes", "policy", "dict", required=False)
    if engine_attrs is not None:
        kwargs["engine_attributes"] = dict(engine_attrs)
    rules = ck.field(raw, "rules", "policy", "str", required=False)
    if rules is not None:
        kwargs["extra_rules"] = rules
    try:
        policy = PolicyConfig(**kwargs)
    except PolicyError as exc:
        ck.fail("policy", str(exc))
        policy = PolicyConfig()

    sim: Dict[str, Any] = {}
    speed = ck.field(raw, "drone_speed", "policy", "num", required=False)
    if speed is not None:
        if speed <= 0:
            ck.fail("policy.drone_speed", "must be > 0")
        sim["drone_speed"] = float(speed)
    reqs = ck.field(raw, "payload_requirements", "policy", "dict", required=False)
    if reqs is not None:
        merged = dict(DEFAULT_PAYLOAD_REQUIREMENTS)
        for mode, value in reqs.items():
            if mode not in PAYLOAD_MODES:
                ck.fail(f"policy.payload_requirements.{mode}", "unknown payload mode")
            elif not _num(value) or value < 0:
                ck.fail(f"policy.payload_requirements.{mode}", "expected a number >= 0")
            else:
                merged[mode] = float(value)
        sim["payload_requirements"] = merged
    return policy, SimSettings(**sim), enforced


def load_scenario(source: Union[str, Path]) -> Scenario:
    """Load a bundled scenario by name, or a scenario JSON file by path."""
    text = None
    name = str(source)
    if isinstance(source, str) and source in BUNDLED:
        text = bundled_text(source)
    else:
        path = Path(source)
        name = path.stem
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioError(f"{source}: cannot read scenario ({exc.strerror or exc})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"(json) line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(data, name)


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise ScenarioError(f"unknown bundled scenario {name!r}")
    return resources.files("capd").joinpath(f"data/scenarios/{name}.json").read_text(encoding="utf-8")

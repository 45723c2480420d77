"""Telemetry ingestion, attack detection and mitigation selection over the KB."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from importlib import resources
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from ..rdf_core import (
    BF, RDF_TYPE, STIX, SOSA, IRI, Literal, Term, Triple, numeric_value,
)
from ..rdf_core.terms import lexical_form
from ..ontology.schema import SUBCLASS_OF, builtin_schema
from ..reasoner import KnowledgeBase, ProofNode, parse_rules
from ..sparql import SelectQuery, evaluate, parse_query
from .abac import AbacPolicy
from .stages import BandwidthStageConfig, Stage, quantize

METRICS = ("bandwidth_mbps", "luminance", "audio_level", "position")

SWITCH_TO_LORAWAN = "SWITCH_TO_LORAWAN"
SWITCH_TO_MICROPHONE = "SWITCH_TO_MICROPHONE"
REPOSITION_NEAREST_DRONE = "REPOSITION_NEAREST_DRONE"
NO_ASSET_AVAILABLE = "NO_ASSET_AVAILABLE"

# attack kind -> (attack class, response program)
RESPONSES = {
    "jamming": ("CyberAttack", SWITCH_TO_LORAWAN),
    "sensor_subversion": ("Attack", SWITCH_TO_MICROPHONE),
    "kinetic": ("Kinetic", REPOSITION_NEAREST_DRONE),
}

TIME_ALIAS, STAGE_ALIAS, CODE_ALIAS = "Time", "BandwidthStage", "Mitigation_Program"

DETECTION_RULES = """
link_denial: ?o a bf:BandwidthObservation, ?o bf:hasResult ?r, ?r bf:value ?v, [?v < {jam_floor}]
    => ?o bf:indicates bf:LinkDenial .
sensor_blinded: ?o a bf:LuminanceObservation, ?o bf:hasResult ?r, ?r bf:value ?v, [?v < {blind_threshold}]
    => ?o bf:indicates bf:SensorBlinded .
respond: ?atk bf:attackKind ?k, ?coa bf:respondsTo ?k => ?coa stix:mitigates ?atk .
"""

_P_TIME = IRI(SOSA + "phenomenonTime")
_P_CODE = IRI(BF + "code")
_P_MITIGATES = IRI(STIX + "mitigates")
_P_HAS_PP = IRI(STIX + "hasProtectionProgram")


def _bf(local: str) -> IRI:
    return IRI(BF + local)


class PolicyError(ValueError):
    pass


class DuplicateObservationError(PolicyError):
    pass


def use_case1_query_text() -> str:
    """The Use Case 1 stage-selection query, as shipped in the package data."""
    return resources.files("capd").joinpath("data/usecase1.rq").read_text(encoding="utf-8")


# -- records and decisions ---------------------------------------------------

@dataclass(frozen=True)
class ObservationRecord:
    asset_id: str
    tick: int
    metric: str
    value: float = 0.0
    position: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise PolicyError(f"unknown metric {self.metric!r}")
        if not isinstance(self.tick, int) or self.tick < 0:
            raise PolicyError(f"tick must be a non-negative integer, got {self.tick!r}")
        if self.value < 0:
            raise PolicyError(f"observation value must be >= 0, got {self.value}")
        if self.metric == "position" and self.position is None:
            raise PolicyError("position observations need (x, y)")
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_-]*", self.asset_id or ""):
            raise PolicyError(f"asset id {self.asset_id!r} is not a valid local name")


@dataclass(frozen=True)
class Provenance:
    """Why a decision was taken: the bound row, the triples it rests on, and
    for detection responses the proof of the mitigation link."""

    bindings: Tuple[Tuple[str, Term], ...]
    triples: Tuple[Triple, ...]
    proof: Optional[ProofNode] = None
    note: str = ""

    def cited_triples(self) -> List[Triple]:
        out = list(self.triples)
        if self.proof is not None:
            out += [n.triple for n in self.proof.nodes()]
        return out

    def summary(self) -> str:
        parts = [f"{name}={_short(value)}" for name, value in self.bindings]
        text = " ".join(parts)
        if self.proof is not None:
            text += f" proof depth {self.proof.depth()}"
        if self.note:
            text = f"{self.note}; {text}" if text else self.note
        return f"{text} ({len(self.triples)} triples)"


@dataclass(frozen=True)
class MitigationDecision:
    tick: int
    attack_iri: Optional[IRI]
    plan_iri: Optional[IRI]
    program_code: str
    target_asset: str
    explanation: Provenance
    params: Tuple[Tuple[str, object], ...] = ()

    def param(self, name, default=None):
        return dict(self.params).get(name, default)

    def to_record(self) -> dict:
        rec = {
            "code": self.program_code,
            "target": self.target_asset,
            "attack": _short(self.attack_iri) if self.attack_iri else None,
            "plan": _short(self.plan_iri) if self.plan_iri else None,
            "explanation": self.explanation.summary(),
        }
        for k, v in self.params:
            rec[k] = list(v) if isinstance(v, tuple) else v
        return rec


def _short(term) -> str:
    if isinstance(term, Literal):
        return term.lexical
    text = lexical_form(term)
    for prefix, ns in (("bf", BF), ("stix", STIX), ("sosa", SOSA)):
        if text.startswith(ns):
            return f"{prefix}:{text[len(ns):]}"
    return text


# -- ingestion ---------------------------------------------------------------

_NODE_NAMES = {
    "bandwidth_mbps": ("obs", "res", "BandwidthObservation"),
    "luminance": ("lum", "lumres", "LuminanceObservation"),
    "audio_level": ("aud", "audres", "AudioObservation"),
    "position": ("pos", None, "PositionObservation"),
}
_OBS_IRI = re.compile(r"(obs|lum|aud|pos)_(.+)_(\d+)$")


def observation_iri(asset_id: str, tick: int, metric: str = "bandwidth_mbps") -> IRI:
    return _bf(f"{_NODE_NAMES[metric][0]}_{asset_id}_{tick}")


def parse_observation_iri(term) -> Optional[Tuple[str, int]]:
    """(asset, tick) encoded in an observation node name, if it is one."""
    if not isinstance(term, IRI) or not term.value.startswith(BF):
        return None
    m = _OBS_IRI.fullmatch(term.value[len(BF):])
    return (m.group(2), int(m.group(3))) if m else None


def observation_triples(rec: ObservationRecord) -> List[Triple]:
    obs_prefix, res_prefix, cls = _NODE_NAMES[rec.metric]
    obs = _bf(f"{obs_prefix}_{rec.asset_id}_{rec.tick}")
    out = [Triple(obs, RDF_TYPE, _bf(cls)), Triple(obs, _P_TIME, Literal.integer(rec.tick))]
    if res_prefix is None:
        x, y = rec.position
        out += [Triple(obs, _bf("x"), Literal.decimal(quantize(x))),
                Triple(obs, _bf("y"), Literal.decimal(quantize(y)))]
    else:
        res = _bf(f"{res_prefix}_{rec.asset_id}_{rec.tick}")
        out += [Triple(obs, _bf("hasResult"), res),
                Triple(res, _bf("value"), Literal.decimal(quantize(rec.value)))]
    return out


def ingest(kb: KnowledgeBase, rec: ObservationRecord) -> List[Triple]:
    """Assert one observation, chain to fixpoint, return the asserted triples."""
    triples = _assert_observation(kb, rec)
    kb.forward_chain()
    return triples


def _assert_observation(kb: KnowledgeBase, rec: ObservationRecord) -> List[Triple]:
    triples = observation_triples(rec)
    if triples[0] in kb.asserted:
        raise DuplicateObservationError(
            f"observation ({rec.asset_id}, tick {rec.tick}, {rec.metric}) already ingested")
    kb.assert_all(triples)
    return triples


# -- fixtures ----------------------------------------------------------------

def operational_vocabulary() -> List[Triple]:
    """Observation subtypes beyond the bandwidth one used by telemetry."""
    return [Triple(_bf(c), SUBCLASS_OF, _bf("Observation"))
            for c in ("LuminanceObservation", "AudioObservation", "PositionObservation")]


def mitigation_fixture(cfg: BandwidthStageConfig) -> List[Triple]:
    cfg.check()
    out = []
    for stage in cfg.stages:
        s = stage.slug
        attack, coa, plan, prog = (_bf(f"{k}_{s}") for k in ("stage", "coa", "plan", "program"))
        out += [
            Triple(attack, RDF_TYPE, _bf("BandwidthAttack")),
            Triple(attack, _bf("lowRange"), Literal.decimal(stage.low)),
            Triple(attack, _bf("highRange"), Literal.decimal(stage.high)),
            Triple(coa, RDF_TYPE, _bf("CourseOfAction")),
            Triple(coa, _P_MITIGATES, attack),
            Triple(coa, _bf("listedPlan"), plan),
            Triple(plan, RDF_TYPE, _bf("MitigationPlan")),
            Triple(plan, _P_HAS_PP, prog),
            Triple(prog, RDF_TYPE, _bf("ProtectionProgram")),
            Triple(prog, _P_CODE, Literal(stage.program)),
        ]
    return out


def seed_mitigation_fixture(kb: KnowledgeBase, cfg: BandwidthStageConfig) -> None:
    kb.assert_all(mitigation_fixture(cfg))
    kb.forward_chain()


def response_fixture() -> List[Triple]:
    """Course-of-action chains answering detected (non-bandwidth) attacks."""
    out = []
    for kind, (_, code) in RESPONSES.items():
        coa, plan, prog = (_bf(f"{k}_{kind}") for k in ("coa", "plan", "program"))
        out += [
            Triple(coa, RDF_TYPE, _bf("CourseOfAction")),
            Triple(coa, _bf("respondsTo"), Literal(kind)),
            Triple(coa, _bf("listedPlan"), plan),
            Triple(plan, RDF_TYPE, _bf("MitigationPlan")),
            Triple(plan, _P_HAS_PP, prog),
            Triple(prog, RDF_TYPE, _bf("ProtectionProgram")),
            Triple(prog, _P_CODE, Literal(code)),
        ]
    return out


def registered_programs(cfg: BandwidthStageConfig) -> Set[str]:
    return set(cfg.programs) | {code for _, code in RESPONSES.values()} | {NO_ASSET_AVAILABLE}


# -- stage selection ---------------------------------------------------------

def _alias_var(q: SelectQuery, alias: str) -> str:
    for item in q.projection:
        if item.name == alias:
            return item.var.name
    raise PolicyError(f"query must project ?{alias}")


def select_mitigation(kb: KnowledgeBase, query: SelectQuery,
                      programs: Optional[Iterable[str]] = None,
                      tick: Optional[int] = None) -> List[MitigationDecision]:
    """One decision per query row, in query order.

    ``programs`` is the registry of allowed codes (default: the default stage
    programs plus the detection responses). ``tick`` keeps only rows whose
    Time equals it.
    """
    registry = set(programs) if programs is not None else registered_programs(
        BandwidthStageConfig.default())
    time_var, stage_var, code_var = (_alias_var(query, a) for a in (TIME_ALIAS, STAGE_ALIAS, CODE_ALIAS))
    plan_type = _bf("MitigationPlan")
    out = []
    for row in evaluate(query, kb.graph, full=True):
        when = numeric_value(row[time_var])
        if when is None or when != int(when):
            raise PolicyError(f"Time binding {row[time_var]} is not an integer tick")
        if tick is not None and when != tick:
            continue
        code = lexical_form(row[code_var]) if not isinstance(row[code_var], Literal) else row[code_var].lexical
        if code not in registry:
            raise PolicyError(f"unregistered protection program {code!r}")
        plan = next((v for v in row.values() if (v, RDF_TYPE, plan_type) in kb.graph), None)
        target = next((parse_observation_iri(v)[0] for v in row.values()
                       if parse_observation_iri(v)), "")
        cited = tuple(p.instantiate(row) for p in query.patterns)
        bindings = tuple((item.name, row[item.var.name]) for item in query.projection)
        out.append(MitigationDecision(int(when), row[stage_var], plan, code, target,
                                      Provenance(bindings, cited, note="stage query row")))
    return out


# -- the engine --------------------------------------------------------------

@dataclass
class PolicyConfig:
    stages: BandwidthStageConfig = field(default_factory=BandwidthStageConfig.default)
    jam_floor_mbps: float = 0.01
    jam_ticks: int = 3
    blind_threshold: float = 0.1
    blind_ticks: int = 3
    abac: Optional[AbacPolicy] = None
    engine_attributes: Mapping[str, object] = field(default_factory=lambda: {"role": "policy_engine"})
    extra_rules: str = ""

    def __post_init__(self):
        if self.jam_ticks < 1 or self.blind_ticks < 1:
            raise PolicyError("detection persistence must be at least 1 tick")
        if self.jam_floor_mbps < 0 or self.blind_threshold < 0:
            raise PolicyError("detection thresholds must be >= 0")

    def detection_rules_text(self) -> str:
        return DETECTION_RULES.format(jam_floor=Decimal(repr(float(self.jam_floor_mbps))),
                                      blind_threshold=Decimal(repr(float(self.blind_threshold))))


@dataclass
class _AssetInfo:
    kind: str
    movable: bool
    position: Tuple[float, float]


class PolicyEngine:
    """Stateful wrapper: one KB, the fixtures, and the consecutive-tick counters
    that cannot live in a monotone triple store."""

    def __init__(self, config: Optional[PolicyConfig] = None, kb: Optional[KnowledgeBase] = None):
        self.config = config or PolicyConfig()
        self.kb = kb if kb is not None else KnowledgeBase()
        for rule in parse_rules(self.config.detection_rules_text() + "\n" + self.config.extra_rules):
            self.kb.add_rule(rule)
        self.kb.assert_all(builtin_schema())
        self.kb.assert_all(operational_vocabulary())
        self.kb.assert_all(mitigation_fixture(self.config.stages))
        self.kb.assert_all(response_fixture())
        self.kb.forward_chain()
        self.query = parse_query(use_case1_query_text())
        self.programs = registered_programs(self.config.stages)
        self.assets: Dict[str, _AssetInfo] = {}
        self.lorawan: Dict[str, float] = {}  # sender -> LoRaWAN capacity
        self.last_seen: Dict[str, int] = {}
        self.destroyed: Set[str] = set()
        self._jam_run: Dict[str, int] = {}
        self._blind_run: Dict[str, int] = {}
        self.detections: List[dict] = []

    # topology

    def register_asset(self, asset_id: str, kind: str, position, movable: bool = False) -> None:
        node = _bf(asset_id)
        cls = "MovableAsset" if movable else "ImmovableAsset"
        self.kb.assert_all([Triple(node, RDF_TYPE, _bf(cls)),
                            Triple(node, _bf("assetKind"), Literal(kind))])
        self.kb.forward_chain()
        self.assets[asset_id] = _AssetInfo(kind, movable, tuple(position))

    def register_link(self, link_id: str, sender: str, receiver: str, technology: str,
                      capacity: float) -> None:
        node = _bf(link_id)
        self.kb.assert_all([
            Triple(node, RDF_TYPE, _bf("Link")),
            Triple(node, _bf("source"), _bf(sender)),
            Triple(node, _bf("sink"), _bf(receiver)),
            Triple(node, _bf("technology"), Literal(technology)),
            Triple(node, _bf("capacity"), Literal.decimal(quantize(capacity))),
        ])
        self.kb.forward_chain()
        if technology == "lorawan":
            self.lorawan.setdefault(sender, capacity)

    # per-tick cycle

    def observe(self, records: Iterable[ObservationRecord]) -> None:
        for rec in records:
            _assert_observation(self.kb, rec)
            self.last_seen[rec.asset_id] = max(self.last_seen.get(rec.asset_id, -1), rec.tick)
            if rec.metric == "position" and rec.asset_id in self.assets:
                self.assets[rec.asset_id].position = tuple(rec.position)
        self.kb.forward_chain()

    def decide(self, tick: int, world_view: Mapping[str, Sequence[ObservationRecord]]) -> List[MitigationDecision]:
        """Stage decisions for this tick's bandwidth rows, then detection responses."""
        stage = select_mitigation(self.kb, self.query, self.programs, tick=tick)
        return stage + self.detect_and_decide(tick, world_view)

    def detect_and_decide(self, tick: int,
                          world_view: Mapping[str, Sequence[ObservationRecord]]) -> List[MitigationDecision]:
        self.detections = []
        out: List[MitigationDecision] = []
        for asset in sorted(world_view):
            metrics = {r.metric for r in world_view[asset] if r.tick == tick}
            if "bandwidth_mbps" in metrics:
                denied = (observation_iri(asset, tick), _bf("indicates"), _bf("LinkDenial")) in self.kb
                if self._bump(self._jam_run, asset, denied) == self.config.jam_ticks:
                    out += self._respond_jamming(tick, asset)
            if "luminance" in metrics:
                blinded = (observation_iri(asset, tick, "luminance"), _bf("indicates"),
                           _bf("SensorBlinded")) in self.kb
                if self._bump(self._blind_run, asset, blinded) == self.config.blind_ticks:
                    out += self._respond_blinding(tick, asset)
        for asset in sorted(self.assets):
            seen = self.last_seen.get(asset)
            if asset in self.destroyed or seen is None or seen >= tick:
                continue
            self.destroyed.add(asset)
            out += self._respond_kinetic(tick, asset)
        return out

    @staticmethod
    def _bump(counter: Dict[str, int], asset: str, hit: bool) -> int:
        counter[asset] = counter.get(asset, 0) + 1 if hit else 0
        return counter[asset]

    # detection responses

    def _assert_attack(self, tick: int, kind: str, asset: str, extra: Sequence[Triple] = ()) -> IRI:
        cls, _ = RESPONSES[kind]
        atk = _bf(f"attack_{kind}_{asset}_{tick}")
        self.kb.assert_all([Triple(atk, RDF_TYPE, _bf(cls)),
                            Triple(atk, _bf("attackKind"), Literal(kind)),
                            Triple(atk, _bf("targets"), _bf(asset)),
                            Triple(atk, _bf("detectedAt"), Literal.integer(tick)), *extra])
        self.kb.forward_chain()
        self.detections.append({"kind": kind, "asset": asset, "attack": _short(atk)})
        return atk

    def _response(self, tick: int, atk: IRI, target: str, note: str,
                  code: Optional[str] = None, params=()) -> MitigationDecision:
        coa = next(iter(self.kb.graph.subjects(_P_MITIGATES, atk)), None)
        if coa is None:
            raise PolicyError(f"no course of action mitigates {_short(atk)}")
        plan = self.kb.graph.value(coa, _bf("listedPlan"))
        prog = self.kb.graph.value(plan, _P_HAS_PP)
        program_code = self.kb.graph.value(prog, _P_CODE).lexical
        code = code or program_code
        if code not in self.programs:
            raise PolicyError(f"unregistered protection program {code!r}")
        cited = (Triple(coa, _bf("listedPlan"), plan), Triple(plan, _P_HAS_PP, prog),
                 Triple(prog, _P_CODE, Literal(program_code)))
        proof = self.kb.explain(Triple(coa, _P_MITIGATES, atk))
        prov = Provenance((("attack", atk), ("coa", coa)), cited, proof, note)
        return MitigationDecision(tick, atk, plan, code, target, prov, tuple(params))

    def _stage_decision(self, tick: int, asset: str, capacity: float) -> Optional[MitigationDecision]:
        stage: Optional[Stage] = self.config.stages.stage_for(capacity)
        if stage is None:
            return None
        atk = _bf(f"stage_{stage.slug}")
        coa = self.kb.graph.subjects(_P_MITIGATES, atk)[0]
        plan = self.kb.graph.value(coa, _bf("listedPlan"))
        prog = self.kb.graph.value(plan, _P_HAS_PP)
        cited = (Triple(atk, _bf("lowRange"), Literal.decimal(stage.low)),
                 Triple(atk, _bf("highRange"), Literal.decimal(stage.high)),
                 Triple(coa, _P_MITIGATES, atk), Triple(coa, _bf("listedPlan"), plan),
                 Triple(plan, _P_HAS_PP, prog), Triple(prog, _P_CODE, Literal(stage.program)))
        prov = Provenance((("capacity", Literal.decimal(quantize(capacity))), ("stage", atk)), cited,
                          note="fallback link capacity")
        return MitigationDecision(tick, atk, plan, stage.program, asset, prov)

    def _respond_jamming(self, tick: int, asset: str) -> List[MitigationDecision]:
        atk = self._assert_attack(tick, "jamming", asset)
        k = self.config.jam_ticks
        out = [self._response(tick, atk, asset, f"bandwidth below {self.config.jam_floor_mbps} Mbps "
                                                f"for {k} ticks")]
        capacity = self.lorawan.get(asset)
        if capacity is not None:
            follow = self._stage_decision(tick, asset, capacity)
            if follow is not None:
                out.append(follow)
        return out

    def _nearest(self, asset: str, kind: str) -> Optional[Tuple[str, float]]:
        """Nearest alive registered asset of ``kind``; ties broken by id."""
        origin = self.assets[asset].position
        found = []
        for node in self.kb.graph.subjects(_bf("assetKind"), Literal(kind)):
            other = node.value[len(BF):]
            if other == asset or other in self.destroyed or other not in self.assets:
                continue
            if kind == "drone" and not self.assets[other].movable:
                continue
            found.append((math.dist(origin, self.assets[other].position), other))
        if not found:
            return None
        dist, other = min(found)
        return other, dist

    def _respond_blinding(self, tick: int, asset: str) -> List[MitigationDecision]:
        atk = self._assert_attack(tick, "sensor_subversion", asset)
        mic = self._nearest(asset, "microphone")
        note = f"luminance below {self.config.blind_threshold} for {self.config.blind_ticks} ticks"
        if mic is None:
            return [self._response(tick, atk, asset, note + "; no microphone alive", NO_ASSET_AVAILABLE)]
        return [self._response(tick, atk, asset, note, params=(("microphone", mic[0]),))]

    def _respond_kinetic(self, tick: int, asset: str) -> List[MitigationDecision]:
        x, y = self.assets[asset].position
        atk = self._assert_attack(tick, "kinetic", asset, [
            Triple(_bf(f"attack_kinetic_{asset}_{tick}"), _bf("atX"), Literal.decimal(quantize(x))),
            Triple(_bf(f"attack_kinetic_{asset}_{tick}"), _bf("atY"), Literal.decimal(quantize(y))),
        ])
        note = f"{asset} stopped reporting (destroyed at ({x:g}, {y:g}))"
        drone = self._nearest(asset, "drone")
        if drone is None:
            return [self._response(tick, atk, asset, note + "; no drone alive", NO_ASSET_AVAILABLE,
                                   (("replaces", asset),))]
        return [self._response(tick, atk, drone[0], note, params=(
            ("replaces", asset), ("destination", (x, y)), ("distance", round(drone[1], 6))))]

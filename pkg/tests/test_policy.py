import itertools
from decimal import Decimal

import pytest
from hypothesis import given, settings, strategies as st

from capd.ontology import builtin_schema, validate
from capd.policy import (
    DEFAULT_DENY, NO_ASSET_AVAILABLE, REPOSITION_NEAREST_DRONE, SWITCH_TO_LORAWAN,
    SWITCH_TO_MICROPHONE, AbacError, AbacPolicy, AbacRule, BandwidthStageConfig,
    DuplicateObservationError, ObservationRecord, PolicyConfig, PolicyEngine, PolicyError,
    Predicate, StageConfigError, check_access, ingest, mitigation_fixture, observation_iri,
    select_mitigation, use_case1_query_text,
)
from capd.rdf_core import RDF_TYPE, Graph, Triple, bf
from capd.reasoner import KnowledgeBase
from capd.sim import DEFAULT_PAYLOAD_REQUIREMENTS, PROGRAM_MODES
from capd.sparql import parse_query

from cases import abac_case
from conftest import UC1_CODES, fixture_kb

QUERY = parse_query(use_case1_query_text())
DEFAULT = BandwidthStageConfig.default()


# -- ingestion ---------------------------------------------------------------

def test_ingest_bandwidth_gives_the_query_shape():
    kb = KnowledgeBase()
    kb.assert_all(builtin_schema())
    added = ingest(kb, ObservationRecord("Asset_A", 1, "bandwidth_mbps", 7.5))
    assert len(added) == 4
    obs = observation_iri("Asset_A", 1)
    assert Triple(obs, RDF_TYPE, bf("BandwidthObservation")) in added
    assert Triple(obs, RDF_TYPE, bf("Observation")) in kb
    assert validate(Graph(added), builtin_schema()) == []


def test_ingest_other_metrics():
    kb = KnowledgeBase()
    ingest(kb, ObservationRecord("cam", 2, "luminance", 0.8))
    ingest(kb, ObservationRecord("cam", 2, "position", 0.0, (1.5, 2)))
    assert Triple(bf("lum_cam_2"), RDF_TYPE, bf("LuminanceObservation")) in kb
    assert Triple(bf("pos_cam_2"), RDF_TYPE, bf("PositionObservation")) in kb


def test_duplicate_observation_is_an_error():
    kb = KnowledgeBase()
    rec = ObservationRecord("Asset_A", 1, "bandwidth_mbps", 7.5)
    ingest(kb, rec)
    with pytest.raises(DuplicateObservationError):
        ingest(kb, ObservationRecord("Asset_A", 1, "bandwidth_mbps", 3.0))


@pytest.mark.parametrize("kwargs", [
    {"metric": "humidity"}, {"tick": -1}, {"value": -0.5}, {"metric": "position"},
    {"asset_id": "bad id"},
])
def test_observation_record_validation(kwargs):
    base = {"asset_id": "A", "tick": 0, "metric": "bandwidth_mbps", "value": 1.0}
    with pytest.raises(PolicyError):
        ObservationRecord(**{**base, **kwargs})


# -- stages and fixture ------------------------------------------------------

def test_default_stages():
    assert [s.program for s in DEFAULT.stages] == UC1_CODES[::-1]
    assert [str(s.high) for s in DEFAULT.stages] == ["0.0999", "0.9999", "4.9999", "100000.0"]


@pytest.mark.parametrize("rows,message", [
    ([("a", "0", "1.0", "X"), ("b", "0.5", "2", "Y")], "overlapping"),
    ([("a", "0", "1.0", "X"), ("b", "1.5", "2", "Y")], "gap"),
    ([("a", "0.1", "1.0", "X")], "start at 0"),
    ([("a", "0", "1.0", "X"), ("a", "1.0001", "2", "Y")], "unique"),
    ([("a", "0", "1.0", "")], "program"),
])
def test_stage_config_errors(rows, message):
    with pytest.raises(StageConfigError, match=message):
        BandwidthStageConfig.from_rows(rows)


def test_fixture_shape_counts():
    triples = mitigation_fixture(DEFAULT)
    def count(cls):
        return sum(1 for t in triples if t.predicate == RDF_TYPE and t.object == bf(cls))
    assert count("BandwidthAttack") == count("CourseOfAction") == count("MitigationPlan") == 4
    codes = {t.object.lexical for t in triples if t.predicate == bf("code")}
    assert codes == set(UC1_CODES)
    assert validate(Graph(triples), builtin_schema()) == []


def test_fixture_without_observations_selects_nothing():
    assert select_mitigation(fixture_kb(()), QUERY) == []


# -- stage selection -------------------------------------------------------

def test_select_mitigation_use_case_one(uc1_kb):
    decisions = select_mitigation(uc1_kb, QUERY)
    assert [d.program_code for d in decisions] == UC1_CODES
    assert [d.tick for d in decisions] == [1, 2, 3, 4]
    assert {d.target_asset for d in decisions} == {"Asset_A"}
    assert all(d.plan_iri is not None for d in decisions)


def test_explanation_cites_triples_present_in_the_kb(uc1_kb):
    for d in select_mitigation(uc1_kb, QUERY):
        cited = d.explanation.cited_triples()
        assert len(cited) == len(QUERY.patterns)
        assert all(t in uc1_kb for t in cited)


def test_unregistered_program_is_named():
    kb = fixture_kb((7.5,))
    with pytest.raises(PolicyError, match="SEND_COLOR_VIDEO"):
        select_mitigation(kb, QUERY, programs={"SEND_OBJECT_COUNT"})


@pytest.mark.parametrize("value,code", [
    (0.0, "SEND_OBJECT_COUNT"), (0.0999, "SEND_OBJECT_COUNT"), (0.1, "SEND_STILL_IMAGES"),
    (0.9999, "SEND_STILL_IMAGES"), (1.0, "SEND_GRAYSCALE_VIDEO"), (4.9999, "SEND_GRAYSCALE_VIDEO"),
    (5.0, "SEND_COLOR_VIDEO"), (100000.0, "SEND_COLOR_VIDEO"),
])
def test_boundary_values_select_exactly_one_stage(value, code):
    decisions = select_mitigation(fixture_kb((value,)), QUERY)
    assert [d.program_code for d in decisions] == [code]
    assert [s.program for s in DEFAULT.matching(value)] == [code]


@settings(max_examples=200, deadline=None)
@given(st.decimals(min_value=0, max_value=100000, places=4, allow_nan=False))
def test_every_value_on_the_grid_matches_exactly_one_stage(v):
    assert len(DEFAULT.matching(v)) == 1


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=0, max_value=20, allow_nan=False), min_size=1, max_size=5))
def test_one_decision_per_observation(values):
    decisions = select_mitigation(fixture_kb(values), QUERY)
    assert len(decisions) == len(values)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.01, max_value=1000, allow_nan=False))
def test_selected_program_fits_the_observed_bandwidth(v):
    stage = DEFAULT.stage_for(v)
    required = DEFAULT_PAYLOAD_REQUIREMENTS[PROGRAM_MODES[stage.program]]
    assert Decimal(str(required)) <= Decimal(repr(v)).quantize(Decimal("0.0001"))


# -- detection -------------------------------------------------------------

def _feed(engine, tick, *records):
    engine.observe(records)
    view = {}
    for r in records:
        view.setdefault(r.asset_id, []).append(r)
    return engine.decide(tick, view)


def test_blinding_for_k_ticks_switches_to_microphone():
    engine = PolicyEngine(PolicyConfig(blind_threshold=0.1, blind_ticks=3))
    engine.register_asset("cam", "camera", (0, 0))
    engine.register_asset("mic", "microphone", (1, 1))
    codes = []
    for t in range(4):
        decisions = _feed(engine, t, ObservationRecord("cam", t, "luminance", 0.02),
                          ObservationRecord("mic", t, "audio_level", 0.6))
        codes.append([d.program_code for d in decisions])
    assert codes == [[], [], [SWITCH_TO_MICROPHONE], []]
    assert engine.detections == []


def test_blinding_without_microphone_reports_no_asset():
    engine = PolicyEngine(PolicyConfig(blind_ticks=1))
    engine.register_asset("cam", "camera", (0, 0))
    (d,) = _feed(engine, 0, ObservationRecord("cam", 0, "luminance", 0.0))
    assert d.program_code == NO_ASSET_AVAILABLE


def test_kinetic_picks_the_nearest_drone():
    engine = PolicyEngine()
    engine.register_asset("ugs1", "ugs", (0, 0))
    engine.register_asset("drone2", "drone", (6, 8), movable=True)
    engine.register_asset("drone1", "drone", (3, 4), movable=True)
    everyone = ("ugs1", "drone1", "drone2")
    _feed(engine, 0, *[ObservationRecord(a, 0, "position", 0.0, engine.assets[a].position) for a in everyone])
    (d,) = _feed(engine, 1, *[ObservationRecord(a, 1, "position", 0.0, engine.assets[a].position)
                              for a in everyone if a != "ugs1"])
    assert d.program_code == REPOSITION_NEAREST_DRONE
    assert d.target_asset == "drone1"
    assert d.param("distance") == 5.0 and d.param("destination") == (0, 0)
    assert all(t in engine.kb for t in d.explanation.cited_triples())


def test_kinetic_without_drone_reports_no_asset():
    engine = PolicyEngine()
    engine.register_asset("ugs1", "ugs", (0, 0))
    engine.register_asset("cmd", "handheld", (1, 0))
    _feed(engine, 0, ObservationRecord("ugs1", 0, "position", 0.0, (0, 0)))
    (d,) = _feed(engine, 1, ObservationRecord("cmd", 1, "position", 0.0, (1, 0)))
    assert d.program_code == NO_ASSET_AVAILABLE


def test_jamming_switches_to_lorawan_then_stage_for_its_capacity():
    engine = PolicyEngine(PolicyConfig(jam_ticks=3))
    engine.register_asset("cam", "camera", (0, 0))
    engine.register_asset("lt", "handheld", (1, 0))
    engine.register_link("l4g", "cam", "lt", "fourg", 10.0)
    engine.register_link("llora", "cam", "lt", "lorawan", 0.3)
    out = []
    for t in range(3):
        decisions = _feed(engine, t, ObservationRecord("cam", t, "bandwidth_mbps", 0.0))
        out.append([d.program_code for d in decisions if d.explanation.note != "stage query row"])
    assert out == [[], [], [SWITCH_TO_LORAWAN, "SEND_STILL_IMAGES"]]
    switch = [d for d in decisions if d.program_code == SWITCH_TO_LORAWAN][0]
    assert switch.explanation.proof is not None
    assert all(t in engine.kb for t in switch.explanation.cited_triples())


# -- ABAC ------------------------------------------------------------------

def _rule(id, effect, action, subject=(), obj=()):
    return AbacRule(id, effect, action, tuple(Predicate(*p) for p in subject),
                    tuple(Predicate(*p) for p in obj))


def test_empty_policy_denies_by_default():
    d = check_access(AbacPolicy(), {"role": "lieutenant"}, {}, "read")
    assert not d.permitted and d.rule_id == DEFAULT_DENY


def test_single_permit():
    policy = AbacPolicy((_rule("p1", "permit", "read", [("role", "=", "lieutenant")],
                               [("classification", "=", "tactical")]),))
    d = check_access(policy, {"role": "lieutenant"}, {"classification": "tactical"}, "read")
    assert d.permitted and d.rule_id == "p1"


def test_deny_overrides_in_every_order():
    rules = [_rule("p1", "permit", "send", [("role", "=", "lieutenant")]),
             _rule("d1", "deny", "*", [("network", "=", "jammed")])]
    for order in itertools.permutations(rules):
        d = check_access(AbacPolicy(tuple(order)), {"role": "lieutenant", "network": "jammed"}, {}, "send")
        assert (d.effect, d.rule_id) == ("deny", "d1")


def test_predicates():
    attrs = {"clearance": 3, "unit": "alpha"}
    assert Predicate("clearance", ">", 2).matches(attrs)
    assert not Predicate("clearance", "<", 2).matches(attrs)
    assert Predicate("unit", "in", ["alpha", "bravo"]).matches(attrs)
    assert Predicate("unit", "!=", "bravo").matches(attrs)
    assert not Predicate("missing", "!=", "x").matches(attrs)
    assert not Predicate("unit", ">", 1).matches(attrs)


def test_malformed_policy_fails_at_load_time():
    with pytest.raises(AbacError, match=r"abac\[0\]"):
        AbacPolicy.from_config([{"effect": "permit", "action": "read",
                                 "subject": [{"attribute": "rank", "op": "<", "value": "major"}]}])
    with pytest.raises(AbacError, match=r"abac\[0\].*action"):
        AbacPolicy.from_config([{"effect": "permit"}])
    with pytest.raises(AbacError, match="unique"):
        AbacPolicy((_rule("a", "permit", "read"), _rule("a", "deny", "read")))


def test_unknown_action_is_rejected():
    with pytest.raises(AbacError):
        check_access(AbacPolicy(), {}, {}, "delete")


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_decision_ignores_rule_order(seed):
    assert abac_case(seed) is None

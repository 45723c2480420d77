import random

import pytest
from hypothesis import given, settings, strategies as st

from capd.ontology import SUBCLASS_OF, builtin_schema
from capd.rdf_core import RDF_TYPE, RDFSyntaxError, STIX, IRI, Literal, Triple, XSD_DECIMAL, bf
from capd.reasoner import (
    KnowledgeBase, Rule, RuleError, TMSError, builtin_rules, parse_rules, replay,
)
from capd.rdf_core.patterns import TriplePattern, Var

from cases import tms_case
from oracles import dfs_subclass_closure, ex, naive_closure, random_assertion, random_rule_text


def kb_with(*triples, rules=None):
    kb = KnowledgeBase(rules=rules)
    kb.assert_all(triples)
    kb.forward_chain()
    return kb


def test_builtin_rules_are_the_four_rdfs_lite_rules():
    assert [r.name for r in builtin_rules()] == ["R1", "R2", "R3", "R4"]


def test_type_propagation():
    kb = kb_with(Triple(bf("drone"), RDF_TYPE, bf("MovableAsset")),
                 Triple(bf("MovableAsset"), SUBCLASS_OF, bf("Asset")))
    assert Triple(bf("drone"), RDF_TYPE, bf("Asset")) in kb
    assert kb.is_inferred(Triple(bf("drone"), RDF_TYPE, bf("Asset")))


def test_domain_entailment_from_schema():
    kb = KnowledgeBase()
    kb.assert_all(builtin_schema())
    kb.assert_triple(Triple(bf("coa"), IRI(STIX + "mitigates"), bf("atk")))
    kb.forward_chain()
    assert Triple(bf("coa"), RDF_TYPE, bf("CourseOfAction")) in kb
    assert Triple(bf("atk"), RDF_TYPE, bf("Attack")) in kb


def test_range_entailment_skips_literals():
    kb = KnowledgeBase()
    kb.assert_all(builtin_schema())
    kb.assert_triple(Triple(bf("res"), bf("value"), Literal("1", XSD_DECIMAL)))
    kb.forward_chain()
    assert Triple(bf("res"), RDF_TYPE, bf("Result")) in kb
    assert not any(isinstance(t.subject, Literal) for t in kb.graph)


def test_empty_kb_infers_nothing():
    kb = KnowledgeBase()
    assert kb.forward_chain() == set()
    assert len(kb) == 0


def test_chain_of_three_edges_adds_three_derived_edges():
    edges = [(ex("A"), ex("B")), (ex("B"), ex("C")), (ex("C"), ex("D"))]
    kb = KnowledgeBase()
    kb.assert_all(Triple(a, SUBCLASS_OF, b) for a, b in edges)
    added = kb.forward_chain()
    expected = {Triple(a, SUBCLASS_OF, b) for a, b in dfs_subclass_closure(edges)} - set(kb.asserted)
    assert added == expected and len(added) == 3


def test_fixpoint_rerun_is_empty():
    kb = kb_with(Triple(ex("A"), SUBCLASS_OF, ex("B")), Triple(ex("x"), RDF_TYPE, ex("A")))
    assert kb.forward_chain() == set()


def test_two_rules_one_triple_two_justifications():
    rules = builtin_rules() + parse_rules("""
        Ka: ?x <http://example.org/p> ?y => ?x a <http://example.org/K> .
        Kb: ?x <http://example.org/q> ?y => ?x a <http://example.org/K> .
    """)
    kb = kb_with(Triple(ex("i"), ex("p"), ex("j")), Triple(ex("i"), ex("q"), ex("j")), rules=rules)
    t = Triple(ex("i"), RDF_TYPE, ex("K"))
    assert len(kb.justifications[t]) == 2
    assert list(kb.inferred.match(*t)) == [t]


def test_retract_removes_unsupported_inference():
    ab, bc, ac = (Triple(ex(a), SUBCLASS_OF, ex(b)) for a, b in ("AB", "BC", "AC"))
    kb = kb_with(ab, bc)
    assert ac in kb
    assert kb.retract(bc) == {bc, ac}
    assert ac not in kb and bc not in kb


def test_retract_keeps_triple_with_remaining_support():
    rules = builtin_rules() + parse_rules("""
        Ka: ?x <http://example.org/p> ?y => ?x a <http://example.org/K> .
        Kb: ?x <http://example.org/q> ?y => ?x a <http://example.org/K> .
    """)
    p, q = Triple(ex("i"), ex("p"), ex("j")), Triple(ex("i"), ex("q"), ex("j"))
    kb = kb_with(p, q, rules=rules)
    kb.retract(p)
    assert Triple(ex("i"), RDF_TYPE, ex("K")) in kb


def test_retract_does_not_keep_cyclic_support_alive():
    # A ⊑ B and B ⊑ A both asserted, x a A; retracting x a A must drop x a B
    kb = kb_with(Triple(ex("A"), SUBCLASS_OF, ex("B")), Triple(ex("B"), SUBCLASS_OF, ex("A")),
                 Triple(ex("x"), RDF_TYPE, ex("A")))
    assert Triple(ex("x"), RDF_TYPE, ex("B")) in kb
    kb.retract(Triple(ex("x"), RDF_TYPE, ex("A")))
    assert Triple(ex("x"), RDF_TYPE, ex("B")) not in kb
    assert set(kb.graph) == set(kb.recompute().graph)


def test_retract_errors_name_the_triple():
    ab = Triple(ex("A"), SUBCLASS_OF, ex("B"))
    kb = kb_with(ab, Triple(ex("B"), SUBCLASS_OF, ex("C")))
    with pytest.raises(TMSError, match="not asserted"):
        kb.retract(Triple(ex("Z"), SUBCLASS_OF, ex("Y")))
    with pytest.raises(TMSError, match="inferred"):
        kb.retract(Triple(ex("A"), SUBCLASS_OF, ex("C")))


def test_retract_of_asserted_and_inferred_triple_keeps_it():
    ac = Triple(ex("A"), SUBCLASS_OF, ex("C"))
    kb = kb_with(Triple(ex("A"), SUBCLASS_OF, ex("B")), Triple(ex("B"), SUBCLASS_OF, ex("C")), ac)
    assert kb.retract(ac) == {ac}
    assert ac in kb and kb.is_inferred(ac) and not kb.is_asserted(ac)


def test_unsafe_rule_rejected_at_registration():
    with pytest.raises(RuleError, match="unsafe"):
        Rule("bad", (TriplePattern(Var("x"), ex("p"), Var("y")),), (TriplePattern(Var("z"), ex("p"), Var("x")),))
    with pytest.raises(RDFSyntaxError, match="unsafe"):
        parse_rules("bad: ?x <http://example.org/p> ?y => ?z <http://example.org/p> ?x")


def test_duplicate_rule_name_rejected():
    kb = KnowledgeBase()
    with pytest.raises(RuleError, match="duplicate"):
        kb.add_rule(builtin_rules()[0])


def test_rule_with_numeric_builtin():
    (rule,) = parse_rules("low: ?r bf:value ?v, [?v < 0.01] => ?r bf:indicates bf:LinkDenial")
    kb = kb_with(Triple(bf("r1"), bf("value"), Literal("0.0", XSD_DECIMAL)),
                 Triple(bf("r2"), bf("value"), Literal("0.5", XSD_DECIMAL)), rules=[rule])
    assert Triple(bf("r1"), bf("indicates"), bf("LinkDenial")) in kb
    assert Triple(bf("r2"), bf("indicates"), bf("LinkDenial")) not in kb


def test_rules_added_later_see_existing_facts():
    kb = kb_with(Triple(ex("i"), ex("p"), ex("j")), rules=[])
    for r in parse_rules("K: ?x <http://example.org/p> ?y => ?y <http://example.org/p> ?x"):
        kb.add_rule(r)
    kb.forward_chain()
    assert Triple(ex("j"), ex("p"), ex("i")) in kb


def test_explain_asserted_is_single_leaf():
    t = Triple(ex("A"), SUBCLASS_OF, ex("B"))
    proof = kb_with(t).explain(t)
    assert proof.asserted and proof.children == ()


def test_explain_type_propagation_names_r2():
    kb = kb_with(Triple(bf("drone"), RDF_TYPE, bf("MovableAsset")),
                 Triple(bf("MovableAsset"), SUBCLASS_OF, bf("Asset")))
    proof = kb.explain(Triple(bf("drone"), RDF_TYPE, bf("Asset")))
    assert proof.rule == "R2" and len(proof.children) == 2
    assert all(c.asserted for c in proof.children)
    assert "[by R2]" in proof.render() and "[asserted]" in proof.render()


def test_explain_transitive_chain_has_three_levels_and_replays():
    kb = KnowledgeBase()
    kb.assert_all(Triple(ex(a), SUBCLASS_OF, ex(b)) for a, b in ("AB", "BC", "CD"))
    kb.assert_triple(Triple(ex("x"), RDF_TYPE, ex("A")))
    kb.forward_chain()
    proof = kb.explain(Triple(ex("A"), SUBCLASS_OF, ex("D")))
    # root, one R1 step, asserted leaves: three levels, two edges deep
    assert proof.depth() == 2
    for node in proof.nodes():
        if not node.asserted:
            assert replay(kb.rule(node.rule), [c.triple for c in node.children], node.triple)
    assert all(kb.is_asserted(leaf.triple) for leaf in proof.leaves())


def test_explain_picks_minimal_depth():
    kb = KnowledgeBase()
    kb.assert_all(Triple(ex(a), SUBCLASS_OF, ex(b)) for a, b in ("AB", "BC", "CD", "AD"))
    kb.forward_chain()
    assert kb.explain(Triple(ex("A"), SUBCLASS_OF, ex("D"))).asserted


def test_explain_unknown_triple():
    with pytest.raises(TMSError):
        KnowledgeBase().explain(Triple(ex("a"), ex("p"), ex("b")))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_tms_matches_recompute_for_random_sequences(seed):
    assert tms_case(seed, max_ops=25) is None


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32), st.randoms(use_true_random=False))
def test_rule_order_does_not_change_the_fixpoint(seed, shuffler):
    rng = random.Random(seed)
    rules = builtin_rules() + [r for i in range(3) for r in parse_rules(random_rule_text(rng, f"X{i}"))]
    facts = [random_assertion(rng) for _ in range(15)]
    shuffled = list(rules)
    shuffler.shuffle(shuffled)
    a = kb_with(*facts, rules=rules)
    b = kb_with(*facts, rules=shuffled)
    assert set(a.graph) == set(b.graph) == naive_closure(rules, facts)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_chaining_grows_and_retraction_shrinks(seed):
    rng = random.Random(seed)
    kb = KnowledgeBase()
    for _ in range(12):
        kb.assert_triple(random_assertion(rng))
        before = set(kb.graph)
        kb.forward_chain()
        assert before <= set(kb.graph)
    for t in sorted(kb.asserted, key=repr)[:4]:
        before = set(kb.graph)
        removed = kb.retract(t)
        assert set(kb.graph) <= before
        assert before - set(kb.graph) <= removed


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_every_proof_replays(seed):
    rng = random.Random(seed)
    kb = KnowledgeBase()
    kb.assert_all(random_assertion(rng) for _ in range(15))
    kb.forward_chain()
    for t in sorted(kb.inferred, key=repr)[:10]:
        proof = kb.explain(t)
        for node in proof.nodes():
            if node.asserted:
                assert kb.is_asserted(node.triple)
            else:
                assert replay(kb.rule(node.rule), [c.triple for c in node.children], node.triple)

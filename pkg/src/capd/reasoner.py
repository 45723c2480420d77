"""Forward-chaining Horn rules over triple patterns, with justification-based
truth maintenance and proof-tree explanations.

Rule text format, one rule per entry::

    name: ?x a ?c, ?c rdfs:subClassOf ?d => ?x a ?d
    jam: ?o bf:hasResult ?r, ?r bf:value ?v, [?v < 0.01] => ?o bf:indicates bf:LinkDenial

Body items are triple patterns or bracketed builtins (``&&``-joined
comparisons, or ``isIRI(?v)`` / ``isLiteral(?v)`` / ``isBlank(?v)``).
``PREFIX p: <iri>`` lines may precede the rules; ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from .rdf_core import (
    DEFAULT_PREFIXES, BNode, Graph, IRI, Literal, RDFSyntaxError, Term, TermError, Triple,
    term_key,
)
from .rdf_core.lexer import TokenStream
from .rdf_core.patterns import Binding, Comparison, TriplePattern, Var, match_pattern
from .rdf_core.terms import COMPARISON_OPS, check_triple
from .rdf_core.turtle import token_to_term


class RuleError(ValueError):
    pass


class TMSError(KeyError):
    def __str__(self):
        return self.args[0] if self.args else "truth maintenance error"


@dataclass(frozen=True)
class TermTest:
    """Builtin guard on the kind of term bound to a variable."""

    test: str
    var: Var

    _KINDS = {"isIRI": IRI, "isLiteral": Literal, "isBlank": BNode}

    def variables(self) -> Tuple[str, ...]:
        return (self.var.name,)

    def holds(self, binding: Binding) -> bool:
        value = binding.get(self.var.name)
        return value is not None and isinstance(value, self._KINDS[self.test])

    def __str__(self):
        return f"{self.test}({self.var})"


@dataclass(frozen=True)
class Rule:
    name: str
    body: Tuple[TriplePattern, ...]
    head: Tuple[TriplePattern, ...]
    builtins: Tuple[object, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise RuleError("rule needs a name")
        if not self.body:
            raise RuleError(f"rule {self.name}: empty body")
        if not self.head:
            raise RuleError(f"rule {self.name}: empty head")
        body_vars = {v for pat in self.body for v in pat.variables()}
        for pat in self.head:
            unsafe = [v for v in pat.variables() if v not in body_vars]
            if unsafe:
                raise RuleError(f"rule {self.name} is unsafe: head variable ?{unsafe[0]} "
                                f"does not occur in a body triple pattern")

    def __str__(self):
        body = [str(p) for p in self.body] + [f"[{b}]" for b in self.builtins]
        return f"{self.name}: {', '.join(body)} => {', '.join(str(h) for h in self.head)}"


@dataclass(frozen=True)
class Justification:
    conclusion: Triple
    rule: str
    premises: Tuple[Triple, ...]


@dataclass(frozen=True)
class ProofNode:
    triple: Triple
    rule: Optional[str] = None
    children: Tuple["ProofNode", ...] = ()

    @property
    def asserted(self) -> bool:
        return self.rule is None

    def depth(self) -> int:
        return 0 if not self.children else 1 + max(c.depth() for c in self.children)

    def leaves(self) -> Iterator["ProofNode"]:
        if not self.children:
            yield self
        for c in self.children:
            yield from c.leaves()

    def nodes(self) -> Iterator["ProofNode"]:
        yield self
        for c in self.children:
            yield from c.nodes()

    def render(self, prefixes: Mapping[str, str] = DEFAULT_PREFIXES, indent: int = 0) -> str:
        label = "asserted" if self.rule is None else f"by {self.rule}"
        line = "  " * indent + f"{format_triple(self.triple, prefixes)}  [{label}]"
        return "\n".join([line] + [c.render(prefixes, indent + 1) for c in self.children])


def format_term(term: Term, prefixes: Mapping[str, str] = DEFAULT_PREFIXES) -> str:
    if isinstance(term, IRI):
        best = max((ns for ns in prefixes.values() if term.value.startswith(ns)), key=len, default=None)
        if best is not None:
            prefix = min(p for p, ns in prefixes.items() if ns == best)
            return f"{prefix}:{term.value[len(best):]}"
        return str(term)
    if isinstance(term, Literal) and term.language is None:
        return f'"{term.lexical}"'
    return str(term)


def format_triple(t: Triple, prefixes: Mapping[str, str] = DEFAULT_PREFIXES) -> str:
    return " ".join(format_term(x, prefixes) for x in t)


# -- rule text ----------------------------------------------------------------

BUILTIN_RULES_TEXT = """
R1: ?a rdfs:subClassOf ?b, ?b rdfs:subClassOf ?c => ?a rdfs:subClassOf ?c
R2: ?x a ?c, ?c rdfs:subClassOf ?d => ?x a ?d
R3: ?x ?p ?y, ?p rdfs:domain ?c => ?x a ?c
R4: ?x ?p ?y, ?p rdfs:range ?c, [isIRI(?y)] => ?y a ?c
"""


def builtin_rules() -> List[Rule]:
    """RDFS-lite entailment: subclass transitivity, type propagation, domain, range."""
    return parse_rules(BUILTIN_RULES_TEXT)


def parse_rules(text: str, prefixes: Optional[Mapping[str, str]] = None) -> List[Rule]:
    ts = TokenStream(text)
    pmap = dict(DEFAULT_PREFIXES if prefixes is None else prefixes)
    rules: List[Rule] = []
    while not ts.at("EOF"):
        if ts.accept("NAME", "PREFIX", nocase=True):
            name = ts.expect("PNAME", what="prefix name")
            iri = ts.expect("IRIREF", what="namespace IRI")
            pmap[name.text[:-1]] = iri.value
            continue
        name_tok = ts.next()
        if name_tok.kind != "PNAME" or not name_tok.text.endswith(":"):
            raise ts.error("expected rule name followed by ':'", name_tok)
        rule_name = name_tok.text[:-1]
        if not rule_name:
            raise ts.error("rule name must not be empty", name_tok)
        body: List[TriplePattern] = []
        builtins: List[object] = []
        while True:
            if ts.accept("PUNCT", "["):
                builtins.extend(_parse_builtin(ts, pmap))
                ts.expect("PUNCT", "]")
            else:
                body.append(_parse_pattern(ts, pmap))
            if ts.accept("PUNCT", ","):
                continue
            ts.expect("OP", "=>", what="',' or '=>'")
            break
        head = [_parse_pattern(ts, pmap)]
        while ts.accept("PUNCT", ","):
            head.append(_parse_pattern(ts, pmap))
        ts.accept("PUNCT", ".")
        try:
            rules.append(Rule(rule_name, tuple(body), tuple(head), tuple(builtins)))
        except RuleError as exc:
            raise RDFSyntaxError(str(exc), name_tok.line, name_tok.column, name_tok.text) from None
    return rules


def _parse_slot(ts: TokenStream, pmap, predicate=False):
    tok = ts.next()
    if tok.kind == "VAR":
        return Var(tok.text[1:])
    if predicate and not (tok.kind in ("IRIREF", "PNAME") or (tok.kind == "NAME" and tok.text == "a")):
        raise ts.error("expected predicate", tok)
    if tok.kind in ("BNODE", "ANON"):
        raise ts.error("blank nodes are not allowed in rules", tok)
    return token_to_term(tok, ts, pmap)


def _parse_pattern(ts: TokenStream, pmap) -> TriplePattern:
    return TriplePattern(_parse_slot(ts, pmap), _parse_slot(ts, pmap, predicate=True), _parse_slot(ts, pmap))


def _parse_builtin(ts: TokenStream, pmap) -> List[object]:
    out: List[object] = []
    while True:
        tok = ts.peek()
        if tok.kind == "NAME" and tok.text in TermTest._KINDS:
            ts.next()
            ts.expect("PUNCT", "(")
            var = ts.expect("VAR", what="variable")
            ts.expect("PUNCT", ")")
            out.append(TermTest(tok.text, Var(var.text[1:])))
        else:
            left = _parse_operand(ts, pmap)
            op = ts.next()
            if op.kind != "OP" or op.text not in COMPARISON_OPS:
                raise ts.error("expected comparison operator", op)
            out.append(Comparison(op.text, left, _parse_operand(ts, pmap)))
        if not ts.accept("OP", "&&"):
            return out


def _parse_operand(ts: TokenStream, pmap):
    tok = ts.next()
    if tok.kind == "VAR":
        return Var(tok.text[1:])
    if tok.kind in ("INTEGER", "DECIMAL", "DOUBLE", "STRING", "IRIREF", "PNAME"):
        return token_to_term(tok, ts, pmap)
    raise ts.error("expected variable or literal", tok)


# -- knowledge base -------------------------------------------------------------

def _join(g: Graph, patterns: Sequence[TriplePattern], binding: Binding) -> Iterator[Binding]:
    if not patterns:
        yield binding
        return
    bound = set(binding)
    best = max(range(len(patterns)), key=lambda i: (patterns[i].bound_count(bound), -i))
    rest = patterns[:best] + patterns[best + 1:]
    for ext in match_pattern(g, patterns[best], binding):
        yield from _join(g, rest, ext)


def _valid(t: Triple) -> bool:
    try:
        check_triple(t)
    except TermError:
        return False
    return True


class KnowledgeBase:
    """Asserted and inferred triples plus the justifications linking them."""

    def __init__(self, rules: Optional[Iterable[Rule]] = None, asserted: Iterable[Triple] = ()):
        self.asserted = Graph()
        self.inferred = Graph()
        self.graph = Graph()  # asserted ∪ inferred, used for joins and queries
        self.justifications: Dict[Triple, Set[Justification]] = {}
        self._dependents: Dict[Triple, Set[Justification]] = {}
        self._pending: Dict[Triple, None] = {}
        self.rules: List[Rule] = []
        for rule in builtin_rules() if rules is None else rules:
            self.add_rule(rule)
        for t in asserted:
            self.assert_triple(t)

    def __contains__(self, t) -> bool:
        return t in self.graph

    def __len__(self) -> int:
        return len(self.graph)

    @property
    def prefixes(self) -> Dict[str, str]:
        return self.graph.prefixes

    def add_rule(self, rule: Rule) -> None:
        if not isinstance(rule, Rule):
            raise RuleError(f"not a rule: {rule!r}")
        if any(r.name == rule.name for r in self.rules):
            raise RuleError(f"duplicate rule name {rule.name!r}")
        self.rules.append(rule)
        # existing facts must be reconsidered against the new rule
        for t in self.graph:
            self._pending[t] = None

    def assert_triple(self, t: Triple) -> bool:
        t = Triple(*t)
        added = self.asserted.insert(t)
        if added:
            self.graph.insert(t)
            self._pending[t] = None
        return added

    def assert_all(self, triples: Iterable[Triple]) -> List[Triple]:
        return [t for t in triples if self.assert_triple(t)]

    def is_asserted(self, t: Triple) -> bool:
        return t in self.asserted

    def is_inferred(self, t: Triple) -> bool:
        return t in self.inferred

    # forward chaining

    def forward_chain(self) -> Set[Triple]:
        """Semi-naive evaluation to fixpoint; returns triples new to the KB."""
        # a pending fact may have been retracted since it was queued
        delta = [t for t in self._pending if t in self.graph]
        self._pending.clear()
        added: Set[Triple] = set()
        while delta:
            delta_graph = Graph(delta)
            fresh: Dict[Triple, None] = {}
            for rule in self.rules:
                for i, pat in enumerate(rule.body):
                    rest = rule.body[:i] + rule.body[i + 1:]
                    for seed in match_pattern(delta_graph, pat, {}):
                        for binding in _join(self.graph, rest, seed):
                            self._fire(rule, binding, fresh)
            for t in fresh:
                self.graph.insert(t)
            added.update(fresh)
            delta = list(fresh)
        return added

    def _fire(self, rule: Rule, binding: Binding, fresh: Dict[Triple, None]) -> None:
        if not all(b.holds(binding) for b in rule.builtins):
            return
        premises = tuple(p.instantiate(binding) for p in rule.body)
        for tmpl in rule.head:
            conclusion = tmpl.instantiate(binding)
            if not _valid(conclusion):
                continue
            just = Justification(conclusion, rule.name, premises)
            bucket = self.justifications.setdefault(conclusion, set())
            if just in bucket:
                continue
            bucket.add(just)
            for p in set(premises):
                self._dependents.setdefault(p, set()).add(just)
            if conclusion not in self.inferred:
                self.inferred.insert(conclusion)
                if conclusion not in self.graph:
                    fresh[conclusion] = None

    # truth maintenance

    def retract(self, t: Triple) -> Set[Triple]:
        """Remove an asserted triple and every inference left without well-founded support.

        The returned set always contains ``t`` itself, followed by every
        inferred triple that dropped out of the KB.
        """
        t = Triple(*t)
        if t not in self.asserted:
            if t in self.inferred:
                raise TMSError(f"cannot retract inferred triple {format_triple(t)}: "
                               f"it is not asserted; retract one of its premises instead")
            raise TMSError(f"cannot retract {format_triple(t)}: triple is not asserted")
        self.asserted.remove(t)
        self._pending.pop(t, None)

        candidates: Set[Triple] = set()
        if t in self.inferred:
            candidates.add(t)
        stack = [t]
        while stack:
            x = stack.pop()
            for j in self._dependents.get(x, ()):
                c = j.conclusion
                if c not in candidates and c in self.inferred:
                    candidates.add(c)
                    stack.append(c)

        supported: Set[Triple] = set()

        def ok(p: Triple) -> bool:
            return p in self.asserted or p in supported or (p in self.inferred and p not in candidates)

        changed = True
        while changed:
            changed = False
            for c in candidates:
                if c in supported:
                    continue
                if c in self.asserted or any(all(ok(p) for p in j.premises)
                                             for j in self.justifications.get(c, ())):
                    supported.add(c)
                    changed = True

        lost = candidates - supported
        for x in lost:
            self.inferred.remove(x)
        gone = {x for x in lost if x not in self.asserted}
        if t not in self.inferred:
            gone.add(t)
        for x in gone:
            self.graph.remove(x)
        for x in gone:
            for j in list(self._dependents.get(x, ())):
                self._drop(j)
            self._dependents.pop(x, None)
        for x in lost:
            for j in list(self.justifications.get(x, ())):
                self._drop(j)
            self.justifications.pop(x, None)
        return {t} | gone

    def _drop(self, j: Justification) -> None:
        bucket = self.justifications.get(j.conclusion)
        if bucket is not None:
            bucket.discard(j)
            if not bucket:
                del self.justifications[j.conclusion]
        for p in set(j.premises):
            deps = self._dependents.get(p)
            if deps is not None:
                deps.discard(j)
                if not deps:
                    del self._dependents[p]

    # explanations

    def explain(self, t: Triple) -> ProofNode:
        """Minimal-depth proof tree; ties go to rule name, then premise order."""
        t = Triple(*t)
        if t not in self.graph:
            raise TMSError(f"{format_triple(t)} is not in the knowledge base")
        # restrict to the support subgraph below t
        region: Set[Triple] = set()
        stack = [t]
        while stack:
            x = stack.pop()
            if x in region:
                continue
            region.add(x)
            if x in self.asserted:
                continue
            for j in self.justifications.get(x, ()):
                stack.extend(j.premises)
        depth: Dict[Triple, int] = {x: 0 for x in region if x in self.asserted}
        best: Dict[Triple, Justification] = {}
        changed = True
        while changed:
            changed = False
            for x in region:
                if x in self.asserted:
                    continue
                for j in self.justifications.get(x, ()):
                    if all(p in depth for p in j.premises):
                        d = 1 + max(depth[p] for p in j.premises)
                        key = (d, j.rule, [tuple(term_key(term) for term in p) for p in j.premises])
                        cur = best.get(x)
                        if cur is None or key < (depth[x], cur.rule,
                                                 [tuple(term_key(term) for term in p) for p in cur.premises]):
                            depth[x] = d
                            best[x] = j
                            changed = True

        def build(x: Triple) -> ProofNode:
            if x in self.asserted:
                return ProofNode(x)
            j = best[x]
            return ProofNode(x, j.rule, tuple(build(p) for p in j.premises))

        return build(t)

    # inspection helpers

    def recompute(self) -> "KnowledgeBase":
        """A fresh KB with the same rules and assertions, chained from scratch."""
        kb = KnowledgeBase(rules=self.rules, asserted=self.asserted)
        kb.forward_chain()
        return kb

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


def replay(rule: Rule, premises: Sequence[Triple], conclusion: Triple) -> bool:
    """True if ``rule`` applied to exactly ``premises`` (body order) yields ``conclusion``."""
    if len(premises) != len(rule.body):
        return False
    binding: Binding = {}
    for pat, fact in zip(rule.body, premises):
        for slot, term in zip(pat, fact):
            if isinstance(slot, Var):
                if binding.setdefault(slot.name, term) != term:
                    return False
            elif slot != term:
                return False
    if not all(b.holds(binding) for b in rule.builtins):
        return False
    return any(h.instantiate(binding) == conclusion for h in rule.head)

"""SELECT-query subset: parser and nested-loop BGP evaluator.

Grammar accepted::

    PREFIX p: <iri> ...
    SELECT ( ?v | ( ?v AS ?alias ) )+ | *
    WHERE? { triples with ; , and 'a' ... FILTER( cmp && cmp ... ) ... }
    ORDER BY ?v ...

Comparisons are ``operand op operand`` with op in ``>= <= > < = !=``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .rdf_core import DEFAULT_PREFIXES, Graph, Literal, RDFSyntaxError, Term
from .rdf_core.lexer import TokenStream
from .rdf_core.patterns import Binding, Comparison, TriplePattern, Var, match_pattern
from .rdf_core.terms import COMPARISON_OPS, lexical_form, numeric_value, term_key
from .rdf_core.turtle import token_to_term

_UNSUPPORTED = {
    "optional", "union", "limit", "offset", "distinct", "reduced", "group",
    "having", "minus", "graph", "service", "bind", "values", "construct",
    "ask", "describe", "insert", "delete", "from", "count", "sum", "min",
    "max", "avg", "desc", "not", "exists", "regex",
}


class QueryError(RDFSyntaxError):
    """Invalid query structure (unbound projection, alias clash, ...)."""


@dataclass(frozen=True)
class ProjectionItem:
    var: Var
    alias: Optional[Var] = None

    @property
    def name(self) -> str:
        return (self.alias or self.var).name


@dataclass(frozen=True)
class FilterExpr:
    conjuncts: Tuple[Comparison, ...]

    def variables(self) -> Tuple[str, ...]:
        return tuple(v for c in self.conjuncts for v in c.variables())

    def holds(self, binding: Binding) -> bool:
        return all(c.holds(binding) for c in self.conjuncts)


@dataclass
class SelectQuery:
    prefixes: Dict[str, str]
    projection: List[ProjectionItem]
    patterns: List[TriplePattern]
    filters: List[FilterExpr] = field(default_factory=list)
    order_by: List[Var] = field(default_factory=list)

    def pattern_variables(self) -> List[str]:
        seen: Dict[str, None] = {}
        for pat in self.patterns:
            for name in pat.variables():
                seen[name] = None
        return list(seen)

    @property
    def output_names(self) -> List[str]:
        return [item.name for item in self.projection]


def parse_query(text: str, prefixes: Optional[Mapping[str, str]] = None) -> SelectQuery:
    """Parse a SELECT query; ``prefixes`` seed the namespace map (defaults to the IoBT set)."""
    ts = TokenStream(text)
    pmap = dict(DEFAULT_PREFIXES if prefixes is None else prefixes)
    declared: Dict[str, str] = {}

    def check_supported():
        tok = ts.peek()
        if tok.kind == "NAME" and tok.text.lower() in _UNSUPPORTED:
            raise ts.error(f"unsupported SPARQL feature: {tok.text.upper()}", tok)

    while ts.at("NAME", "PREFIX", nocase=True):
        ts.next()
        name = ts.expect("PNAME", what="prefix name")
        prefix, _, local = name.text.partition(":")
        if local:
            raise ts.error("prefix name must end with ':'", name)
        iri = ts.expect("IRIREF", what="namespace IRI")
        pmap[prefix] = declared[prefix] = iri.value

    check_supported()
    ts.expect("NAME", "SELECT", nocase=True, what="SELECT")
    check_supported()
    projection: List[ProjectionItem] = []
    star = False
    if ts.accept("PUNCT", "*"):
        star = True
    else:
        while True:
            if ts.at("VAR"):
                projection.append(ProjectionItem(Var(ts.next().text[1:])))
            elif ts.at("PUNCT", "("):
                ts.next()
                check_supported()
                src = ts.expect("VAR", what="variable (only plain variables may be aliased)")
                ts.expect("NAME", "AS", nocase=True, what="AS")
                alias = ts.expect("VAR", what="alias variable")
                ts.expect("PUNCT", ")")
                projection.append(ProjectionItem(Var(src.text[1:]), Var(alias.text[1:])))
            else:
                break
        if not projection:
            raise ts.error("expected projection variables")

    check_supported()
    ts.accept("NAME", "WHERE", nocase=True)
    ts.expect("PUNCT", "{")
    patterns: List[TriplePattern] = []
    filters: List[FilterExpr] = []
    while not ts.accept("PUNCT", "}"):
        check_supported()
        if ts.at("EOF"):
            raise ts.error("unterminated group pattern")
        if ts.at("NAME", "FILTER", nocase=True):
            ts.next()
            filters.append(FilterExpr(tuple(_parse_filter(ts, pmap))))
            ts.accept("PUNCT", ".")
            continue
        if ts.at("PUNCT", "{"):
            raise ts.error("nested group patterns are not supported")
        subject = _slot(ts, pmap)
        while True:
            predicate = _slot(ts, pmap, predicate=True)
            while True:
                patterns.append(TriplePattern(subject, predicate, _slot(ts, pmap)))
                if not ts.accept("PUNCT", ","):
                    break
            if ts.accept("PUNCT", ";"):
                if ts.at("PUNCT", ".") or ts.at("PUNCT", "}"):
                    break
                continue
            break
        if not ts.accept("PUNCT", "."):
            if not ts.at("PUNCT", "}") and not ts.at("NAME", "FILTER", nocase=True):
                raise ts.error("expected '.', ';', ',' or '}' after triple pattern")

    order_by: List[Var] = []
    check_supported()
    if ts.accept("NAME", "ORDER", nocase=True):
        ts.expect("NAME", "BY", nocase=True, what="BY")
        while True:
            check_supported()
            if ts.at("VAR"):
                order_by.append(Var(ts.next().text[1:]))
            elif ts.at("NAME", "ASC", nocase=True):
                ts.next()
                ts.expect("PUNCT", "(")
                order_by.append(Var(ts.expect("VAR").text[1:]))
                ts.expect("PUNCT", ")")
            else:
                break
        if not order_by:
            raise ts.error("expected ORDER BY variable")
    check_supported()
    if not ts.at("EOF"):
        raise ts.error("unexpected trailing input")

    query = SelectQuery(declared, projection, patterns, filters, order_by)
    if star:
        query.projection = [ProjectionItem(Var(n)) for n in query.pattern_variables()]
    _check_query(query)
    return query


def _slot(ts: TokenStream, pmap, predicate: bool = False):
    tok = ts.next()
    if tok.kind == "VAR":
        return Var(tok.text[1:])
    if predicate and not (tok.kind in ("IRIREF", "PNAME") or (tok.kind == "NAME" and tok.text == "a")):
        raise ts.error("expected predicate (IRI, prefixed name, 'a' or variable)", tok)
    if tok.kind in ("BNODE", "ANON"):
        raise ts.error("blank nodes are not supported in query patterns", tok)
    if tok.kind == "NAME" and tok.text.lower() in _UNSUPPORTED:
        raise ts.error(f"unsupported SPARQL feature: {tok.text.upper()}", tok)
    return token_to_term(tok, ts, pmap)


def _parse_filter(ts: TokenStream, pmap) -> List[Comparison]:
    ts.expect("PUNCT", "(", what="'(' after FILTER")
    conjuncts = _parse_conjunction(ts, pmap)
    ts.expect("PUNCT", ")", what="')' closing FILTER")
    return conjuncts


def _parse_conjunction(ts: TokenStream, pmap) -> List[Comparison]:
    out = []
    while True:
        if ts.accept("PUNCT", "("):
            out.extend(_parse_conjunction(ts, pmap))
            ts.expect("PUNCT", ")")
        else:
            left = _operand(ts, pmap)
            op = ts.next()
            if op.kind != "OP" or op.text not in COMPARISON_OPS:
                raise ts.error("expected comparison operator", op)
            right = _operand(ts, pmap)
            out.append(Comparison(op.text, left, right))
        if ts.at("OP", "||"):
            raise ts.error("unsupported SPARQL feature: '||' (only && conjunctions)")
        if not ts.accept("OP", "&&"):
            return out


def _operand(ts: TokenStream, pmap):
    tok = ts.next()
    if tok.kind == "VAR":
        return Var(tok.text[1:])
    if tok.kind in ("INTEGER", "DECIMAL", "DOUBLE", "STRING", "IRIREF", "PNAME") or (
            tok.kind == "NAME" and tok.text in ("true", "false")):
        return token_to_term(tok, ts, pmap)
    if tok.kind == "NAME" and tok.text.lower() in _UNSUPPORTED:
        raise ts.error(f"unsupported SPARQL feature: {tok.text.upper()}", tok)
    raise ts.error("expected variable or literal in comparison", tok)


def _check_query(q: SelectQuery) -> None:
    pattern_vars = set(q.pattern_variables())
    for item in q.projection:
        if item.var.name not in pattern_vars:
            raise QueryError(f"projected variable ?{item.var.name} is not bound by any triple pattern")
        if item.alias is not None and item.alias.name in pattern_vars:
            raise QueryError(f"alias ?{item.alias.name} collides with a pattern variable")
    names = q.output_names
    if len(set(names)) != len(names):
        raise QueryError("duplicate projection names")
    for var in q.order_by:
        if var.name not in pattern_vars:
            raise QueryError(f"ORDER BY variable ?{var.name} is not bound by any triple pattern")


def plan(patterns: Sequence[TriplePattern]) -> List[int]:
    """Greedy join order: most bound positions first, original order on ties."""
    remaining = list(range(len(patterns)))
    bound: set = set()
    order = []
    while remaining:
        best = max(remaining, key=lambda i: (patterns[i].bound_count(bound), -i))
        order.append(best)
        remaining.remove(best)
        bound.update(patterns[best].variables())
    return order


def solutions(q: SelectQuery, g: Graph) -> List[Binding]:
    """Full (unprojected) solution mappings of the BGP with filters, unordered."""
    order = plan(q.patterns)
    conjuncts = [c for f in q.filters for c in f.conjuncts]
    # attach each comparison to the first step after which all its vars are bound
    bound: set = set()
    checks: List[List[Comparison]] = []
    pending = list(conjuncts)
    for idx in order:
        bound.update(q.patterns[idx].variables())
        ready = [c for c in pending if set(c.variables()) <= bound]
        pending = [c for c in pending if c not in ready]
        checks.append(ready)
    out: List[Binding] = []
    if pending:
        # comparisons over never-bound variables are false for every row
        return out

    def step(depth: int, binding: Binding):
        if depth == len(order):
            out.append(binding)
            return
        for ext in match_pattern(g, q.patterns[order[depth]], binding):
            if all(c.holds(ext) for c in checks[depth]):
                step(depth + 1, ext)

    if not order:
        if all(c.holds({}) for c in conjuncts):
            out.append({})
        return out
    step(0, {})
    return out


def order_solutions(rows: List[Binding], order_by: Sequence[Var]) -> List[Binding]:
    if not order_by or not rows:
        return list(rows)
    keys_numeric = {}
    for var in order_by:
        keys_numeric[var.name] = all(numeric_value(r.get(var.name)) is not None for r in rows)
    order_names = {v.name for v in order_by}
    rest = sorted({n for r in rows for n in r} - order_names)

    def key(row):
        parts = []
        for var in order_by:
            term = row.get(var.name)
            if keys_numeric[var.name]:
                parts.append(numeric_value(term))
            else:
                parts.append(lexical_form(term) if term is not None else "")
        for name in rest:
            term = row.get(name)
            parts.append(term_key(term) if term is not None else ())
        return parts

    return sorted(rows, key=key)


def project(q: SelectQuery, rows: List[Binding]) -> List[Dict[str, Term]]:
    return [{item.name: row[item.var.name] for item in q.projection} for row in rows]


def evaluate(q: SelectQuery, g: Graph, *, full: bool = False) -> List[Dict[str, Term]]:
    """Evaluate ``q`` over ``g``; rows keyed by output name (no ``?``).

    With ``full=True`` the rows are the ordered, unprojected solutions.
    """
    rows = order_solutions(solutions(q, g), q.order_by)
    return rows if full else project(q, rows)


def query(g: Graph, text: str) -> List[Dict[str, Term]]:
    return evaluate(parse_query(text, g.prefixes), g)


def format_value(term: Term) -> str:
    if isinstance(term, Literal):
        return term.lexical
    return lexical_form(term)

"""Turtle subset reader/writer.

Supported: ``@prefix`` (and SPARQL-style ``PREFIX``), ``<iri>``, prefixed
names, ``a``, ``;`` and ``,`` lists, quoted strings with ``^^`` or ``@lang``,
bare integers/decimals/doubles, ``true``/``false``, ``[]`` and ``_:x``.
Collections, non-empty ``[ ... ]`` and long strings are rejected.
"""

from __future__ import annotations

import re
from typing import Dict, Mapping, Optional

from .graph import Graph
from .lexer import PN_LOCAL, RDFSyntaxError, Token, TokenStream, UnknownPrefixError
from .terms import (
    RDF, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE, XSD_INTEGER, XSD_STRING,
    BNode, IRI, Literal, Term, TermError, Triple, term_key,
)

RDF_TYPE = IRI(RDF + "type")


def token_to_term(tok: Token, stream: TokenStream, prefixes: Mapping[str, str],
                  bnodes: Optional[Dict[str, BNode]] = None, graph: Optional[Graph] = None) -> Term:
    """Convert the token just consumed (plus any ^^/@lang suffix) into a term."""
    try:
        if tok.kind == "IRIREF":
            return IRI(tok.value)
        if tok.kind == "PNAME":
            prefix, _, local = tok.text.partition(":")
            if prefix not in prefixes:
                raise UnknownPrefixError(prefix, tok.line, tok.column)
            return IRI(prefixes[prefix] + local)
        if tok.kind == "NAME" and tok.text == "a":
            return RDF_TYPE
        if tok.kind == "NAME" and tok.text in ("true", "false"):
            return Literal(tok.text, XSD_BOOLEAN)
        if tok.kind == "INTEGER":
            return Literal(tok.text, XSD_INTEGER)
        if tok.kind == "DECIMAL":
            return Literal(tok.text, XSD_DECIMAL)
        if tok.kind == "DOUBLE":
            return Literal(tok.text, XSD_DOUBLE)
        if tok.kind == "STRING":
            if stream.accept("DTYPE"):
                dt_tok = stream.next()
                if dt_tok.kind not in ("IRIREF", "PNAME"):
                    raise stream.error("expected datatype IRI", dt_tok)
                dt = token_to_term(dt_tok, stream, prefixes)
                return Literal(tok.value, dt.value)
            lang = stream.accept("LANGTAG")
            if lang:
                return Literal(tok.value, XSD_STRING, lang.text[1:])
            return Literal(tok.value)
        if tok.kind == "BNODE" and bnodes is not None:
            label = tok.text[2:]
            if label not in bnodes:
                bnodes[label] = graph.fresh_bnode() if graph is not None else BNode(label)
            return bnodes[label]
        if tok.kind == "ANON" and graph is not None:
            return graph.fresh_bnode()
    except TermError as exc:
        raise RDFSyntaxError(str(exc), tok.line, tok.column, tok.text) from None
    if tok.kind == "PUNCT" and tok.text in "([":
        raise stream.error("collections and blank-node property lists are not supported", tok)
    raise stream.error("unexpected token", tok)


def parse_turtle(text: str, base_prefixes: Optional[Mapping[str, str]] = None,
                 graph: Optional[Graph] = None) -> Graph:
    """Parse Turtle-subset text into ``graph`` (a new Graph by default).

    Blank-node labels are renamed to fresh store-scoped labels.
    """
    g = graph if graph is not None else Graph(prefixes=dict(base_prefixes or {}))
    prefixes = g.prefixes
    bnodes: Dict[str, BNode] = {}
    ts = TokenStream(text)

    while not ts.at("EOF"):
        if ts.accept("DIRECTIVE", "@prefix"):
            _prefix_decl(ts, prefixes)
            ts.expect("PUNCT", ".")
            continue
        if ts.at("NAME", "PREFIX", nocase=True):
            ts.next()
            _prefix_decl(ts, prefixes)
            continue
        if ts.at("DIRECTIVE", "@base") or ts.at("NAME", "BASE", nocase=True):
            raise ts.error("@base is not supported")

        subj_tok = ts.next()
        if subj_tok.kind in ("STRING", "INTEGER", "DECIMAL", "DOUBLE"):
            raise ts.error("literal in subject position", subj_tok)
        subject = token_to_term(subj_tok, ts, prefixes, bnodes, g)
        if isinstance(subject, Literal) or (subj_tok.kind == "NAME" and subj_tok.text == "a"):
            raise ts.error("invalid subject", subj_tok)
        while True:
            p_tok = ts.next()
            if p_tok.kind not in ("IRIREF", "PNAME") and not (p_tok.kind == "NAME" and p_tok.text == "a"):
                raise ts.error("expected predicate", p_tok)
            predicate = token_to_term(p_tok, ts, prefixes)
            while True:
                o_tok = ts.next()
                obj = token_to_term(o_tok, ts, prefixes, bnodes, g)
                if o_tok.kind == "NAME" and o_tok.text == "a":
                    raise ts.error("'a' is only valid as a predicate", o_tok)
                g.insert(Triple(subject, predicate, obj))
                if not ts.accept("PUNCT", ","):
                    break
            if ts.accept("PUNCT", ";"):
                while ts.accept("PUNCT", ";"):
                    pass
                if ts.at("PUNCT", "."):
                    break
                continue
            break
        ts.expect("PUNCT", ".", what="'.' ending the statement")
    return g


def _prefix_decl(ts: TokenStream, prefixes: Dict[str, str]) -> None:
    name = ts.expect("PNAME", what="prefix name")
    prefix, _, local = name.text.partition(":")
    if local:
        raise ts.error("prefix name must end with ':'", name)
    iri = ts.expect("IRIREF", what="namespace IRI")
    prefixes[prefix] = iri.value


_LOCAL_RE = re.compile(PN_LOCAL + r"\Z")
_IRI_UNSAFE = re.compile(r"[<>\"{}|^`\\\x00-\x20]")
_BARE_NUMBER = {
    XSD_INTEGER: re.compile(r"[+-]?\d+\Z"),
    XSD_DECIMAL: re.compile(r"[+-]?\d*\.\d+\Z"),
}


def _escape_iri(value: str) -> str:
    return _IRI_UNSAFE.sub(lambda m: f"\\u{ord(m.group(0)):04X}", value)


def _escape_string(value: str) -> str:
    return (value.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n").replace("\r", "\\r"))


class _Writer:
    def __init__(self, prefixes: Mapping[str, str]):
        # longest namespace first so the most specific prefix wins
        self.namespaces = sorted(prefixes.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    def iri(self, value: str) -> str:
        for prefix, ns in self.namespaces:
            if value.startswith(ns) and _LOCAL_RE.match(value[len(ns):]):
                return f"{prefix}:{value[len(ns):]}"
        return f"<{_escape_iri(value)}>"

    def term(self, term: Term) -> str:
        if isinstance(term, IRI):
            return self.iri(term.value)
        if isinstance(term, BNode):
            return f"_:{term.label}"
        pattern = _BARE_NUMBER.get(term.datatype)
        if pattern and pattern.match(term.lexical):
            return term.lexical
        quoted = f'"{_escape_string(term.lexical)}"'
        if term.language:
            return f"{quoted}@{term.language}"
        if term.datatype == XSD_STRING:
            return quoted
        return f"{quoted}^^{self.iri(term.datatype)}"


def serialize_turtle(g: Graph) -> str:
    """Deterministic Turtle text: prefixes, then sorted subject blocks."""
    w = _Writer(g.prefixes)
    lines = [f"@prefix {p}: <{_escape_iri(ns)}> ." for p, ns in sorted(g.prefixes.items())]
    subjects = sorted({t.subject for t in g}, key=term_key)
    for s in subjects:
        lines.append("")
        by_pred: Dict[Term, list] = {}
        for t in g.match(s, None, None):
            by_pred.setdefault(t.predicate, []).append(t.object)
        pred_chunks = []
        for p in sorted(by_pred, key=term_key):
            objs = ", ".join(w.term(o) for o in sorted(by_pred[p], key=term_key))
            pred_chunks.append(f"{w.term(p)} {objs}")
        lines.append(f"{w.term(s)} " + " ;\n    ".join(pred_chunks) + " .")
    return "\n".join(lines) + "\n"

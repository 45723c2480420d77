"""In-memory triple store with SPO / POS / OSP indexes."""

from __future__ import annotations

from typing import Dict, Iterable, Iterator, List, Optional

from .terms import OWL, RDF, RDFS, XSD, BNode, IRI, Term, Triple, check_triple

DEFAULT_PREFIXES = {
    "bf": "http://purl.org/ArtIAMAS/battlefield#",
    "sosa": "http://www.w3.org/ns/sosa/phenomenonTime#",
    "stix": "http://purl.org/cyber/stix/mitigates#",
    "rdf": RDF,
    "rdfs": RDFS,
    "xsd": XSD,
    "owl": OWL,
}

# Three-level nested dicts used as insertion-ordered sets at the leaves.
_Index = Dict[Term, Dict[Term, Dict[Term, None]]]


def _idx_add(index: _Index, a, b, c) -> None:
    index.setdefault(a, {}).setdefault(b, {})[c] = None


def _idx_remove(index: _Index, a, b, c) -> None:
    level = index[a]
    leaf = level[b]
    del leaf[c]
    if not leaf:
        del level[b]
        if not level:
            del index[a]


class Graph:
    """A set of triples, indexed three ways.

    Mutation is single-writer; callers serialize writes.
    """

    def __init__(self, triples: Iterable[Triple] = (), prefixes: Optional[Dict[str, str]] = None):
        self.prefixes: Dict[str, str] = dict(DEFAULT_PREFIXES)
        if prefixes:
            self.prefixes.update(prefixes)
        self._spo: _Index = {}
        self._pos: _Index = {}
        self._osp: _Index = {}
        self._size = 0
        self._bnode_counter = 0
        for t in triples:
            self.insert(t)

    def __len__(self) -> int:
        return self._size

    @property
    def size(self) -> int:
        return self._size

    def __contains__(self, t) -> bool:
        s, p, o = t
        return o in self._spo.get(s, {}).get(p, ())

    def __iter__(self) -> Iterator[Triple]:
        for s, by_p in self._spo.items():
            for p, objs in by_p.items():
                for o in objs:
                    yield Triple(s, p, o)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._size == other._size and all(t in other for t in self)

    def __repr__(self):
        return f"<Graph size={self._size}>"

    def copy(self) -> "Graph":
        g = Graph(prefixes=self.prefixes)
        for t in self:
            g.insert(t)
        g._bnode_counter = self._bnode_counter
        return g

    def fresh_bnode(self) -> BNode:
        node = BNode(f"b{self._bnode_counter}")
        self._bnode_counter += 1
        return node

    def insert(self, t: Triple) -> bool:
        t = Triple(*t)
        check_triple(t)
        if t in self:
            return False
        s, p, o = t
        _idx_add(self._spo, s, p, o)
        _idx_add(self._pos, p, o, s)
        _idx_add(self._osp, o, s, p)
        self._size += 1
        return True

    add = insert

    def remove(self, t: Triple) -> bool:
        if t not in self:
            return False
        s, p, o = t
        _idx_remove(self._spo, s, p, o)
        _idx_remove(self._pos, p, o, s)
        _idx_remove(self._osp, o, s, p)
        self._size -= 1
        return True

    def match(self, s: Optional[Term] = None, p: Optional[Term] = None,
              o: Optional[Term] = None) -> List[Triple]:
        """All triples agreeing with every bound (non-None) position."""
        return list(self._match(s, p, o))

    def _match(self, s, p, o) -> Iterator[Triple]:
        if s is not None:
            by_p = self._spo.get(s)
            if not by_p:
                return
            if p is not None:
                objs = by_p.get(p, ())
                if o is not None:
                    if o in objs:
                        yield Triple(s, p, o)
                    return
                for obj in objs:
                    yield Triple(s, p, obj)
                return
            if o is not None:
                for pred in self._osp.get(o, {}).get(s, ()):
                    yield Triple(s, pred, o)
                return
            for pred, objs in by_p.items():
                for obj in objs:
                    yield Triple(s, pred, obj)
            return
        if p is not None:
            by_o = self._pos.get(p)
            if not by_o:
                return
            if o is not None:
                for subj in by_o.get(o, ()):
                    yield Triple(subj, p, o)
                return
            for obj, subjs in by_o.items():
                for subj in subjs:
                    yield Triple(subj, p, obj)
            return
        if o is not None:
            for subj, preds in self._osp.get(o, {}).items():
                for pred in preds:
                    yield Triple(subj, pred, o)
            return
        yield from self

    def index_view(self, order: str) -> List[Triple]:
        """Full content read back through one index ("spo", "pos" or "osp")."""
        index = {"spo": self._spo, "pos": self._pos, "osp": self._osp}[order]
        out = []
        for a, level in index.items():
            for b, leaf in level.items():
                for c in leaf:
                    named = dict(zip(order, (a, b, c)))
                    out.append(Triple(named["s"], named["p"], named["o"]))
        return out

    def objects(self, s: Term, p: Term) -> List[Term]:
        return list(self._spo.get(s, {}).get(p, ()))

    def subjects(self, p: Term, o: Term) -> List[Term]:
        return list(self._pos.get(p, {}).get(o, ()))

    def value(self, s: Term, p: Term) -> Optional[Term]:
        for o in self._spo.get(s, {}).get(p, ()):
            return o
        return None

    def terms(self) -> List[Term]:
        seen: Dict[Term, None] = {}
        for t in self:
            for term in t:
                seen[term] = None
        return list(seen)

    def expand(self, pname: str) -> IRI:
        prefix, _, local = pname.partition(":")
        if prefix not in self.prefixes:
            raise KeyError(f"unknown prefix {prefix!r}")
        return IRI(self.prefixes[prefix] + local)


def isomorphic(g1: Iterable[Triple], g2: Iterable[Triple]) -> bool:
    """Graph equality modulo a bijection between blank nodes."""
    a, b = set(g1), set(g2)
    if len(a) != len(b):
        return False
    a_bn = sorted({x for t in a for x in t if isinstance(x, BNode)}, key=lambda n: n.label)
    b_bn = sorted({x for t in b for x in t if isinstance(x, BNode)}, key=lambda n: n.label)
    if len(a_bn) != len(b_bn):
        return False
    if not a_bn:
        return a == b

    def signature(graph, node):
        sig = []
        for t in graph:
            if node in t:
                sig.append(tuple("SELF" if x == node else ("BN" if isinstance(x, BNode) else x) for x in t))
        return sorted(sig, key=repr)

    a_sig = {n: signature(a, n) for n in a_bn}
    b_sig = {n: signature(b, n) for n in b_bn}
    candidates = {n: [m for m in b_bn if b_sig[m] == a_sig[n]] for n in a_bn}
    if any(not c for c in candidates.values()):
        return False
    order = sorted(a_bn, key=lambda n: len(candidates[n]))

    def relabel(mapping):
        return {Triple(*(mapping.get(x, x) for x in t)) for t in a}

    def search(i, mapping, used):
        if i == len(order):
            return relabel(mapping) == b
        node = order[i]
        for cand in candidates[node]:
            if cand in used:
                continue
            mapping[node] = cand
            used.add(cand)
            if search(i + 1, mapping, used):
                return True
            used.discard(cand)
            del mapping[node]
        return False

    return search(0, {}, set())


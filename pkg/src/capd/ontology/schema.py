"""Built-in IoBT schema graph and RDFS-style helpers over it."""

from __future__ import annotations

from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Set

from ..rdf_core import (
    BF, OWL, RDF_TYPE, RDFS, STIX, SOSA, XSD_DECIMAL, XSD_STRING, Graph, IRI, Term, Triple,
)

SUBCLASS_OF = IRI(RDFS + "subClassOf")
DOMAIN = IRI(RDFS + "domain")
RANGE = IRI(RDFS + "range")
OWL_CLASS = IRI(OWL + "Class")
OBJECT_PROPERTY = IRI(OWL + "ObjectProperty")
DATATYPE_PROPERTY = IRI(OWL + "DatatypeProperty")
EQUIVALENT_PROPERTY = IRI(OWL + "equivalentProperty")
SUBPROPERTY_OF = IRI(RDFS + "subPropertyOf")

CLASSES = [
    "Asset", "MovableAsset", "ImmovableAsset", "Attack", "Kinetic", "CyberAttack",
    "BandwidthAttack", "Observation", "BandwidthObservation", "TemporalEntity",
    "Result", "CourseOfAction", "MitigationPlan", "ProtectionProgram",
]

SUBCLASS_EDGES = [
    ("MovableAsset", "Asset"),
    ("ImmovableAsset", "Asset"),
    ("Kinetic", "Attack"),
    ("CyberAttack", "Attack"),
    ("BandwidthAttack", "CyberAttack"),
    ("BandwidthObservation", "Observation"),
]

# (property IRI, domain class, range class) -- spellings follow the UC1 query
OBJECT_PROPERTIES = [
    (BF + "hasBandwidth", "Observation", "BandwidthObservation"),
    (SOSA + "phenomenonTime", "Observation", "TemporalEntity"),
    (BF + "hasResult", "Observation", "Result"),
    (STIX + "mitigates", "CourseOfAction", "Attack"),
    (BF + "listedPlan", "CourseOfAction", "MitigationPlan"),
    (BF + "hasProtectionProgram", "MitigationPlan", "ProtectionProgram"),
    (STIX + "hasProtectionProgram", "MitigationPlan", "ProtectionProgram"),
]

DATA_PROPERTIES = [
    (BF + "lowRange", "BandwidthAttack", XSD_DECIMAL),
    (BF + "highRange", "BandwidthAttack", XSD_DECIMAL),
    (BF + "value", "Result", XSD_DECIMAL),
    (BF + "code", "ProtectionProgram", XSD_STRING),
]


def _bf(local: str) -> IRI:
    return IRI(BF + local)


@lru_cache(maxsize=1)
def _schema_triples() -> tuple:
    out = []
    for name in CLASSES:
        out.append(Triple(_bf(name), RDF_TYPE, OWL_CLASS))
    for sub, sup in SUBCLASS_EDGES:
        out.append(Triple(_bf(sub), SUBCLASS_OF, _bf(sup)))
    for prop, dom, rng in OBJECT_PROPERTIES:
        p = IRI(prop)
        out += [Triple(p, RDF_TYPE, OBJECT_PROPERTY), Triple(p, DOMAIN, _bf(dom)),
                Triple(p, RANGE, _bf(rng))]
    for prop, dom, dtype in DATA_PROPERTIES:
        p = IRI(prop)
        out += [Triple(p, RDF_TYPE, DATATYPE_PROPERTY), Triple(p, DOMAIN, _bf(dom)),
                Triple(p, RANGE, IRI(dtype))]
    bf_pp, stix_pp = IRI(BF + "hasProtectionProgram"), IRI(STIX + "hasProtectionProgram")
    out += [Triple(bf_pp, EQUIVALENT_PROPERTY, stix_pp), Triple(stix_pp, EQUIVALENT_PROPERTY, bf_pp)]
    return tuple(out)


def builtin_schema() -> Graph:
    """A fresh copy of the IoBT schema graph (identical content on every call)."""
    return Graph(_schema_triples())


def superclasses(schema: Graph, cls: Term) -> List[Term]:
    """Reflexive-transitive superclasses of ``cls`` in BFS order."""
    seen: Dict[Term, None] = {cls: None}
    frontier = [cls]
    while frontier:
        nxt = []
        for c in frontier:
            for sup in schema.objects(c, SUBCLASS_OF):
                if sup not in seen:
                    seen[sup] = None
                    nxt.append(sup)
        frontier = nxt
    return list(seen)


def subclasses(schema: Graph, cls: Term) -> List[Term]:
    seen: Dict[Term, None] = {cls: None}
    frontier = [cls]
    while frontier:
        nxt = []
        for c in frontier:
            for sub in schema.subjects(SUBCLASS_OF, c):
                if sub not in seen:
                    seen[sub] = None
                    nxt.append(sub)
        frontier = nxt
    return list(seen)


def is_subclass_of(schema: Graph, c1: Term, c2: Term) -> bool:
    return c2 in superclasses(schema, c1)


def is_acyclic(schema: Graph) -> bool:
    """No class reaches itself over one or more subClassOf edges."""
    for t in schema.match(None, SUBCLASS_OF, None):
        if t.subject in superclasses(schema, t.object):
            return False
    return True


def equivalent_properties(schema: Graph, prop: Term) -> List[Term]:
    """``prop`` plus everything linked to it by owl:equivalentProperty (either direction)."""
    seen: Dict[Term, None] = {prop: None}
    frontier = [prop]
    while frontier:
        nxt = []
        for p in frontier:
            for q in schema.objects(p, EQUIVALENT_PROPERTY) + schema.subjects(EQUIVALENT_PROPERTY, p):
                if q not in seen:
                    seen[q] = None
                    nxt.append(q)
        frontier = nxt
    return list(seen)


def entailed_types(data: Graph, schema: Graph, node: Term) -> Set[Term]:
    """Types of ``node``: asserted, plus domain/range entailment, closed upward."""
    direct: Set[Term] = set(data.objects(node, RDF_TYPE))
    for t in data.match(node, None, None):
        direct.update(schema.objects(t.predicate, DOMAIN))
    if isinstance(node, IRI):
        for t in data.match(None, None, node):
            direct.update(schema.objects(t.predicate, RANGE))
    out: Set[Term] = set()
    for c in direct:
        out.update(superclasses(schema, c))
    return out


def instances_of(data: Graph, schema: Graph, cls: Term, merged: Optional[Graph] = None) -> List[Term]:
    """Nodes of ``data`` whose entailed types include ``cls``, in first-seen order."""
    g = merged or data
    seen: Dict[Term, None] = {}
    for sub in subclasses(schema, cls):
        for node in g.subjects(RDF_TYPE, sub):
            seen[node] = None
    for prop in _props_with(schema, DOMAIN, cls):
        for t in g.match(None, prop, None):
            seen[t.subject] = None
    for prop in _props_with(schema, RANGE, cls):
        for t in g.match(None, prop, None):
            if isinstance(t.object, IRI):
                seen[t.object] = None
    return list(seen)


def _props_with(schema: Graph, which: IRI, cls: Term) -> Iterable[Term]:
    targets = set(subclasses(schema, cls))
    return [t.subject for t in schema.match(None, which, None) if t.object in targets]

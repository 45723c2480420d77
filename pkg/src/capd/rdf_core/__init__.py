"""RDF substrate: terms, the indexed triple store, and Turtle I/O."""

from .graph import DEFAULT_PREFIXES, Graph, isomorphic
from .lexer import RDFSyntaxError, UnknownPrefixError
from .terms import (
    OWL, RDF, RDFS, XSD, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE, XSD_INTEGER, XSD_STRING,
    BNode, IRI, Literal, Term, TermError, Triple, compare, decimal_lexical,
    lexical_form, numeric_value, term_key,
)
from .turtle import RDF_TYPE, parse_turtle, serialize_turtle

BF = DEFAULT_PREFIXES["bf"]
SOSA = DEFAULT_PREFIXES["sosa"]
STIX = DEFAULT_PREFIXES["stix"]


def bf(local: str) -> IRI:
    return IRI(BF + local)


def rdfs(local: str) -> IRI:
    return IRI(RDFS + local)


def insert(g: Graph, t: Triple) -> bool:
    return g.insert(t)


def remove(g: Graph, t: Triple) -> bool:
    return g.remove(t)


def match(g: Graph, s=None, p=None, o=None):
    return g.match(s, p, o)


__all__ = [
    "BF", "SOSA", "STIX", "OWL", "RDF", "RDFS", "XSD", "XSD_BOOLEAN", "XSD_DECIMAL",
    "XSD_DOUBLE", "XSD_INTEGER", "XSD_STRING", "DEFAULT_PREFIXES", "RDF_TYPE",
    "BNode", "Graph", "IRI", "Literal", "RDFSyntaxError", "Term", "TermError",
    "Triple", "UnknownPrefixError", "bf", "compare", "decimal_lexical", "insert",
    "isomorphic", "lexical_form", "match", "numeric_value", "parse_turtle", "rdfs",
    "remove", "serialize_turtle", "term_key",
]

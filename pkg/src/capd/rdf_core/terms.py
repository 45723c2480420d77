"""RDF terms, triples and the numeric view of literals."""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import NamedTuple, Optional, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
OWL = "http://www.w3.org/2002/07/owl#"

XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_BOOLEAN = XSD + "boolean"

_INTEGER_TYPES = {
    XSD + name
    for name in (
        "integer", "int", "long", "short", "byte", "nonNegativeInteger",
        "positiveInteger", "nonPositiveInteger", "negativeInteger",
        "unsignedInt", "unsignedLong", "unsignedShort", "unsignedByte",
    )
}
_FLOAT_TYPES = {XSD + "double", XSD + "float"}

_WS = re.compile(r"\s")
_LANG = re.compile(r"^[a-zA-Z]+(-[a-zA-Z0-9]+)*$")


class TermError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class IRI:
    value: str

    def __post_init__(self):
        if not self.value or _WS.search(self.value):
            raise TermError(f"invalid IRI {self.value!r}")

    def __str__(self):
        return f"<{self.value}>"


@dataclass(frozen=True, slots=True)
class BNode:
    label: str

    def __post_init__(self):
        if not self.label or _WS.search(self.label):
            raise TermError(f"invalid blank node label {self.label!r}")

    def __str__(self):
        return f"_:{self.label}"


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING
    language: Optional[str] = None

    def __post_init__(self):
        if self.language is not None:
            if self.datatype != XSD_STRING:
                raise TermError("language tag requires the string datatype")
            if not _LANG.match(self.language):
                raise TermError(f"invalid language tag {self.language!r}")
        if not self.datatype or _WS.search(self.datatype):
            raise TermError(f"invalid datatype IRI {self.datatype!r}")

    def __str__(self):
        if self.language:
            return f'"{self.lexical}"@{self.language}'
        return f'"{self.lexical}"^^<{self.datatype}>'

    @classmethod
    def integer(cls, value: int) -> "Literal":
        return cls(str(int(value)), XSD_INTEGER)

    @classmethod
    def decimal(cls, value) -> "Literal":
        return cls(decimal_lexical(value), XSD_DECIMAL)


Term = Union[IRI, BNode, Literal]


class Triple(NamedTuple):
    subject: Term
    predicate: Term
    object: Term


def check_triple(t: Triple) -> None:
    if not isinstance(t.predicate, IRI):
        raise TermError(f"predicate must be an IRI: {t.predicate}")
    if isinstance(t.subject, Literal):
        raise TermError(f"subject must not be a literal: {t.subject}")
    for term in t:
        if not isinstance(term, (IRI, BNode, Literal)):
            raise TermError(f"not an RDF term: {term!r}")


def decimal_lexical(value) -> str:
    """Canonical-ish decimal lexical form without exponent ("5" -> "5.0")."""
    d = value if isinstance(value, Decimal) else Decimal(repr(value) if isinstance(value, float) else str(value))
    text = format(d, "f")
    if "." not in text:
        text += ".0"
    return text


def term_key(term: Term) -> tuple:
    """Total order over terms: IRIs, then blank nodes, then literals."""
    if isinstance(term, IRI):
        return (0, term.value, "", "")
    if isinstance(term, BNode):
        return (1, term.label, "", "")
    return (2, term.lexical, term.datatype, term.language or "")


def lexical_form(term: Term) -> str:
    if isinstance(term, IRI):
        return term.value
    if isinstance(term, BNode):
        return term.label
    return term.lexical


def numeric_value(term) -> Optional[Union[Fraction, float]]:
    """Numeric value of an integer/decimal/double literal, else None.

    Integers and decimals become exact Fractions; doubles stay floats.
    Python compares the two exactly, which gives the promotion rule.
    """
    if not isinstance(term, Literal):
        return None
    dt = term.datatype
    text = term.lexical.strip()
    try:
        if dt in _INTEGER_TYPES:
            if not re.fullmatch(r"[+-]?\d+", text):
                return None
            return Fraction(int(text))
        if dt == XSD_DECIMAL:
            if not re.fullmatch(r"[+-]?(\d+(\.\d*)?|\.\d+)", text):
                return None
            return Fraction(Decimal(text))
        if dt in _FLOAT_TYPES:
            value = float(text)
            return None if value != value else value
    except (ValueError, InvalidOperation):
        return None
    return None


_OPS = {
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}
COMPARISON_OPS = tuple(_OPS)


def compare(op: str, left, right) -> bool:
    """Evaluate ``left op right`` over terms.

    Ordering operators need numeric operands; anything else is false.
    ``=``/``!=`` compare numerically when both sides are numeric and fall
    back to exact term equality otherwise.
    """
    if left is None or right is None:
        return False
    lv, rv = numeric_value(left), numeric_value(right)
    if lv is not None and rv is not None:
        return _OPS[op](lv, rv)
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    return False

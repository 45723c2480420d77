"""SHACL-lite: per-class cardinality, datatype, class and numeric-range checks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Union

from ..rdf_core import (
    BF, DEFAULT_PREFIXES, SOSA, STIX, XSD_STRING, Graph, IRI, Literal, Term,
    numeric_value,
)
from ..rdf_core.terms import lexical_form
from .schema import entailed_types, equivalent_properties, instances_of


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class MinCount:
    path: IRI
    count: int
    kind = "min_count"

    def __post_init__(self):
        if self.count < 0:
            raise ShapeError("min_count must be >= 0")


@dataclass(frozen=True)
class MaxCount:
    path: IRI
    count: int
    kind = "max_count"

    def __post_init__(self):
        if self.count < 0:
            raise ShapeError("max_count must be >= 0")


@dataclass(frozen=True)
class Datatype:
    path: IRI
    datatype: str
    kind = "datatype"


@dataclass(frozen=True)
class ClassOf:
    path: IRI
    cls: IRI
    kind = "class"


@dataclass(frozen=True)
class NumericRange:
    """Values must be numeric and within the bounds.

    ``max_path`` bounds each value by every value of another property on the
    same focus node (used for lowRange <= highRange).
    """

    path: IRI
    min_inclusive: Optional[float] = None
    max_inclusive: Optional[float] = None
    max_path: Optional[IRI] = None
    kind = "numeric_range"

    def __post_init__(self):
        if (self.min_inclusive is not None and self.max_inclusive is not None
                and self.min_inclusive > self.max_inclusive):
            raise ShapeError("numeric_range min must not exceed max")


Constraint = Union[MinCount, MaxCount, Datatype, ClassOf, NumericRange]


@dataclass(frozen=True)
class Shape:
    name: str
    target_class: IRI
    constraints: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class Violation:
    focus_node: Term
    shape: str
    constraint: str
    path: str
    message: str

    def __str__(self):
        return self.message


def _short(term, prefixes: Mapping[str, str] = DEFAULT_PREFIXES) -> str:
    text = lexical_form(term) if not isinstance(term, str) else term
    best = None
    for prefix, ns in prefixes.items():
        if text.startswith(ns) and (best is None or len(ns) > len(best[1])):
            best = (prefix, ns)
    return f"{best[0]}:{text[len(best[1]):]}" if best else text


def _bf(local):
    return IRI(BF + local)


def default_shapes() -> List[Shape]:
    time_p, result_p = IRI(SOSA + "phenomenonTime"), _bf("hasResult")
    value_p, low_p, high_p = _bf("value"), _bf("lowRange"), _bf("highRange")
    pp_p, code_p = IRI(STIX + "hasProtectionProgram"), _bf("code")
    return [
        Shape("BandwidthObservationShape", _bf("BandwidthObservation"), (
            MinCount(time_p, 1), MaxCount(time_p, 1),
            MinCount(result_p, 1), MaxCount(result_p, 1),
        )),
        Shape("ResultShape", _bf("Result"), (
            MinCount(value_p, 1), MaxCount(value_p, 1), NumericRange(value_p),
        )),
        Shape("BandwidthAttackShape", _bf("BandwidthAttack"), (
            MinCount(low_p, 1), MinCount(high_p, 1),
            NumericRange(low_p, max_path=high_p),
        )),
        Shape("MitigationPlanShape", _bf("MitigationPlan"), (
            MinCount(pp_p, 1),
        )),
        Shape("ProtectionProgramShape", _bf("ProtectionProgram"), (
            MinCount(code_p, 1), MaxCount(code_p, 1), Datatype(code_p, XSD_STRING),
        )),
    ]


def _values(data: Graph, schema: Graph, node: Term, path: IRI) -> List[Term]:
    out = []
    for p in equivalent_properties(schema, path):
        for o in data.objects(node, p):
            if o not in out:
                out.append(o)
    return out


def _check(data: Graph, schema: Graph, shape: Shape, node: Term, c: Constraint) -> Optional[str]:
    vals = _values(data, schema, node, c.path)
    where = f"{_short(node)} {_short(c.path)}"
    if isinstance(c, MinCount):
        if len(vals) < c.count:
            return f"{where}: min_count {c.count} violated (found {len(vals)})"
    elif isinstance(c, MaxCount):
        if len(vals) > c.count:
            return f"{where}: max_count {c.count} violated (found {len(vals)})"
    elif isinstance(c, Datatype):
        bad = [v for v in vals if not (isinstance(v, Literal) and v.datatype == c.datatype)]
        if bad:
            return f"{where}: datatype {_short(c.datatype)} violated by {bad[0]}"
    elif isinstance(c, ClassOf):
        bad = [v for v in vals if c.cls not in entailed_types(data, schema, v)]
        if bad:
            return f"{where}: class {_short(c.cls)} violated by {_short(bad[0])}"
    elif isinstance(c, NumericRange):
        uppers = _values(data, schema, node, c.max_path) if c.max_path is not None else []
        for v in vals:
            num = numeric_value(v)
            if num is None:
                return f"{where}: numeric_range violated, {v} is not numeric"
            if c.min_inclusive is not None and num < c.min_inclusive:
                return f"{where}: numeric_range violated, {v.lexical} < {c.min_inclusive}"
            if c.max_inclusive is not None and num > c.max_inclusive:
                return f"{where}: numeric_range violated, {v.lexical} > {c.max_inclusive}"
            for u in uppers:
                unum = numeric_value(u)
                if unum is None or num > unum:
                    return (f"{where}: numeric_range violated, {v.lexical} exceeds "
                            f"{_short(c.max_path)} {lexical_form(u)}")
    return None


def validate(data: Graph, schema: Graph, shapes: Optional[Sequence[Shape]] = None) -> List[Violation]:
    """One Violation per (focus node, failed constraint); sorted, so order-independent."""
    if shapes is None:
        shapes = default_shapes()
    out = []
    for shape in shapes:
        for node in instances_of(data, schema, shape.target_class):
            for c in shape.constraints:
                msg = _check(data, schema, shape, node, c)
                if msg:
                    out.append(Violation(node, shape.name, c.kind, c.path.value,
                                         f"{msg} [shape {shape.name}]"))
    out.sort(key=lambda v: (lexical_form(v.focus_node), v.shape, v.constraint, v.path, v.message))
    return out


_KINDS = {"min_count", "max_count", "datatype", "class", "numeric_range"}


def shapes_from_config(config, prefixes: Mapping[str, str] = DEFAULT_PREFIXES) -> List[Shape]:
    """Build shapes from JSON-style data (a list, or ``{"shapes": [...]}``)."""
    if isinstance(config, (str, bytes)):
        config = json.loads(config)
    if isinstance(config, Mapping):
        config = config.get("shapes", [])

    def iri(text: str, where: str) -> IRI:
        if not isinstance(text, str) or not text:
            raise ShapeError(f"{where}: expected an IRI or prefixed name")
        if text.startswith("<") and text.endswith(">"):
            return IRI(text[1:-1])
        prefix, sep, local = text.partition(":")
        if sep and prefix in prefixes and not local.startswith("//"):
            return IRI(prefixes[prefix] + local)
        if "://" in text:
            return IRI(text)
        raise ShapeError(f"{where}: unknown prefix in {text!r}")

    shapes = []
    for i, entry in enumerate(config):
        where = f"shapes[{i}]"
        try:
            target = iri(entry["target_class"], f"{where}.target_class")
            name = entry.get("name", f"{_short(target)}Shape")
            constraints = []
            for j, c in enumerate(entry.get("constraints", [])):
                cw = f"{where}.constraints[{j}]"
                kind = c.get("kind")
                if kind not in _KINDS:
                    raise ShapeError(f"{cw}.kind: unknown constraint kind {kind!r}")
                path = iri(c["path"], f"{cw}.path")
                if kind == "min_count":
                    constraints.append(MinCount(path, int(c["count"])))
                elif kind == "max_count":
                    constraints.append(MaxCount(path, int(c["count"])))
                elif kind == "datatype":
                    constraints.append(Datatype(path, iri(c["datatype"], f"{cw}.datatype").value))
                elif kind == "class":
                    constraints.append(ClassOf(path, iri(c["class"], f"{cw}.class")))
                else:
                    max_path = iri(c["max_path"], f"{cw}.max_path") if c.get("max_path") else None
                    constraints.append(NumericRange(path, c.get("min"), c.get("max"), max_path))
        except KeyError as exc:
            raise ShapeError(f"{where}: missing field {exc.args[0]!r}") from None
        shapes.append(Shape(name, target, tuple(constraints)))
    return shapes

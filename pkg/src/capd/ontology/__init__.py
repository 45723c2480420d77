"""IoBT schema graph, subclass helpers and the SHACL-lite validator."""

from .schema import (
    DOMAIN, EQUIVALENT_PROPERTY, RANGE, SUBCLASS_OF, builtin_schema, entailed_types,
    equivalent_properties, instances_of, is_acyclic, is_subclass_of, subclasses, superclasses,
)
from .shapes import (
    ClassOf, Datatype, MaxCount, MinCount, NumericRange, Shape, ShapeError, Violation,
    default_shapes, shapes_from_config, validate,
)

__all__ = [
    "DOMAIN", "EQUIVALENT_PROPERTY", "RANGE", "SUBCLASS_OF", "ClassOf", "Datatype",
    "MaxCount", "MinCount", "NumericRange", "Shape", "ShapeError", "Violation",
    "builtin_schema", "default_shapes", "entailed_types", "equivalent_properties",
    "instances_of", "is_acyclic", "is_subclass_of", "shapes_from_config", "subclasses",
    "superclasses", "validate",
]

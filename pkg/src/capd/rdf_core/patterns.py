"""Variables, triple patterns and comparison builtins shared by queries and rules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, Tuple, Union

from .graph import Graph
from .terms import Term, Triple, compare

Binding = Dict[str, Term]


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self):
        return f"?{self.name}"


Slot = Union[Var, Term]


def resolve(slot: Slot, binding: Binding):
    """Term for a slot under ``binding``; None for an unbound variable."""
    if isinstance(slot, Var):
        return binding.get(slot.name)
    return slot


@dataclass(frozen=True)
class TriplePattern:
    s: Slot
    p: Slot
    o: Slot

    def __iter__(self):
        return iter((self.s, self.p, self.o))

    def variables(self) -> Tuple[str, ...]:
        seen = []
        for slot in self:
            if isinstance(slot, Var) and slot.name not in seen:
                seen.append(slot.name)
        return tuple(seen)

    def bound_count(self, bound: set) -> int:
        return sum(1 for slot in self if not isinstance(slot, Var) or slot.name in bound)

    def instantiate(self, binding: Binding) -> Triple:
        return Triple(*(resolve(slot, binding) for slot in self))

    def __str__(self):
        return " ".join(str(x) for x in self)


def match_pattern(g: Graph, pattern: TriplePattern, binding: Binding) -> Iterator[Binding]:
    """Extend ``binding`` with every way ``pattern`` matches a triple of ``g``."""
    s, p, o = (resolve(slot, binding) for slot in pattern)
    for triple in g.match(s, p, o):
        ext = binding
        ok = True
        for slot, term in zip(pattern, triple):
            if isinstance(slot, Var):
                prior = ext.get(slot.name)
                if prior is None:
                    if ext is binding:
                        ext = dict(binding)
                    ext[slot.name] = term
                elif prior != term:
                    # repeated variable within one pattern, e.g. ?x ?p ?x
                    ok = False
                    break
        if ok:
            yield ext if ext is not binding else dict(binding)


@dataclass(frozen=True)
class Comparison:
    """``left op right`` over variables and concrete terms."""

    op: str
    left: Slot
    right: Slot

    def variables(self) -> Tuple[str, ...]:
        return tuple(x.name for x in (self.left, self.right) if isinstance(x, Var))

    def holds(self, binding: Binding) -> bool:
        return compare(self.op, resolve(self.left, binding), resolve(self.right, binding))

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"

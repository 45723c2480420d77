"""Attribute-based access control: deny-by-default, deny-overrides."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Optional, Tuple

ACTIONS = ("read", "send", "command")
EFFECTS = ("permit", "deny")
PREDICATE_OPS = ("=", "!=", "in", "<", ">")
DEFAULT_DENY = "default-deny"


class AbacError(ValueError):
    pass


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class Predicate:
    attribute: str
    op: str
    value: Any

    def __post_init__(self):
        if self.op not in PREDICATE_OPS:
            raise AbacError(f"unknown operator {self.op!r} on attribute {self.attribute!r}")
        if self.op in ("<", ">") and not _is_number(self.value):
            raise AbacError(f"numeric comparison {self.attribute} {self.op} {self.value!r} "
                            f"needs a numeric value")
        if self.op == "in":
            if not isinstance(self.value, (list, tuple, frozenset, set)):
                raise AbacError(f"'in' on attribute {self.attribute!r} needs a list of values")
            object.__setattr__(self, "value", frozenset(self.value))

    def matches(self, attrs: Mapping[str, Any]) -> bool:
        if self.attribute not in attrs:
            return False
        actual = attrs[self.attribute]
        if self.op == "=":
            return actual == self.value
        if self.op == "!=":
            return actual != self.value
        if self.op == "in":
            try:
                return actual in self.value
            except TypeError:
                return False
        if not _is_number(actual):
            return False
        return actual < self.value if self.op == "<" else actual > self.value


@dataclass(frozen=True)
class AbacRule:
    id: str
    effect: str
    action: str
    subject: Tuple[Predicate, ...] = ()
    object: Tuple[Predicate, ...] = ()

    def __post_init__(self):
        if self.effect not in EFFECTS:
            raise AbacError(f"rule {self.id}: effect must be permit or deny")
        if self.action not in ACTIONS and self.action != "*":
            raise AbacError(f"rule {self.id}: unknown action {self.action!r}")

    def applies(self, subject_attrs, object_attrs, action) -> bool:
        return ((self.action == "*" or self.action == action)
                and all(p.matches(subject_attrs) for p in self.subject)
                and all(p.matches(object_attrs) for p in self.object))


@dataclass(frozen=True)
class AccessDecision:
    effect: str
    rule_id: str

    @property
    def permitted(self) -> bool:
        return self.effect == "permit"


@dataclass(frozen=True)
class AbacPolicy:
    rules: Tuple[AbacRule, ...] = ()

    def __post_init__(self):
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise AbacError("ABAC rule ids must be unique")

    @classmethod
    def from_config(cls, rows: Optional[Iterable[Mapping]]) -> "AbacPolicy":
        rules = []
        for i, row in enumerate(rows or ()):
            try:
                preds = {
                    side: tuple(Predicate(p["attribute"], p["op"], p["value"]) for p in row.get(side, ()))
                    for side in ("subject", "object")
                }
                rules.append(AbacRule(str(row.get("id", f"rule-{i}")), row["effect"], row["action"],
                                      preds["subject"], preds["object"]))
            except KeyError as exc:
                raise AbacError(f"abac[{i}]: missing field {exc.args[0]!r}") from None
            except AbacError as exc:
                raise AbacError(f"abac[{i}]: {exc}") from None
        return cls(tuple(rules))


def check_access(policy: AbacPolicy, subject_attrs: Mapping[str, Any],
                 object_attrs: Mapping[str, Any], action: str) -> AccessDecision:
    """Evaluate every rule; any matching deny wins, else any permit, else default deny.

    The reported rule id is the smallest matching id of the winning effect,
    so the answer does not depend on rule order.
    """
    if action not in ACTIONS:
        raise AbacError(f"unknown action {action!r}")
    matched = [r for r in policy.rules if r.applies(subject_attrs, object_attrs, action)]
    denies = sorted(r.id for r in matched if r.effect == "deny")
    if denies:
        return AccessDecision("deny", denies[0])
    permits = sorted(r.id for r in matched if r.effect == "permit")
    if permits:
        return AccessDecision("permit", permits[0])
    return AccessDecision("deny", DEFAULT_DENY)

"""Closed-loop scenario runs: simulator and policy engine, one cycle per tick."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional

from ..policy import REPOSITION_NEAREST_DRONE, PolicyEngine, check_access
from .scenario import Scenario
from .world import apply_mitigation, deliver, initial_world, step

CATEGORIES = ("attack", "telemetry", "detection", "decision", "delivery", "summary")


@dataclass
class EventLog:
    records: List[dict] = field(default_factory=list)

    def add(self, tick: int, category: str, **payload) -> None:
        if category not in CATEGORIES:
            raise ValueError(f"unknown log category {category!r}")
        if self.records and tick < self.records[-1]["tick"]:
            raise ValueError("log ticks must be non-decreasing")
        self.records.append({"tick": tick, "category": category, **payload})

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def of(self, category: str) -> List[dict]:
        return [r for r in self.records if r["category"] == category]

    def decision_codes(self) -> List[str]:
        return [r["code"] for r in self.of("decision")]

    @property
    def summary(self) -> Optional[dict]:
        found = self.of("summary")
        return found[-1] if found else None

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records)

    def to_text(self) -> str:
        lines = []
        for r in self.records:
            body = " ".join(f"{k}={_text(v)}" for k, v in r.items() if k not in ("tick", "category"))
            lines.append(f"{r['tick']:>4}  {r['category']:<9} {body}")
        return "\n".join(lines) + ("\n" if lines else "")


def _text(value) -> str:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def _engine_for(scenario: Scenario) -> PolicyEngine:
    engine = PolicyEngine(scenario.policy)
    for a in scenario.assets:
        engine.register_asset(a.id, a.kind, a.position, a.movable)
    for l in scenario.links:
        engine.register_link(l.id, l.sender, l.receiver, l.technology, l.capacity_mbps)
    return engine


def run_scenario(scenario: Scenario, seed: Optional[int] = None,
                 ticks: Optional[int] = None) -> EventLog:
    """Run the scenario and return its event log.

    Per tick: step, ingest telemetry, detect and decide, apply decisions,
    deliver, log. Delivery is measured on the state the tick started with,
    so a decision's effect shows from the next tick onward.
    """
    if ticks is not None:
        if ticks <= 0:
            raise ValueError("ticks must be positive")
        scenario = replace(scenario, duration_ticks=min(ticks, scenario.duration_ticks))
    abac = scenario.policy.abac if scenario.abac_enforced else None
    engine = _engine_for(scenario)
    world = initial_world(scenario, seed)
    log = EventLog()
    per_tick: Dict[str, List[str]] = {}
    delivered = attempted = 0

    for t in range(scenario.duration_ticks):
        events = scenario.events_at(t)
        world, records = step(world, scenario)
        engine.observe(records)
        view: Dict[str, list] = {}
        for rec in records:
            view.setdefault(rec.asset_id, []).append(rec)
        decisions = engine.decide(t, view)
        deliveries = deliver(world, scenario.settings, abac)

        applied = []
        for d in decisions:
            if abac is not None and d.program_code == REPOSITION_NEAREST_DRONE:
                verdict = check_access(abac, dict(scenario.policy.engine_attributes),
                                       world.assets[d.target_asset].access_attributes(), "command")
                if not verdict.permitted:
                    applied.append({"applied": False, "reason": f"access denied ({verdict.rule_id})"})
                    continue
            world = apply_mitigation(world, d, scenario.settings)
            outcome = {k: v for k, v in world.outcomes[-1].items() if k not in ("code", "target")}
            applied.append(outcome)

        for ev in events:
            log.add(t, "attack", **ev.to_record())
        for rec in records:
            payload = {"asset": rec.asset_id, "metric": rec.metric}
            if rec.metric == "position":
                payload["position"] = [rec.position[0], rec.position[1]]
            else:
                payload["value"] = rec.value
            log.add(t, "telemetry", **payload)
        for det in engine.detections:
            log.add(t, "detection", **det)
        for d, outcome in zip(decisions, applied):
            log.add(t, "decision", **d.to_record(), **outcome)
            per_tick.setdefault(str(t), []).append(d.program_code)
        for rec in deliveries:
            log.add(t, "delivery", **rec)
            attempted += 1
            delivered += rec["delivered"]

    codes: List[str] = []
    for c in log.decision_codes():
        if c not in codes:
            codes.append(c)
    streams = sorted({l.sender for l in scenario.links})
    covered = [ok for sid in streams for ok in stream_delivered(log, sid).values()]
    log.add(scenario.duration_ticks, "summary", scenario=scenario.name,
            decisions=per_tick, distinct_codes=codes, deliveries=attempted, delivered=delivered,
            delivery_success_ratio=round(delivered / attempted, 6) if attempted else 1.0,
            stream_coverage_ratio=round(sum(covered) / len(covered), 6) if covered else 1.0)
    return log


def stream_delivered(log: Iterable[dict], asset_id: str) -> Dict[int, bool]:
    """Per tick, whether any delivered payload covered ``asset_id``'s stream."""
    out: Dict[int, bool] = {}
    for r in log:
        if r["category"] != "delivery":
            continue
        covered = r["delivered"] and asset_id in r["covers"]
        out[r["tick"]] = out.get(r["tick"], False) or covered
    return out

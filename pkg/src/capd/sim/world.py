"""World state and the pure transition functions: step, apply_mitigation, deliver."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from ..policy import (
    NO_ASSET_AVAILABLE, REPOSITION_NEAREST_DRONE, SWITCH_TO_LORAWAN, SWITCH_TO_MICROPHONE,
    AbacPolicy, MitigationDecision, ObservationRecord, check_access, quantize,
)
from .prng import LCG
from .scenario import Scenario, SimSettings

PROGRAM_MODES = {
    "SEND_COLOR_VIDEO": "color_video",
    "SEND_GRAYSCALE_VIDEO": "grayscale_video",
    "SEND_STILL_IMAGES": "still_images",
    "SEND_OBJECT_COUNT": "object_count",
}


class SimulationError(RuntimeError):
    pass


@dataclass
class AssetState:
    id: str
    kind: str
    position: Tuple[float, float]
    movable: bool
    attributes: Dict[str, object] = field(default_factory=dict)
    alive: bool = True
    blinded: bool = False
    modality: str = "video"
    visual_mode: str = "color_video"
    audio_source: Optional[str] = None
    destination: Optional[Tuple[float, float]] = None
    replaces: Optional[str] = None
    covers: List[str] = field(default_factory=list)

    @property
    def payload_mode(self) -> str:
        return "audio" if self.modality == "audio" else self.visual_mode

    def access_attributes(self) -> Dict[str, object]:
        return {**self.attributes, "id": self.id, "kind": self.kind}


@dataclass
class LinkState:
    id: str
    sender: str
    receiver: str
    technology: str
    capacity: float
    active: bool
    multiplier: float = 1.0
    jammed: bool = False

    @property
    def bandwidth(self) -> float:
        """True available bandwidth; never exceeds capacity."""
        if not self.active or self.jammed:
            return 0.0
        return self.capacity * self.multiplier


@dataclass
class WorldState:
    tick: int
    assets: Dict[str, AssetState]
    links: Dict[str, LinkState]
    rng_state: int
    outcomes: List[dict] = field(default_factory=list)

    def active_link(self, sender: str) -> Optional[LinkState]:
        return next((l for l in self.links.values() if l.sender == sender and l.active), None)

    def senders(self) -> List[str]:
        return sorted({l.sender for l in self.links.values()})


def initial_world(scenario: Scenario, seed: Optional[int] = None) -> WorldState:
    assets = {a.id: AssetState(a.id, a.kind, a.position, a.movable, dict(a.attributes), covers=[a.id])
              for a in scenario.assets}
    links = {l.id: LinkState(l.id, l.sender, l.receiver, l.technology, l.capacity_mbps, l.active)
             for l in scenario.links}
    return WorldState(0, assets, links, LCG(scenario.seed if seed is None else seed).state)


def _apply_event(world: WorldState, kind: str, target: str, multiplier: Optional[float]) -> None:
    if kind == "degrade_bandwidth":
        world.links[target].multiplier = multiplier
    elif kind == "jam":
        world.links[target].jammed = True
    elif kind == "blind":
        world.assets[target].blinded = True
    elif kind == "destroy":
        world.assets[target].alive = False


def _move(asset: AssetState, speed: float) -> None:
    if asset.destination is None or not asset.alive:
        return
    (x, y), (tx, ty) = asset.position, asset.destination
    dist = math.hypot(tx - x, ty - y)
    if dist <= speed:
        asset.position = (float(tx), float(ty))
        asset.destination = None
        if asset.replaces and asset.replaces not in asset.covers:
            asset.covers.append(asset.replaces)
    else:
        f = speed / dist
        asset.position = (x + (tx - x) * f, y + (ty - y) * f)


def _round(value: float) -> float:
    return float(quantize(value))


def step(world: WorldState, scenario: Scenario) -> Tuple[WorldState, List[ObservationRecord]]:
    """Advance one tick: attack events, drone movement, then telemetry."""
    if world.tick >= scenario.duration_ticks:
        raise SimulationError(f"tick {world.tick} is past the scenario duration")
    w = copy.deepcopy(world)
    w.outcomes = []
    t = w.tick
    s = scenario.settings
    for ev in scenario.events_at(t):
        _apply_event(w, ev.kind, ev.target, ev.multiplier)
    for asset in w.assets.values():
        _move(asset, s.drone_speed)

    rng = LCG(0)
    rng.state = w.rng_state
    records: List[ObservationRecord] = []
    alive = [a for a in w.assets.values() if a.alive]
    for a in alive:
        records.append(ObservationRecord(a.id, t, "position", 0.0, a.position))
    for link in w.links.values():
        if not link.active or not w.assets[link.sender].alive:
            continue
        factor = 1.0 + (2.0 * rng.uniform() - 1.0) * s.noise
        records.append(ObservationRecord(link.sender, t, "bandwidth_mbps", _round(link.bandwidth * factor)))
    for a in alive:
        if a.kind == "camera":
            lum = s.blinded_luminance if a.blinded else s.nominal_luminance
            records.append(ObservationRecord(a.id, t, "luminance", lum))
        elif a.kind == "microphone":
            records.append(ObservationRecord(a.id, t, "audio_level", s.audio_level))
    w.rng_state = rng.state
    w.tick = t + 1
    return w, records


def apply_mitigation(world: WorldState, d: MitigationDecision,
                     settings: Optional[SimSettings] = None) -> WorldState:
    """Return a new world with the decision's program in effect.

    The outcome (applied or the reason it could not be) is appended to
    ``outcomes`` on the returned world.
    """
    w = copy.deepcopy(world)
    code, target = d.program_code, d.target_asset
    outcome = {"code": code, "target": target, "applied": True}
    asset = w.assets.get(target)
    if code in PROGRAM_MODES:
        if asset is None:
            outcome.update(applied=False, reason=f"unknown asset {target}")
        else:
            asset.visual_mode = PROGRAM_MODES[code]
            if asset.modality == "audio":
                outcome["note"] = "sender is in audio modality; visual mode stored"
    elif code == SWITCH_TO_LORAWAN:
        current = w.active_link(target)
        receivers = {current.receiver} if current else {l.receiver for l in w.links.values()
                                                       if l.sender == target}
        fallback = next((l for l in w.links.values() if l.sender == target
                         and l.technology == "lorawan" and l.receiver in receivers), None)
        if fallback is None:
            outcome.update(applied=False, reason=f"no LoRaWAN link defined for {target}")
        else:
            for l in w.links.values():
                if l.sender == target and l.technology == "fourg":
                    l.active = False
            fallback.active = True
            outcome["link"] = fallback.id
    elif code == SWITCH_TO_MICROPHONE:
        mic = d.param("microphone")
        if asset is None or mic not in w.assets:
            outcome.update(applied=False, reason="no microphone available")
        else:
            asset.modality = "audio"
            asset.audio_source = mic
    elif code == REPOSITION_NEAREST_DRONE:
        dest = d.param("destination")
        if asset is None or dest is None or not asset.movable:
            outcome.update(applied=False, reason=f"{target} cannot be repositioned")
        else:
            asset.destination = (float(dest[0]), float(dest[1]))
            asset.replaces = d.param("replaces")
    elif code == NO_ASSET_AVAILABLE:
        outcome.update(applied=False, reason="no fallback asset available")
    else:
        outcome.update(applied=False, reason=f"no simulator effect for {code}")
    w.outcomes = world.outcomes + [outcome]
    return w


def deliver(world: WorldState, settings: Optional[SimSettings] = None,
            abac: Optional[AbacPolicy] = None) -> List[dict]:
    """One delivery record per sending asset, sorted by asset id.

    A payload is delivered iff the sender is alive, its link is active, the
    mode's required bandwidth fits the link, the sensing source works, and
    (when a policy is given) ABAC permits the send.
    """
    reqs: Mapping[str, float] = (settings or SimSettings()).payload_requirements
    out = []
    for sender_id in world.senders():
        sender = world.assets[sender_id]
        link = world.active_link(sender_id)
        mode = sender.payload_mode
        required = reqs[mode]
        available = _round(link.bandwidth) if link else 0.0
        reason = "ok"
        if not sender.alive:
            reason = "sender destroyed"
        elif link is None:
            reason = "no active link"
        elif required > link.bandwidth:
            reason = f"{mode} needs {required} Mbps"
        elif mode == "audio" and not (sender.audio_source in world.assets
                                      and world.assets[sender.audio_source].alive):
            reason = "audio source unavailable"
        elif mode != "audio" and sender.blinded:
            reason = "sensor blinded"
        elif abac is not None:
            decision = check_access(abac, sender.access_attributes(),
                                    world.assets[link.receiver].access_attributes(), "send")
            if not decision.permitted:
                reason = f"access denied ({decision.rule_id})"
        out.append({
            "asset": sender_id, "link": link.id if link else None, "mode": mode,
            "required": required, "available": available, "delivered": reason == "ok",
            "reason": reason, "covers": list(sender.covers) if sender.alive else [],
        })
    return out

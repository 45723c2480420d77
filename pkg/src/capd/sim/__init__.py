"""Deterministic discrete-tick IoBT testbed driving the policy engine."""

from .prng import LCG
from .runner import EventLog, run_scenario, stream_delivered
from .scenario import (
    BUNDLED, DEFAULT_PAYLOAD_REQUIREMENTS, AssetSpec, AttackEvent, LinkSpec, Scenario,
    ScenarioError, SimSettings, bundled_text, load_scenario, scenario_from_dict,
)
from .world import (
    PROGRAM_MODES, AssetState, LinkState, SimulationError, WorldState, apply_mitigation,
    deliver, initial_world, step,
)

__all__ = [
    "LCG", "EventLog", "run_scenario", "stream_delivered", "BUNDLED",
    "DEFAULT_PAYLOAD_REQUIREMENTS", "AssetSpec", "AttackEvent", "LinkSpec", "Scenario",
    "ScenarioError", "SimSettings", "bundled_text", "load_scenario", "scenario_from_dict",
    "PROGRAM_MODES", "AssetState", "LinkState", "SimulationError", "WorldState",
    "apply_mitigation", "deliver", "initial_world", "step",
]

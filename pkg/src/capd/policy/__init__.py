"""Policy engine: telemetry ingestion, attack detection, mitigation selection, ABAC."""

from .abac import (
    DEFAULT_DENY, AbacError, AbacPolicy, AbacRule, AccessDecision, Predicate, check_access,
)
from .engine import (
    NO_ASSET_AVAILABLE, REPOSITION_NEAREST_DRONE, SWITCH_TO_LORAWAN, SWITCH_TO_MICROPHONE,
    DuplicateObservationError, MitigationDecision, ObservationRecord, PolicyConfig,
    PolicyEngine, PolicyError, Provenance, ingest, mitigation_fixture, observation_iri,
    registered_programs, response_fixture, seed_mitigation_fixture, select_mitigation,
    use_case1_query_text,
)
from .stages import BandwidthStageConfig, Stage, StageConfigError, quantize

__all__ = [
    "DEFAULT_DENY", "AbacError", "AbacPolicy", "AbacRule", "AccessDecision", "Predicate",
    "check_access", "NO_ASSET_AVAILABLE", "REPOSITION_NEAREST_DRONE", "SWITCH_TO_LORAWAN",
    "SWITCH_TO_MICROPHONE", "DuplicateObservationError", "MitigationDecision",
    "ObservationRecord", "PolicyConfig", "PolicyEngine", "PolicyError", "Provenance",
    "ingest", "mitigation_fixture", "observation_iri", "registered_programs",
    "response_fixture", "seed_mitigation_fixture", "select_mitigation",
    "use_case1_query_text", "BandwidthStageConfig", "Stage", "StageConfigError", "quantize",
]

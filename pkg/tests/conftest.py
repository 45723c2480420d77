import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from capd.ontology import builtin_schema  # noqa: E402
from capd.policy import BandwidthStageConfig, ObservationRecord, ingest, seed_mitigation_fixture  # noqa: E402
from capd.reasoner import KnowledgeBase  # noqa: E402

UC1_VALUES = (7.5, 3.0, 0.5, 0.05)
UC1_CODES = ["SEND_COLOR_VIDEO", "SEND_GRAYSCALE_VIDEO", "SEND_STILL_IMAGES", "SEND_OBJECT_COUNT"]


def fixture_kb(values=UC1_VALUES, asset="Asset_A") -> KnowledgeBase:
    kb = KnowledgeBase()
    kb.assert_all(builtin_schema())
    seed_mitigation_fixture(kb, BandwidthStageConfig.default())
    for tick, v in enumerate(values, start=1):
        ingest(kb, ObservationRecord(asset, tick, "bandwidth_mbps", v))
    return kb


@pytest.fixture
def uc1_kb():
    return fixture_kb()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

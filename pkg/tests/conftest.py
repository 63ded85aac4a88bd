from pathlib import Path

import pytest

from builders import make_infra

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


@pytest.fixture
def scenarios_dir():
    return SCENARIOS


@pytest.fixture
def edge_infra():
    return make_infra(("n1", "edge", {"com": 2.0, "net": 10.0}))

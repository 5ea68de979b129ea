import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("levykit", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("levykit")

DATA = Path(__file__).with_name("data")


@pytest.fixture(scope="session")
def frozen():
    return json.loads((DATA / "frozen.json").read_text())

import pytest

from rbflow.config import parse_config
from rbflow.runner import run_scenario
from rbflow.scenarios import SCENARIOS


@pytest.fixture(scope="session")
def scenario_results():
    """Run every builtin scenario once and share the results."""
    return {name: run_scenario(parse_config(s.config_text)) for name, s in SCENARIOS.items()}

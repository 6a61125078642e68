import json
from pathlib import Path

import pytest

from tlab.geometry import RadiusSchedule
from tlab.scenario import shipped_battery
from tlab.verify import verify_scenario

FIXTURES = Path(__file__).with_name("fixtures")


@pytest.fixture(scope="session")
def oracles():
    return json.loads((FIXTURES / "oracles.json").read_text())


@pytest.fixture(scope="session")
def schedule():
    return RadiusSchedule()


@pytest.fixture(scope="session")
def battery_results(schedule):
    """Full verification of the shipped battery, computed once per session."""
    return {sc.label: verify_scenario(sc, schedule) for sc in shipped_battery()}


@pytest.fixture(scope="session")
def scenarios():
    return {sc.label: sc for sc in shipped_battery()}

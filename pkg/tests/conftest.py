from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from commitplan.series import HOUR, DemandSeries
from commitplan.synthetic import write_fleet_csv

settings.register_profile("ci", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

MONDAY = datetime(2024, 1, 1, tzinfo=timezone.utc)


def hourly(values, start=MONDAY):
    return DemandSeries(start, HOUR, np.asarray(values, float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fleet_csv(tmp_path_factory):
    return write_fleet_csv(tmp_path_factory.mktemp("fleet") / "fleet.csv", regions=2, machine_types=3, weeks=10)


# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

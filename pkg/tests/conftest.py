import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nelson_lab.fields import Grid
from nelson_lab.params import PhysParams, harmonic_potential

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture
def natural():
    return PhysParams.natural()


@pytest.fixture
def harmonic():
    grid = Grid.line(-10.0, 10.0, 512)
    p = PhysParams.natural()
    return grid, p.with_potential(harmonic_potential(grid, p.m, 1.0))


@pytest.fixture
def circle_grid():
    return Grid.circle(256)

import math

import numpy as np
import pytest

from spin_otto import (
    Trajectory,
    compare_n_levels,
    default_config,
    run_heating,
    sweep_heating_time,
    temperature_trace,
    zeeman_ladder,
)

SWEEP_GRID = np.arange(1.0, 401.0, 1.0)
LEVEL_COUNTS = (2, 3, 4, 5, 6, 7)

_ACCEPTANCE = {}


def poisson_populations(x, N=7):
    """Pure-birth populations at dimensionless time ``x``, from the series."""
    p = [math.exp(-x) * x**n / math.factorial(n) for n in range(N - 1)]
    return np.array(p + [1.0 - sum(p)])


@pytest.fixture(scope="session")
def calibrated():
    return default_config()


@pytest.fixture(scope="session")
def reduced():
    return default_config("reduced_final")


@pytest.fixture(scope="session")
def calibrated_sweep(calibrated):
    return sweep_heating_time(calibrated, SWEEP_GRID)


@pytest.fixture(scope="session")
def level_study(calibrated):
    return compare_n_levels(calibrated, LEVEL_COUNTS, SWEEP_GRID)


@pytest.fixture(scope="session")
def reduced_level_study(reduced):
    return compare_n_levels(reduced, (7,), SWEEP_GRID)


@pytest.fixture(scope="session")
def heating_temperature_trace(calibrated):
    """Fits along calibrated heating, one per ms over the first 160 ms."""
    stroke = run_heating(calibrated.replace(step=0.25), 160.0)
    traj = stroke.trajectory
    keep = np.arange(0, len(traj), 4)
    sub = Trajectory(traj.times[keep], traj.states[keep])
    return sub, temperature_trace(sub, zeeman_ladder(calibrated.B1, calibrated.N))


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        )

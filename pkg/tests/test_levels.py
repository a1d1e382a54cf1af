import math

import numpy as np
import pytest
from scipy import optimize

from conftest import poisson_populations
from spin_otto.cycle import reduced_final_profile, run_heating, sweep_heating_time
from spin_otto.errors import DomainError
from spin_otto.levels import (
    HeatTimeMap,
    build_heat_time_map,
    compare_n_levels,
    terminal_power_drop,
    truncate,
)
from spin_otto.thermo import LAMBDA_NK_PER_MG

LAM_B1 = LAMBDA_NK_PER_MG * 346.5


def test_truncate_identity(calibrated):
    assert truncate(calibrated, 7).config == calibrated


def test_truncate_two_levels(calibrated):
    m = truncate(calibrated, 2)
    assert m.config.heating.rates == calibrated.heating.rates[:1]
    assert m.config.cooling.rates == calibrated.cooling.rates[:1]
    assert m.config.B1 == calibrated.B1 and m.config.ramp_time == calibrated.ramp_time


def test_truncate_reduced_preset(reduced):
    m = truncate(reduced, 4)
    assert m.config.heating.rates == reduced.heating.rates[:3]
    assert m.config.heating.rates == reduced_final_profile(reduced.heating.rates[0]).rates[:3]


@pytest.mark.parametrize("N", [1, 8])
def test_truncate_out_of_range(calibrated, N):
    with pytest.raises(DomainError):
        truncate(calibrated, N)


@pytest.fixture(scope="module")
def heat_map(calibrated):
    return build_heat_time_map(run_heating(calibrated, 40 / calibrated.heating.rates[0]))


def test_heat_map_endpoints(heat_map):
    assert heat_map.time_for(0.0) == 0.0
    assert heat_map.max_heat == pytest.approx(6 * LAM_B1, rel=1e-9)
    assert heat_map.time_for(heat_map.max_heat) == heat_map.time[-1]
    assert np.all(np.diff(heat_map.heat) > 0)
    with pytest.raises(DomainError):
        heat_map.time_for(7 * LAM_B1)


def test_heat_map_mean_level_three(calibrated, heat_map):
    G = calibrated.heating.rates[0]
    x = optimize.brentq(lambda x: poisson_populations(x) @ np.arange(7) - 3.0, 1, 6, xtol=1e-13)
    assert heat_map.time_for(3 * LAM_B1) == pytest.approx(x / G, abs=1e-3)
    assert heat_map.time_for(3 * LAM_B1) == pytest.approx(53.94, abs=0.01)


def test_heat_map_inverse(heat_map):
    for t in (5.0, 50.0, 150.0):
        assert heat_map.time_for(heat_map.heat_for(t)) == pytest.approx(t, abs=1e-9)


def test_heat_map_needs_heat_stroke(calibrated):
    from spin_otto.cycle import run_cycle

    with pytest.raises(DomainError):
        build_heat_time_map(run_cycle(calibrated, 10.0).expansion)


def test_heat_map_rejects_decreasing_heat():
    from spin_otto.cycle import StrokeKind, StrokeRecord
    from spin_otto.dynamics import Trajectory

    states = np.array([[1.0, 0.0], [0.5, 0.5], [0.8, 0.2]])
    stroke = StrokeRecord(StrokeKind.HEATING, 2.0, Trajectory(np.arange(3.0), states),
                          0.0, 0.0, np.zeros(3), field=346.5)
    with pytest.raises(AssertionError):
        build_heat_time_map(stroke)


def test_seven_levels_reproduce_sweep(calibrated):
    grid = np.arange(5.0, 200.0, 15.0)
    cmp = compare_n_levels(calibrated, {7}, grid)
    ref = sweep_heating_time(calibrated, grid)
    c = cmp[7]
    assert np.abs(c.P - ref.P).max() <= 1e-12
    assert np.abs(c.S_B - ref.S_B).max() <= 1e-12
    assert np.abs(c.tau_cycle - np.array([r.tau_cycle for r in ref.records])).max() <= 1e-12


def test_compare_rejects_bad_counts(calibrated):
    with pytest.raises(DomainError):
        compare_n_levels(calibrated, [], [10.0])
    with pytest.raises(DomainError):
        compare_n_levels(calibrated, [1, 7], [10.0])


def test_unmapped_cooling_switch(calibrated):
    grid = [30.0, 90.0]
    mapped = compare_n_levels(calibrated, [3], grid)[3]
    own = compare_n_levels(calibrated, [3], grid, map_cooling=False)[3]
    assert np.array_equal(mapped.tau_H_mapped, own.tau_H_mapped)
    assert np.array_equal(own.tau_C_mapped, [r.tau_C for r in own.sweep.records])


def test_level_study_entropy_and_power(level_study):
    for N in level_study.curves:
        assert level_study[N].max_entropy == pytest.approx(math.log(N), abs=0.25)
    powers = [level_study[N].max_power for N in sorted(level_study.curves)]
    assert all(a < b for a, b in zip(powers, powers[1:]))
    # frozen values on the 1 ms grid
    assert powers == pytest.approx([31.76, 46.82, 57.80, 66.69, 72.91, 73.83], abs=0.01)


def test_level_study_dominance_on_common_entropy(level_study):
    Ns = sorted(level_study.curves)
    for lo, hi in zip(Ns, Ns[1:]):
        a, b = level_study[lo], level_study[hi]
        top = min(a.S_B.max(), b.S_B.max())
        assert b.P[b.S_B <= top].max() >= a.P[a.S_B <= top].max() - 1e-9


def test_terminal_drop_is_stronger_with_reduced_final_rate(level_study, reduced_level_study):
    for floor in (0.5, 0.3, 0.2, 0.1):
        uniform = terminal_power_drop(level_study[7].S_B, level_study[7].P, floor)
        slowed = terminal_power_drop(reduced_level_study[7].S_B, reduced_level_study[7].P, floor)
        assert slowed > uniform


def test_terminal_drop_metric():
    S = np.array([0.0, 1.0, 2.0, 1.5, 1.0, 0.5])
    assert terminal_power_drop(S, [0, 1, 2, 3, 4, 5], 0.5) == 0.0
    assert terminal_power_drop(S, [0, 1, 2, 4, 3, 2], 0.5) == pytest.approx(0.5)
    # the branch is cut at the first point reaching the floor
    assert terminal_power_drop(S, [0, 1, 2, 4, 3, 2], 1.0) == pytest.approx(0.25)


def test_heat_map_type_is_plain_table():
    m = HeatTimeMap(np.array([0.0, 1.0]), np.array([0.0, 10.0]))
    assert m.time_for(0.5) == 5.0 and m.heat_for(5.0) == 0.5

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spin_otto.dynamics import Trajectory, basis_state
from spin_otto.errors import DomainError, FitError
from spin_otto.tempfit import (
    Regime,
    TemperatureFit,
    boltzmann_distribution,
    classify_regime,
    fit_dual_boltzmann,
    temperature_trace,
)
from spin_otto.thermo import zeeman_ladder

LADDER_B1 = zeeman_ladder(346.5, 7)
LADDER_B2 = zeeman_ladder(31.6, 7)


def fit(a, da):
    return TemperatureFit(a, 0.0, 0.0, da, 0.0, Regime.TRANSITION)


def test_boltzmann_limits():
    assert np.allclose(boltzmann_distribution(0.0, LADDER_B1), 1 / 7, atol=1e-15)
    assert boltzmann_distribution(math.inf, LADDER_B1).tolist() == basis_state(0, 7).tolist()
    assert boltzmann_distribution(-math.inf, LADDER_B1).tolist() == basis_state(6, 7).tolist()
    with pytest.raises(DomainError):
        boltzmann_distribution(math.nan, LADDER_B1)


def test_boltzmann_by_hand():
    # p_n ~ r**n with r = exp(-16.7928 * 31.6 / 500); Z is a geometric sum
    r = math.exp(-16.7928 * 31.6 / 500)
    expected = [r**n * (1 - r) / (1 - r**7) for n in range(7)]
    assert r == pytest.approx(0.346004, abs=1e-6)
    assert np.allclose(boltzmann_distribution(1 / 500, LADDER_B2), expected, rtol=1e-13)


def test_boltzmann_overflow_guard():
    p = boltzmann_distribution(-10.0, LADDER_B1)
    assert np.all(np.isfinite(p)) and p[6] == pytest.approx(1.0)


@pytest.mark.parametrize("beta", [1 / 300, 1 / 1000, 1 / 5000])
def test_positive_round_trip_on_b1(beta):
    f = fit_dual_boltzmann(boltzmann_distribution(beta, LADDER_B1), LADDER_B1)
    assert f.a >= 0.99
    assert f.beta_plus == pytest.approx(beta, rel=1e-3)
    assert f.regime is Regime.POSITIVE


@pytest.mark.parametrize("beta", [-1 / 300, -1 / 1000, -1 / 5000])
def test_negative_round_trip_on_b1(beta):
    f = fit_dual_boltzmann(boltzmann_distribution(beta, LADDER_B1), LADDER_B1)
    assert f.a <= 0.01
    assert f.beta_minus == pytest.approx(beta, rel=1e-3)
    assert f.regime is Regime.NEGATIVE


@pytest.mark.parametrize("T", np.geomspace(50.0, 5e4, 7))
@pytest.mark.parametrize("sign", [1, -1])
def test_round_trip_log_grid(T, sign):
    beta = sign / T
    f = fit_dual_boltzmann(boltzmann_distribution(beta, LADDER_B2), LADDER_B2)
    got = f.beta_plus if sign > 0 else f.beta_minus
    assert got == pytest.approx(beta, rel=1e-3)
    assert f.residual <= 1e-12


def test_uniform_is_unidentifiable():
    f = fit_dual_boltzmann(np.full(7, 1 / 7), LADDER_B2)
    assert f.residual == pytest.approx(0.0, abs=1e-20)
    assert abs(f.beta_plus) < 1e-9 and abs(f.beta_minus) < 1e-9
    assert f.delta_a >= 0.3
    assert f.regime is Regime.TRANSITION


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 0.8), st.floats(300.0, 5000.0), st.floats(300.0, 5000.0))
def test_mixture_symmetry(a, T_plus, T_minus):
    p = a * boltzmann_distribution(1 / T_plus, LADDER_B2) + (1 - a) * boltzmann_distribution(
        -1 / T_minus, LADDER_B2
    )
    f = fit_dual_boltzmann(p, LADDER_B2)
    g = fit_dual_boltzmann(p[::-1], LADDER_B2)
    assert g.a == pytest.approx(1 - f.a, abs=1e-4)
    assert g.beta_plus == pytest.approx(-f.beta_minus, rel=1e-3)
    assert g.beta_minus == pytest.approx(-f.beta_plus, rel=1e-3)


def test_fit_is_deterministic():
    p = np.array([0.3, 0.2, 0.15, 0.1, 0.1, 0.07, 0.08])
    assert fit_dual_boltzmann(p, LADDER_B1) == fit_dual_boltzmann(p, LADDER_B1)


def test_fit_rejects_invalid_input():
    with pytest.raises(DomainError):
        fit_dual_boltzmann([0.5, 0.6, 0, 0, 0, 0, 0], LADDER_B1)


def test_fit_error_carries_best_residual():
    err = FitError("nothing converged", 0.25)
    assert err.best_residual == 0.25 and err.category == "fit"


@pytest.mark.parametrize(
    "a, da, regime",
    [
        (0.98, 0.02, Regime.POSITIVE),
        (0.02, 0.02, Regime.NEGATIVE),
        (0.5, 0.4, Regime.TRANSITION),
        (0.9, 0.1, Regime.POSITIVE),
        (0.1, 0.1, Regime.NEGATIVE),
        (np.nextafter(0.9, 0), 0.1, Regime.TRANSITION),
        (0.9, np.nextafter(0.1, 1), Regime.TRANSITION),
        (np.nextafter(0.1, 1), 0.0, Regime.TRANSITION),
        (0.1, np.nextafter(0.1, 1), Regime.TRANSITION),
        (1.0, math.inf, Regime.TRANSITION),
    ],
)
def test_classify_thresholds(a, da, regime):
    assert classify_regime(fit(a, da)) is regime


def test_trace_endpoints():
    trace = temperature_trace(
        Trajectory(np.array([0.0, 1.0]), np.array([basis_state(0, 7), basis_state(6, 7)])),
        LADDER_B1,
    )
    assert trace[0].regime is Regime.POSITIVE and trace[0].beta_plus > 1e-3
    assert trace[1].regime is Regime.NEGATIVE and abs(trace[1].T_minus) < 300


def test_trace_level_mismatch():
    traj = Trajectory(np.array([0.0]), np.array([basis_state(0, 5)]))
    with pytest.raises(DomainError):
        temperature_trace(traj, LADDER_B1)


def test_calibrated_heating_regime_sequence(heating_temperature_trace):
    traj, fits = heating_temperature_trace
    runs = [fits[0].regime]
    for f in fits[1:]:
        if f.regime is not runs[-1]:
            runs.append(f.regime)
    assert runs == [Regime.POSITIVE, Regime.TRANSITION, Regime.NEGATIVE]
    # dominant component switches where the mean level passes 3, near 54-56 ms
    flip = next(t for t, f in zip(traj.times, fits) if f.a < 0.5)
    assert 53.0 <= flip <= 57.0


def test_calibrated_heating_mean_energy_rises(heating_temperature_trace):
    _, fits = heating_temperature_trace
    E = np.array([f.mean_energy(LADDER_B1) for f in fits])
    assert np.all(np.diff(E) >= -1e-6 * E.max())

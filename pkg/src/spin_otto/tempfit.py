"""Effective spin temperature from level populations.

Populations are fitted with a mixture ``a P(beta_+) + (1 - a) P(beta_-)`` of
two Boltzmann distributions on the Zeeman ladder, one with positive and one
with negative temperature. The fit works in inverse temperature so that the
passage through ``T = +-inf`` is the smooth point ``beta = 0``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import least_squares

from .dynamics import Trajectory, as_distribution
from .errors import DomainError, FitError
from .thermo import EnergyLadder

#: Start values for beta_+ in 1/nK; beta_- uses the negatives.
BETA_STARTS = (0.0, 1 / 5000, 1 / 1000, 1 / 300, 1 / 100)
A_STARTS = (0.05, 0.5, 0.95)

REGIME_A_HIGH = 0.9
REGIME_A_LOW = 0.1
REGIME_MAX_DELTA_A = 0.1

_SINGULAR_COND = 1e12
_DEAD_COLUMN = 1e-8


class Regime(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    TRANSITION = "transition"


@dataclass(frozen=True)
class TemperatureFit:
    a: float
    beta_plus: float
    beta_minus: float
    delta_a: float
    residual: float
    regime: Regime

    @property
    def T_plus(self):
        return 1.0 / self.beta_plus if self.beta_plus > 0 else math.inf

    @property
    def T_minus(self):
        return 1.0 / self.beta_minus if self.beta_minus < 0 else -math.inf

    def populations(self, ladder: EnergyLadder):
        return self.a * boltzmann_distribution(self.beta_plus, ladder) + (
            1 - self.a
        ) * boltzmann_distribution(self.beta_minus, ladder)

    def mean_energy(self, ladder: EnergyLadder):
        return float(self.populations(ladder) @ ladder.energies)


def _boltzmann_levels(x, N):
    """``exp(-x n) / Z`` for ``n = 0..N-1``, x the dimensionless level spacing."""
    e = -x * np.arange(N)
    e -= e.max()
    w = np.exp(e)
    return w / w.sum()


def boltzmann_distribution(beta, ladder: EnergyLadder):
    """Thermal populations ``exp(-beta E_n) / Z`` (beta in 1/nK, any sign)."""
    if math.isnan(beta):
        raise DomainError("beta is NaN")
    N = ladder.N
    if math.isinf(beta):
        p = np.zeros(N)
        p[0 if beta > 0 else -1] = 1.0
        return p
    e = -beta * np.asarray(ladder.energies)
    e -= e.max()
    w = np.exp(e)
    return w / w.sum()


def _model(theta, N):
    a, xp, xm = theta
    return a * _boltzmann_levels(xp, N) + (1 - a) * _boltzmann_levels(xm, N)


def _jacobian(theta, N):
    a, xp, xm = theta
    n = np.arange(N)
    Pp, Pm = _boltzmann_levels(xp, N), _boltzmann_levels(xm, N)
    dPp = -Pp * (n - Pp @ n)
    dPm = -Pm * (n - Pm @ n)
    return np.column_stack([Pp - Pm, a * dPp, (1 - a) * dPm])


def classify_regime(fit) -> Regime:
    a, da = fit.a, fit.delta_a
    if a >= REGIME_A_HIGH and da <= REGIME_MAX_DELTA_A:
        return Regime.POSITIVE
    if a <= REGIME_A_LOW and da <= REGIME_MAX_DELTA_A:
        return Regime.NEGATIVE
    return Regime.TRANSITION


def _delta_a(theta, jac, residual, N):
    """1-sigma error of ``a`` from the Gauss-Newton covariance.

    If ``a`` does not move the model at all (both components identical) it
    is not identifiable and the error is infinite. Inverse temperatures that
    no longer move the model are dropped; the box constraints are ignored,
    so a poor fit with ``a`` on a bound still reports a large error.
    """
    scale = np.linalg.norm(jac, axis=0)
    if scale[0] <= _DEAD_COLUMN:
        return math.inf
    free = [0] + [k for k in (1, 2) if scale[k] > _DEAD_COLUMN]
    J = jac[:, free] / scale[free]
    JTJ = J.T @ J
    if not np.all(np.isfinite(JTJ)) or np.linalg.cond(JTJ) > _SINGULAR_COND:
        return math.inf
    dof = max(N - len(free), 1)
    cov = np.linalg.inv(JTJ) * (residual / dof)
    return float(math.sqrt(max(cov[0, 0], 0.0)) / scale[0])


def fit_dual_boltzmann(p, ladder: EnergyLadder) -> TemperatureFit:
    """Least-squares dual-Boltzmann fit with a deterministic multi-start.

    Minimizes the unweighted squared deviation over ``a in [0, 1]``,
    ``beta_+ >= 0`` and ``beta_- <= 0``. Among converged starts the lowest
    residual wins; near-ties go to the smallest parameter vector.
    """
    p = as_distribution(p, ladder.N)
    N = ladder.N
    spacing = ladder.energies[1] - ladder.energies[0]
    lower, upper = [0.0, 0.0, -np.inf], [1.0, np.inf, 0.0]

    best, best_key = None, None
    seen_residual = math.inf
    for bp, bm, a0 in itertools.product(BETA_STARTS, BETA_STARTS, A_STARTS):
        x0 = np.array([a0, bp * spacing, -bm * spacing])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                sol = least_squares(
                    lambda th: _model(th, N) - p,
                    x0,
                    jac=lambda th: _jacobian(th, N),
                    bounds=(lower, upper),
                    method="dogbox",
                    xtol=1e-15,
                    ftol=1e-15,
                    gtol=1e-15,
                    max_nfev=400,
                )
        except (ValueError, FloatingPointError):
            continue
        residual = float(2 * sol.cost)
        seen_residual = min(seen_residual, residual)
        if not (sol.status > 0 or sol.status == 0 and residual < 1e-20):
            continue
        key = (residual, float(np.linalg.norm(sol.x)))
        if best is None or _better(key, best_key):
            best, best_key = sol, key

    if best is None:
        raise FitError("no start of the dual-Boltzmann fit converged", seen_residual)

    theta = np.array(best.x, dtype=float)
    theta[0] = min(max(theta[0], 0.0), 1.0)
    residual = best_key[0]
    delta_a = _delta_a(theta, _jacobian(theta, N), residual, N)
    a, xp, xm = theta
    fit = TemperatureFit(
        a=float(a),
        beta_plus=float(xp / spacing),
        beta_minus=float(xm / spacing),
        delta_a=delta_a,
        residual=residual,
        regime=Regime.TRANSITION,
    )
    return _with_regime(fit)


def _better(key, ref):
    res, norm = key
    ref_res, ref_norm = ref
    tie = 1e-30 + 1e-9 * ref_res
    if res < ref_res - tie:
        return True
    return abs(res - ref_res) <= tie and norm < ref_norm


def _with_regime(fit):
    return TemperatureFit(
        fit.a, fit.beta_plus, fit.beta_minus, fit.delta_a, fit.residual,
        classify_regime(fit),
    )


def temperature_trace(traj: Trajectory, ladder: EnergyLadder):
    """One fit per sampled state of ``traj``."""
    states = np.asarray(traj.states)
    if states.shape[1] != ladder.N:
        raise DomainError(
            f"trajectory has {states.shape[1]} levels, ladder has {ladder.N}"
        )
    return [fit_dual_boltzmann(p, ladder) for p in states]

"""Spin-exchange population dynamics of the N-level Zeeman ladder.

Levels are indexed by ``n = 0 .. N-1`` with ``n = 0`` the lowest-energy
state (``m_F = +3`` for the seven-level Cs manifold, ``n = 3 - m_F``).
A heating stroke moves population only upward (``n -> n+1``), a cooling
stroke only downward; the reverse processes are energetically forbidden and
carry exactly zero rate.

Units: time in ms, rates in 1/ms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import constants
from scipy import special, stats

from .errors import DomainError

#: Per-step tolerance on the probability sum.
NORM_TOL = 1e-9
#: Roundoff slack allowed below zero before a state is rejected.
NEG_SLACK = 1e-12

MAX_STEP_MS = 0.5
STEP_RATE_FRACTION = 0.02


class Direction(str, Enum):
    HEATING = "heating"
    COOLING = "cooling"


def level_to_mf(n, N=7):
    """Map a ladder index to the magnetic quantum number (``m_F = 3 - n`` for N=7)."""
    if not 0 <= n <= N - 1:
        raise DomainError(f"level index {n} outside [0, {N - 1}]")
    return (N - 1) // 2 - n


def mf_to_level(mf, N=7):
    n = (N - 1) // 2 - mf
    if not 0 <= n <= N - 1:
        raise DomainError(f"m_F = {mf} not in the {N}-level manifold")
    return n


def as_distribution(p, N=None):
    """Validate a population vector and return it as a clean float array.

    Entries down to ``-NEG_SLACK`` are accepted and clamped to zero.
    """
    arr = np.array(p, dtype=float).reshape(-1)
    if N is not None and arr.size != N:
        raise DomainError(f"distribution has {arr.size} levels, expected {N}")
    if arr.size < 2:
        raise DomainError("a distribution needs at least two levels")
    if not np.all(np.isfinite(arr)):
        raise DomainError("distribution contains non-finite entries")
    if arr.min() < -NEG_SLACK:
        raise DomainError(f"negative population {arr.min():.3e}")
    if abs(arr.sum() - 1.0) > NORM_TOL:
        raise DomainError(f"populations sum to {arr.sum():.12f}, not 1")
    return np.clip(arr, 0.0, None)


def basis_state(n, N):
    """Fully polarized distribution with all population in level ``n``."""
    if not 0 <= n < N:
        raise DomainError(f"level {n} outside [0, {N - 1}]")
    p = np.zeros(N)
    p[n] = 1.0
    return p


def mean_level(p):
    p = np.asarray(p, dtype=float)
    return float(p @ np.arange(p.shape[-1]))


@dataclass(frozen=True)
class RateProfile:
    """Nearest-neighbour spin-exchange rates for one stroke direction.

    For heating, ``rates[k]`` drives ``k -> k+1``; for cooling, ``rates[k]``
    drives ``k+1 -> k``. Either way there are ``N - 1`` entries.
    """

    direction: Direction
    rates: tuple

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        rates = tuple(float(r) for r in np.atleast_1d(self.rates))
        if len(rates) < 1:
            raise DomainError("a rate profile needs at least one rate")
        for k, r in enumerate(rates):
            if not (math.isfinite(r) and r > 0):
                raise DomainError(f"rate #{k} = {r} must be positive and finite")
        object.__setattr__(self, "rates", rates)

    @property
    def N(self):
        return len(self.rates) + 1

    @classmethod
    def uniform(cls, direction, rate, N):
        return cls(direction, (float(rate),) * (N - 1))

    def scaled(self, factor):
        return RateProfile(self.direction, tuple(r * factor for r in self.rates))

    def truncated(self, N):
        if not 2 <= N <= self.N:
            raise DomainError(f"cannot truncate a {self.N}-level profile to N={N}")
        return RateProfile(self.direction, self.rates[: N - 1])


@dataclass(frozen=True)
class RatePhysicalInputs:
    """Inputs of the kinetic rate model.

    density_overlap : integrated species overlap, 1/cm^3
    cross_section : spin-exchange cross-section, cm^2
    bath_kinetic_temperature : uK
    reduced_mass : atomic mass units
    """

    density_overlap: float
    cross_section: float
    bath_kinetic_temperature: float
    reduced_mass: float


def mean_relative_speed(temperature_uK, reduced_mass_amu):
    """Thermal mean relative speed ``sqrt(8 k_B T / (pi mu))`` in cm/s."""
    if temperature_uK <= 0 or reduced_mass_amu <= 0:
        raise DomainError("temperature and reduced mass must be positive")
    T = temperature_uK * 1e-6
    mu = reduced_mass_amu * constants.atomic_mass
    return math.sqrt(8.0 * constants.k * T / (math.pi * mu)) * 100.0


def rate_from_physical(inputs: RatePhysicalInputs) -> float:
    """Collision rate ``<n> sigma v_bar`` in 1/ms.

    A zero cross-section is allowed and yields a zero rate; every other
    input must be strictly positive.
    """
    n, sigma = inputs.density_overlap, inputs.cross_section
    for name, value in [
        ("density_overlap", n),
        ("bath_kinetic_temperature", inputs.bath_kinetic_temperature),
        ("reduced_mass", inputs.reduced_mass),
    ]:
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be positive, got {value}")
    if not (math.isfinite(sigma) and sigma >= 0):
        raise DomainError(f"cross_section must be non-negative, got {sigma}")
    v = mean_relative_speed(inputs.bath_kinetic_temperature, inputs.reduced_mass)
    return n * sigma * v * 1e-3


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RateGenerator:
    """Column-stochastic generator ``dp/dt = matrix @ p``."""

    direction: Direction
    rates: tuple
    matrix: np.ndarray

    @property
    def N(self):
        return self.matrix.shape[0]

    @property
    def exit_rates(self):
        """Total outflow rate of each level (zero for the absorbing end)."""
        return -np.diag(self.matrix)


def build_generator(profile: RateProfile, N: int) -> RateGenerator:
    if profile.N != N:
        raise DomainError(
            f"profile has {len(profile.rates)} rates; {N} levels need {N - 1}"
        )
    G = np.zeros((N, N))
    if profile.direction is Direction.HEATING:
        for n, r in enumerate(profile.rates):
            G[n, n] = -r
            G[n + 1, n] = r
    else:
        for k, r in enumerate(profile.rates):
            n = k + 1
            G[n, n] = -r
            G[n - 1, n] = r
    return RateGenerator(profile.direction, profile.rates, _readonly(G))


def default_step(gen: RateGenerator) -> float:
    return min(MAX_STEP_MS, STEP_RATE_FRACTION / max(gen.rates))


def rk4_propagator(matrix, h):
    """One classical RK4 step for the linear system ``p' = G p`` as a matrix.

    For a constant linear right-hand side the four stages collapse to the
    degree-4 Taylor polynomial of ``exp(h G)``.
    """
    A = h * np.asarray(matrix)
    A2 = A @ A
    A3 = A2 @ A
    return np.eye(A.shape[0]) + A + A2 / 2.0 + A3 / 6.0 + (A3 @ A) / 24.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    #: smallest entry seen before clamping, across all steps
    min_raw: float = 0.0
    max_norm_error: float = 0.0

    @property
    def start(self):
        return self.states[0]

    @property
    def end(self):
        return self.states[-1]

    @property
    def duration(self):
        return float(self.times[-1])

    def __len__(self):
        return len(self.times)


def _stepper(matrix, h):
    M = rk4_propagator(matrix, h)

    def step(p):
        q = M @ p
        lo = q.min()
        if lo < 0:
            q = np.where(q < 0, 0.0, q)
        s = q.sum()
        return q / s, lo, abs(s - 1.0)

    return step


def evolve(initial, gen: RateGenerator, duration, step=None) -> Trajectory:
    """Integrate the rate equation with fixed-step RK4.

    Samples are taken at every multiple of ``step`` below ``duration`` and at
    ``duration`` itself, reached by a final shortened step when needed.
    """
    p = as_distribution(initial, gen.N)
    if not (math.isfinite(duration) and duration >= 0):
        raise DomainError(f"duration must be >= 0, got {duration}")
    h = default_step(gen) if step is None else float(step)
    if not h > 0:
        raise DomainError(f"step must be positive, got {step}")

    n_full = int(math.floor(duration / h * (1 + 1e-12)))
    rest = duration - n_full * h
    if rest <= 1e-9 * h:
        rest = 0.0
    n_samples = n_full + 1 + (1 if rest > 0 else 0)
    times = np.empty(n_samples)
    states = np.empty((n_samples, gen.N))
    times[0], states[0] = 0.0, p

    min_raw, norm_err = float(p.min()), 0.0
    full = _stepper(gen.matrix, h)
    for k in range(1, n_full + 1):
        p, lo, err = full(p)
        min_raw, norm_err = min(min_raw, lo), max(norm_err, err)
        times[k], states[k] = k * h, p
    if n_full:
        times[n_full] = duration if rest == 0.0 else n_full * h
    if rest > 0:
        p, lo, err = _stepper(gen.matrix, rest)(p)
        min_raw, norm_err = min(min_raw, lo), max(norm_err, err)
        times[-1], states[-1] = duration, p
    return Trajectory(_readonly(times), _readonly(states), min_raw, norm_err)


def analytic_uniform_populations(rate, t, N):
    """Exact heating populations for equal rates, starting in level 0.

    The chain is a Poisson counting process stopped at ``N - 1``: lower
    levels hold Poisson weights, the top level collects the upper tail.
    """
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate}")
    if not t >= 0:
        raise DomainError(f"time must be non-negative, got {t}")
    if N < 2:
        raise DomainError("need at least two levels")
    x = rate * t
    p = np.empty(N)
    p[:-1] = stats.poisson.pmf(np.arange(N - 1), x)
    # P(Poisson(x) >= N-1) as a regularized incomplete gamma, no cancellation.
    p[-1] = special.gammainc(N - 1, x) if x > 0 else 0.0
    return p


def expected_collisions(traj: Trajectory, gen: RateGenerator) -> float:
    """Mean number of spin-exchange events along a trajectory.

    Integrates the instantaneous total transition flux with the trapezoidal
    rule over the trajectory samples.
    """
    states = np.asarray(traj.states)
    if states.ndim != 2 or states.shape[1] != gen.N:
        raise DomainError(
            f"trajectory has {states.shape[-1]} levels, generator has {gen.N}"
        )
    if len(traj.times) < 2:
        return 0.0
    flux = states @ gen.exit_rates
    return float(np.trapezoid(flux, traj.times))

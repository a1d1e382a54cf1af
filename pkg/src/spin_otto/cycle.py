"""Four-stroke Otto cycle of the quasi-spin engine.

A -> B  heating at B1 by upward spin-exchange collisions
B -> C  expansion ramp B1 -> B2, populations frozen
C -> D  cooling at B2 until the ground state is (almost) refilled
D -> A  compression ramp B2 -> B1, populations frozen

Every cycle starts from the exact ground state, so sweep points are
independent of each other.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from .dynamics import (
    Direction,
    RateProfile,
    Trajectory,
    _readonly,
    _stepper,
    as_distribution,
    basis_state,
    build_generator,
    default_step,
    evolve,
    expected_collisions,
)
from .errors import CalibrationError, ClosureError, DomainError
from .thermo import (
    B1_DEFAULT_MG,
    B2_DEFAULT_MG,
    cycle_power,
    heat_exchanged,
    shannon_entropy,
    shannon_entropy_trace,
    stroke_work,
    zeeman_ladder,
)

RAMP_TIME_DEFAULT_MS = 20.0
EPSILON_DEFAULT = 0.01
TARGET_PEAK_MS = 58.0
REDUCED_FINAL_FRACTION = 0.4
#: cooling horizon in units of the slowest cooling time constant
CLOSURE_HORIZON = 50.0


class StrokeKind(str, Enum):
    HEATING = "heating"
    EXPANSION = "expansion"
    COOLING = "cooling"
    COMPRESSION = "compression"


@dataclass(frozen=True)
class CycleConfig:
    heating: RateProfile
    cooling: RateProfile
    B1: float = B1_DEFAULT_MG
    B2: float = B2_DEFAULT_MG
    ramp_time: float = RAMP_TIME_DEFAULT_MS
    epsilon: float = EPSILON_DEFAULT
    #: integrator step in ms; ``None`` picks it from the fastest rate
    step: float | None = None

    def __post_init__(self):
        if self.heating.direction is not Direction.HEATING:
            raise DomainError("heating profile must have direction 'heating'")
        if self.cooling.direction is not Direction.COOLING:
            raise DomainError("cooling profile must have direction 'cooling'")
        if self.heating.N != self.cooling.N:
            raise DomainError(
                f"heating ({self.heating.N} levels) and cooling "
                f"({self.cooling.N} levels) profiles disagree"
            )
        for name in ("B1", "B2", "ramp_time", "epsilon"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.B2 > 0 and self.B1 > self.B2):
            raise DomainError(f"need B1 > B2 > 0, got B1={self.B1}, B2={self.B2}")
        if not (math.isfinite(self.ramp_time) and self.ramp_time >= 0):
            raise DomainError(f"ramp time must be >= 0, got {self.ramp_time}")
        if not 0 < self.epsilon < 0.1:
            raise DomainError(f"closure epsilon must lie in (0, 0.1), got {self.epsilon}")
        if self.step is not None:
            object.__setattr__(self, "step", float(self.step))
            if not self.step > 0:
                raise DomainError(f"step must be positive, got {self.step}")

    @property
    def N(self):
        return self.heating.N

    @functools.cached_property
    def heating_generator(self):
        return build_generator(self.heating, self.N)

    @functools.cached_property
    def cooling_generator(self):
        return build_generator(self.cooling, self.N)

    @property
    def heating_step(self):
        return self.step if self.step is not None else default_step(self.heating_generator)

    @property
    def cooling_step(self):
        return self.step if self.step is not None else default_step(self.cooling_generator)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def uniform_config(rate, N=7, cooling_rate=None, **kwargs) -> CycleConfig:
    cooling_rate = rate if cooling_rate is None else cooling_rate
    return CycleConfig(
        RateProfile.uniform(Direction.HEATING, rate, N),
        RateProfile.uniform(Direction.COOLING, cooling_rate, N),
        **kwargs,
    )


def reduced_final_profile(rate, N=7, fraction=REDUCED_FINAL_FRACTION):
    """Uniform heating rates except a slower last step into the top level."""
    rates = [rate] * (N - 1)
    rates[-1] = rate * fraction
    return RateProfile(Direction.HEATING, tuple(rates))


@dataclass(frozen=True, eq=False)
class StrokeRecord:
    kind: StrokeKind
    duration: float
    trajectory: Trajectory
    heat: float
    work: float
    entropy_trace: np.ndarray
    collisions: float = 0.0
    #: magnetic field (mG) during a heat stroke; ``None`` for ramps
    field: float | None = None

    @property
    def start(self):
        return self.trajectory.start

    @property
    def end(self):
        return self.trajectory.end


@dataclass(frozen=True, eq=False)
class CycleRecord:
    """Full accounting of one cycle.

    ``Q_C`` is negative (heat released) and ``W = Q_H - |Q_C|`` is the work
    output, so ``P = W / tau_cycle``. The signed ramp works are kept on the
    expansion and compression strokes.
    """

    strokes: tuple
    Q_H: float
    Q_C: float
    W: float
    P: float
    tau_H: float
    tau_C: float
    tau_cycle: float
    collisions_heating: float
    collisions_cooling: float
    S_B: float
    B1: float
    B2: float

    @property
    def heating(self):
        return self.strokes[0]

    @property
    def expansion(self):
        return self.strokes[1]

    @property
    def cooling(self):
        return self.strokes[2]

    @property
    def compression(self):
        return self.strokes[3]

    @property
    def collisions_total(self):
        return self.collisions_heating + self.collisions_cooling

    @property
    def W_expansion(self):
        return self.expansion.work

    @property
    def W_compression(self):
        return self.compression.work

    @property
    def efficiency(self):
        return self.W / self.Q_H if self.Q_H > 0 else 0.0

    @property
    def first_law_residual(self):
        """Energy left in the engine when the cycle is declared closed, nK."""
        return self.Q_H + self.Q_C + self.W_expansion + self.W_compression

    @property
    def closure_deficit(self):
        """Total-variation distance between the final state and the ground state."""
        return 1.0 - float(self.compression.end[0])


def _ramp(kind, p, duration, B_from, B_to):
    if duration > 0:
        traj = Trajectory(_readonly([0.0, duration]), _readonly([p, p]))
    else:
        traj = Trajectory(_readonly([0.0]), _readonly([p]))
    S = shannon_entropy(p)
    return StrokeRecord(
        kind, duration, traj, 0.0, stroke_work(p, B_from, B_to),
        _readonly([S] * len(traj)),
    )


def run_heating(config: CycleConfig, tau_H, initial=None) -> StrokeRecord:
    """Heating stroke at B1 for ``tau_H`` ms, by default from the ground state."""
    if initial is None:
        initial = basis_state(0, config.N)
    gen = config.heating_generator
    traj = evolve(initial, gen, tau_H, config.heating_step)
    ladder = zeeman_ladder(config.B1, config.N)
    return StrokeRecord(
        StrokeKind.HEATING,
        float(tau_H),
        traj,
        heat_exchanged(traj.start, traj.end, ladder),
        0.0,
        _readonly(shannon_entropy_trace(traj.states)),
        expected_collisions(traj, gen),
        config.B1,
    )


def solve_cooling_time(config: CycleConfig, p_C, horizon=None, tol=1e-7) -> float:
    """Shortest cooling time after which ``p_0 >= 1 - epsilon``.

    Steps forward on the integrator grid until the threshold is crossed,
    then bisects inside the last step with a shortened RK4 step. Raises
    ``ClosureError`` past ``horizon`` (default 50 slowest time constants).
    """
    p = as_distribution(p_C, config.N)
    target = 1.0 - config.epsilon
    if p[0] >= target:
        return 0.0
    gen = config.cooling_generator
    h = config.cooling_step
    if horizon is None:
        horizon = CLOSURE_HORIZON / min(config.cooling.rates)
    step = _stepper(gen.matrix, h)

    k = 0
    while True:
        q = step(p)[0]
        if q[0] >= target:
            break
        k += 1
        if k * h > horizon:
            raise ClosureError(
                f"ground state reached only {q[0]:.6f} < {target} within {horizon:g} ms"
            )
        p = q

    lo, hi = 0.0, h
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _stepper(gen.matrix, mid)(p)[0][0] >= target:
            hi = mid
        else:
            lo = mid
    return k * h + hi


def run_cooling(config: CycleConfig, p_C) -> StrokeRecord:
    tau_C = solve_cooling_time(config, p_C)
    gen = config.cooling_generator
    traj = evolve(p_C, gen, tau_C, config.cooling_step)
    ladder = zeeman_ladder(config.B2, config.N)
    return StrokeRecord(
        StrokeKind.COOLING,
        tau_C,
        traj,
        heat_exchanged(traj.start, traj.end, ladder),
        0.0,
        _readonly(shannon_entropy_trace(traj.states)),
        expected_collisions(traj, gen),
        config.B2,
    )


def run_cycle(config: CycleConfig, tau_H) -> CycleRecord:
    heating = run_heating(config, tau_H)
    expansion = _ramp(StrokeKind.EXPANSION, heating.end, config.ramp_time, config.B1, config.B2)
    cooling = run_cooling(config, expansion.end)
    compression = _ramp(
        StrokeKind.COMPRESSION, cooling.end, config.ramp_time, config.B2, config.B1
    )
    Q_H, Q_C = heating.heat, cooling.heat
    tau_cycle = heating.duration + cooling.duration + 2 * config.ramp_time
    W = Q_H - abs(Q_C)
    P = cycle_power(Q_H, Q_C, tau_cycle) if tau_cycle > 0 else 0.0
    return CycleRecord(
        strokes=(heating, expansion, cooling, compression),
        Q_H=Q_H,
        Q_C=Q_C,
        W=W,
        P=P,
        tau_H=heating.duration,
        tau_C=cooling.duration,
        tau_cycle=tau_cycle,
        collisions_heating=heating.collisions,
        collisions_cooling=cooling.collisions,
        S_B=shannon_entropy(heating.end),
        B1=config.B1,
        B2=config.B2,
    )


@dataclass(frozen=True, eq=False)
class SweepResult:
    records: tuple

    @property
    def tau_H(self):
        return np.array([r.tau_H for r in self.records])

    @property
    def S_B(self):
        return np.array([r.S_B for r in self.records])

    @property
    def P(self):
        return np.array([r.P for r in self.records])

    @property
    def curve(self):
        """``(S_B, P)`` pairs in heating-time order."""
        return np.column_stack([self.S_B, self.P])

    @property
    def index_max_power(self):
        return int(np.argmax(self.P))

    @property
    def index_max_entropy(self):
        return int(np.argmax(self.S_B))

    @property
    def power_boost(self):
        """Relative gain of the best power over the power at maximum entropy."""
        return self.P[self.index_max_power] / self.P[self.index_max_entropy] - 1.0

    @property
    def entropy_ratio_at_max_power(self):
        return self.S_B[self.index_max_power] / self.S_B.max()

    def regimes(self):
        """Label each point 'positive' up to the entropy peak, 'negative' after."""
        peak = self.index_max_entropy
        return ["positive" if i <= peak else "negative" for i in range(len(self.records))]


def _check_grid(grid):
    g = np.asarray(grid, dtype=float).reshape(-1)
    if g.size == 0:
        raise DomainError("heating-time grid is empty")
    if np.any(~np.isfinite(g)) or g[0] < 0 or np.any(np.diff(g) <= 0):
        raise DomainError("heating-time grid must be non-negative and strictly increasing")
    return g


def sweep_heating_time(config: CycleConfig, grid, executor=None) -> SweepResult:
    """One cycle per heating time in ``grid``; results keep grid order.

    ``executor`` may be any ``concurrent.futures`` executor.
    """
    g = _check_grid(grid)
    run = functools.partial(run_cycle, config)
    records = executor.map(run, g) if executor is not None else map(run, g)
    return SweepResult(tuple(records))


def heating_entropy_peak(config: CycleConfig, horizon=None):
    """Time (ms) and value of the entropy maximum along the heating stroke.

    The sampled maximum is refined with a three-point parabola.
    """
    if horizon is None:
        horizon = 2.0 * config.N / min(config.heating.rates)
    stroke = run_heating(config, horizon)
    t, S = stroke.trajectory.times, stroke.entropy_trace
    i = int(np.argmax(S))
    if i == 0 or i == len(S) - 1:
        return float(t[i]), float(S[i])
    (t0, t1, t2), (s0, s1, s2) = t[i - 1 : i + 2], S[i - 1 : i + 2]
    coeffs = np.polyfit([t0 - t1, 0.0, t2 - t1], [s0, s1, s2], 2)
    if coeffs[0] >= 0:
        return float(t1), float(s1)
    dt = -coeffs[1] / (2 * coeffs[0])
    return float(t1 + dt), float(np.polyval(coeffs, dt))


def calibrate_uniform_rate(config_template: CycleConfig, target_peak=TARGET_PEAK_MS):
    """Uniform rate that puts the heating-entropy maximum at ``target_peak`` ms."""
    if not (math.isfinite(target_peak) and target_peak > 0):
        raise DomainError(f"target peak must be positive, got {target_peak}")
    N = config_template.N

    def peak_offset(rate):
        trial = config_template.replace(
            heating=RateProfile.uniform(Direction.HEATING, rate, N)
        )
        return heating_entropy_peak(trial)[0] - target_peak

    lo, hi = 0.05 / target_peak, 20.0 / target_peak
    f_lo, f_hi = peak_offset(lo), peak_offset(hi)
    if not (f_lo > 0 > f_hi):
        raise CalibrationError(
            f"entropy peak not bracketed for rates in [{lo:.3g}, {hi:.3g}] /ms"
        )
    return brentq(peak_offset, lo, hi, xtol=1e-12, rtol=1e-12)


@functools.lru_cache(maxsize=None)
def calibrated_rate(N=7, target_peak=TARGET_PEAK_MS):
    """Cached calibrated uniform rate for an ``N``-level chain."""
    template = uniform_config(1.0, N)
    return calibrate_uniform_rate(template, target_peak)


def default_config(preset="uniform", **kwargs) -> CycleConfig:
    """Calibrated seven-level configuration.

    ``preset='reduced_final'`` slows the last heating step to 40 % of the
    calibrated rate; cooling stays uniform.
    """
    N = kwargs.pop("N", 7)
    rate = calibrated_rate(N)
    base = uniform_config(rate, N, **kwargs)
    if preset == "uniform":
        return base
    if preset == "reduced_final":
        return base.replace(heating=reduced_final_profile(rate, N))
    raise DomainError(f"unknown rate preset '{preset}'")


def cycle_entropy_trace(record: CycleRecord):
    """Entropy (k_B) against time (ms) over all four strokes of a cycle."""
    times, values, t0 = [], [], 0.0
    for k, stroke in enumerate(record.strokes):
        t = stroke.trajectory.times[int(k > 0):] + t0
        times.append(t)
        values.append(stroke.entropy_trace[int(k > 0):])
        t0 += stroke.duration
    return np.concatenate(times), np.concatenate(values)


def count_entropy_peaks(S, prominence=1e-3):
    """Number of interior entropy maxima standing out by at least ``prominence``.

    A plateau counts once. The ends of the trace are padded with zero so a
    maximum sitting on a stroke boundary still counts.
    """
    S = np.concatenate([[0.0], np.asarray(S, dtype=float), [0.0]])
    peaks, _ = find_peaks(S, prominence=prominence)
    return int(peaks.size)

"""Engines with fewer levels, cut out of the seven-level rate system.

A truncated engine keeps the lowest ``N`` levels and the exact same
nearest-neighbour rates. To compare engines at equal heating speed, each
truncated cycle is charged the cycle time the full engine needs to exchange
the same heat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cycle import CycleConfig, StrokeRecord, SweepResult, run_heating, sweep_heating_time
from .errors import DomainError
from .thermo import LAMBDA_NK_PER_MG

MAX_LEVELS = 7
#: heating horizon of the reference map, in slowest-rate time constants
MAP_HORIZON = 40.0


@dataclass(frozen=True)
class TruncatedModel:
    N: int
    config: CycleConfig


def truncate(reference: CycleConfig, N) -> TruncatedModel:
    if not 2 <= N <= min(reference.N, MAX_LEVELS):
        raise DomainError(f"N={N} outside [2, {min(reference.N, MAX_LEVELS)}]")
    if N == reference.N:
        return TruncatedModel(N, reference)
    config = reference.replace(
        heating=reference.heating.truncated(N),
        cooling=reference.cooling.truncated(N),
    )
    return TruncatedModel(N, config)


@dataclass(frozen=True, eq=False)
class HeatTimeMap:
    """Monotone table from exchanged heat (nK) to elapsed stroke time (ms)."""

    heat: np.ndarray
    time: np.ndarray

    @property
    def max_heat(self):
        return float(self.heat[-1])

    def time_for(self, Q):
        Q = float(Q)
        top = self.max_heat
        if Q < 0 or Q > top * (1 + 1e-9) + 1e-9:
            raise DomainError(f"heat {Q:g} nK outside the mapped range [0, {top:g}]")
        return float(np.interp(min(Q, top), self.heat, self.time))

    def heat_for(self, t):
        return float(np.interp(t, self.time, self.heat))


def build_heat_time_map(reference: StrokeRecord) -> HeatTimeMap:
    """Invert the cumulative heat of a heat stroke into ``t(Q)``.

    Cooling strokes are mapped by the magnitude of the released heat. Samples
    where the heat has stopped growing (saturation) are dropped so the table
    stays strictly increasing.
    """
    if reference.field is None:
        raise DomainError("heat-time maps need a heating or cooling stroke")
    traj = reference.trajectory
    levels = np.asarray(traj.states) @ np.arange(traj.states.shape[1])
    cumulative = np.abs(LAMBDA_NK_PER_MG * reference.field * (levels - levels[0]))
    if np.any(np.diff(cumulative) < -1e-9 * max(cumulative[-1], 1.0)):
        raise AssertionError("cumulative heat of a unidirectional stroke decreased")
    keep = [0]
    for k in range(1, len(cumulative)):
        if cumulative[k] > cumulative[keep[-1]]:
            keep.append(k)
    heat = np.asarray(cumulative[keep], dtype=float)
    time = np.asarray(traj.times[keep], dtype=float)
    heat.setflags(write=False)
    time.setflags(write=False)
    return HeatTimeMap(heat, time)


@dataclass(frozen=True, eq=False)
class LevelCurve:
    """Power and entropy of one truncated engine along the heating sweep.

    ``tau_H`` is the truncated engine's own heating time; the mapped times
    are those of the full engine at equal exchanged heat.
    """

    N: int
    sweep: SweepResult
    tau_H: np.ndarray
    tau_H_mapped: np.ndarray
    tau_C_mapped: np.ndarray
    tau_cycle: np.ndarray
    S_B: np.ndarray
    Q_H: np.ndarray
    W: np.ndarray
    P: np.ndarray

    @property
    def max_power(self):
        return float(self.P.max())

    @property
    def max_entropy(self):
        return float(self.S_B.max())


@dataclass(frozen=True, eq=False)
class LevelComparison:
    reference: CycleConfig
    heat_map: HeatTimeMap
    curves: dict

    def __getitem__(self, N):
        return self.curves[N]


def _identity_curve(N, sweep):
    return LevelCurve(
        N, sweep, sweep.tau_H, sweep.tau_H,
        np.array([r.tau_C for r in sweep.records]),
        np.array([r.tau_cycle for r in sweep.records]),
        sweep.S_B,
        np.array([r.Q_H for r in sweep.records]),
        np.array([r.W for r in sweep.records]),
        sweep.P,
    )


def _cooling_table(sweep):
    """(Q_H, tau_C) of the non-idle reference cycles, increasing in Q_H."""
    Q = np.array([r.Q_H for r in sweep.records])
    tC = np.array([r.tau_C for r in sweep.records])
    mask = Q > 0
    Q, tC = Q[mask], tC[mask]
    order = np.argsort(Q, kind="stable")
    return Q[order], tC[order]


def compare_n_levels(reference: CycleConfig, Ns, grid, map_cooling=True) -> LevelComparison:
    """Sweep every truncated engine and put them on the full engine's clock.

    With ``map_cooling`` (default) the whole cycle time is borrowed from the
    full-engine cycle with the same ``Q_H``; otherwise only the heating time
    is mapped and the truncated engine keeps its own cooling time.
    """
    Ns = sorted(set(int(n) for n in Ns))
    if not Ns:
        raise DomainError("no level counts given")
    for n in Ns:
        if not 2 <= n <= min(reference.N, MAX_LEVELS):
            raise DomainError(f"N={n} outside [2, {min(reference.N, MAX_LEVELS)}]")

    horizon = MAP_HORIZON / min(reference.heating.rates)
    heat_map = build_heat_time_map(run_heating(reference, horizon))
    ref_sweep = sweep_heating_time(reference, grid)
    Q_ref, tC_ref = _cooling_table(ref_sweep)
    ramps = 2 * reference.ramp_time

    curves = {}
    for n in Ns:
        if n == reference.N:
            curves[n] = _identity_curve(n, ref_sweep)
            continue
        sweep = sweep_heating_time(truncate(reference, n).config, grid)
        tH_map, tC_map, tcyc, P = [], [], [], []
        for r in sweep.records:
            if r.Q_H <= 0:
                tH, tC = 0.0, 0.0
            else:
                tH = heat_map.time_for(r.Q_H)
                tC = float(np.interp(r.Q_H, Q_ref, tC_ref)) if map_cooling else r.tau_C
            total = tH + tC + ramps
            tH_map.append(tH)
            tC_map.append(tC)
            tcyc.append(total)
            P.append(r.W / total if total > 0 else 0.0)
        curves[n] = LevelCurve(
            n, sweep, sweep.tau_H, np.array(tH_map), np.array(tC_map), np.array(tcyc),
            sweep.S_B,
            np.array([r.Q_H for r in sweep.records]),
            np.array([r.W for r in sweep.records]),
            np.array(P),
        )
    return LevelComparison(reference, heat_map, curves)


def terminal_power_drop(S_B, P, entropy_floor):
    """Power lost at the low-entropy end of a power-vs-entropy curve.

    Follows the branch after the entropy maximum and returns
    ``1 - P(end) / max P(branch)``, where the end is the first point whose
    entropy falls to ``entropy_floor`` (or the last point if it never does).
    Zero means the power still rises all the way into the polarized end.
    """
    S_B, P = np.asarray(S_B, dtype=float), np.asarray(P, dtype=float)
    peak = int(np.argmax(S_B))
    below = np.nonzero(S_B[peak:] <= entropy_floor)[0]
    end = peak + (int(below[0]) if below.size else len(S_B) - 1 - peak)
    branch = P[peak : end + 1]
    return float(1.0 - branch[-1] / branch.max())

"""Static SVG figures for cycles, sweeps, level studies and temperature fits.

Figures are built on a bare ``matplotlib.figure.Figure`` (no pyplot state)
and saved with a fixed hash salt and no date, so the same input always gives
the same bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .cycle import CycleRecord, SweepResult, cycle_entropy_trace
from .errors import DomainError
from .levels import LevelComparison
from .tempfit import Regime

KINDS = ("entropy_vs_time", "power_vs_entropy", "n_level_comparison", "temperature_trace")

POSITIVE_COLOR = "#d62728"
NEGATIVE_COLOR = "#1f77b4"
TRANSITION_COLOR = "#bbbbbb"


def _figure():
    fig = Figure(figsize=(6.0, 4.2))
    return fig, fig.add_subplot()


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "spin-otto", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _entropy_vs_time(ax, records):
    if isinstance(records, CycleRecord):
        records = [records]
    if not records:
        raise DomainError("nothing to plot")
    series = []
    for r in records:
        t, S = cycle_entropy_trace(r)
        label = f"tau_H = {r.tau_H:g} ms"
        style = {"marker": "o"} if len(t) == 1 else {}
        ax.plot(t, S, label=label, **style)
        ax.axvline(r.tau_H, color="0.6", lw=0.6, ls=":")
        series.append(label)
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("entropy S ($k_B$)")
    ax.legend(frameon=False)
    return {"series": series, "points": sum(len(cycle_entropy_trace(r)[0]) for r in records)}


def _power_vs_entropy(ax, sweep: SweepResult):
    S, P = sweep.S_B, sweep.P
    if S.size == 0:
        raise DomainError("nothing to plot")
    regimes = sweep.regimes()
    peak = sweep.index_max_entropy
    pos = slice(0, peak + 1)
    neg = slice(peak, len(S))
    ax.fill_between(S[pos], 0, P[pos], color=POSITIVE_COLOR, alpha=0.25, lw=0,
                    gid="positive-region", label="positive temperature")
    if len(S) > peak + 1:
        ax.fill_between(S[neg], 0, P[neg], color=NEGATIVE_COLOR, alpha=0.25, lw=0,
                        gid="negative-region", label="negative temperature")
    ax.plot(S, P, color="k", lw=1.2, marker="o" if len(S) == 1 else None)
    i = sweep.index_max_power
    ax.plot([S[i]], [P[i]], ls="none", marker="*", ms=12, color="k", gid="max-power-marker",
            label=f"max P = {P[i]:.3g} nK/ms")
    ax.set_xlabel("heating-stroke entropy $S_B$ ($k_B$)")
    ax.set_ylabel("power P (nK/ms)")
    ax.legend(frameon=False, loc="upper left")
    return {"series": ["P(S_B)"], "points": int(S.size), "max_power_regime": regimes[i]}


def _n_level_comparison(ax, cmp: LevelComparison):
    if not cmp.curves:
        raise DomainError("nothing to plot")
    series, points = [], 0
    for N in sorted(cmp.curves):
        c = cmp.curves[N]
        if c.S_B.size == 0:
            raise DomainError(f"empty curve for N={N}")
        label = f"N = {N}"
        ax.plot(c.S_B, c.P, label=label, marker="o" if c.S_B.size == 1 else None,
                gid=f"levels-{N}")
        series.append(label)
        points += int(c.S_B.size)
    ax.set_xlabel("heating-stroke entropy $S_B$ ($k_B$)")
    ax.set_ylabel("power P (nK/ms)")
    ax.legend(frameon=False)
    return {"series": series, "points": points}


def _regime_spans(ax, times, regimes):
    colors = {Regime.POSITIVE: POSITIVE_COLOR, Regime.NEGATIVE: NEGATIVE_COLOR,
              Regime.TRANSITION: TRANSITION_COLOR}
    times = np.asarray(times, dtype=float)
    edges = np.concatenate([[times[0]], 0.5 * (times[1:] + times[:-1]), [times[-1]]])
    start, seen = 0, {}
    for k in range(1, len(regimes) + 1):
        if k == len(regimes) or regimes[k] != regimes[start]:
            reg = Regime(regimes[start])
            seen[reg] = seen.get(reg, 0) + 1
            gid = f"{reg.value}-region" + (f"-{seen[reg]}" if seen[reg] > 1 else "")
            ax.axvspan(edges[start], edges[k], color=colors[reg], alpha=0.15, lw=0, gid=gid)
            start = k


def _temperature_trace(ax, trace):
    times, fits = trace
    times = np.asarray(times, dtype=float)
    if times.size == 0 or len(fits) != times.size:
        raise DomainError("temperature trace needs one fit per time")
    regimes = [f.regime for f in fits]
    _regime_spans(ax, times, regimes)
    # the dominant component's temperature; +-inf (beta = 0) is left as a gap
    T = np.array([f.T_plus if f.a >= 0.5 else f.T_minus for f in fits])
    T = np.where(np.isfinite(T), T, np.nan)
    ax.plot(times, T, color="k", marker="o" if times.size == 1 else ".", ms=3)
    ax.set_yscale("symlog", linthresh=100.0)
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("effective spin temperature (nK)")
    return {"series": ["T_eff"], "points": int(times.size),
            "regimes": [r.value for r in regimes]}


def emit_plot(curve, kind, path):
    """Render ``curve`` as an SVG file and return a summary dict.

    ``curve`` depends on ``kind``: a ``CycleRecord`` or list of them for
    ``entropy_vs_time``, a ``SweepResult`` for ``power_vs_entropy``, a
    ``LevelComparison`` for ``n_level_comparison`` and ``(times, fits)`` for
    ``temperature_trace``.
    """
    draw = {
        "entropy_vs_time": _entropy_vs_time,
        "power_vs_entropy": _power_vs_entropy,
        "n_level_comparison": _n_level_comparison,
        "temperature_trace": _temperature_trace,
    }.get(kind)
    if draw is None:
        raise DomainError(f"unknown plot kind {kind!r} (allowed: {', '.join(KINDS)})")
    fig, ax = _figure()
    summary = draw(ax, curve)
    fig.tight_layout()
    summary["path"] = _save(fig, path)
    summary["kind"] = kind
    return summary

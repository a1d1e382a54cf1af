"""Configuration files and tabular output.

Configs are flat YAML mappings; every key is optional and unknown keys are
rejected. Tables are written as CSV or JSON with 9 significant digits so
repeated runs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .cycle import (
    CycleConfig,
    CycleRecord,
    SweepResult,
    TARGET_PEAK_MS,
    calibrated_rate,
    reduced_final_profile,
)
from .dynamics import Direction, RateProfile, Trajectory
from .errors import ConfigError, SpinOttoError
from .levels import LevelComparison
from .thermo import B1_DEFAULT_MG, B2_DEFAULT_MG, LAMBDA_NK_PER_MG, shannon_entropy_trace

DEFAULTS = {
    "B1_mG": B1_DEFAULT_MG,
    "B2_mG": B2_DEFAULT_MG,
    "ramp_time_ms": 20.0,
    "levels": 7,
    "epsilon": 0.01,
    "step_ms": None,
    "rate_preset": "uniform",
    "target_peak_ms": TARGET_PEAK_MS,
    "heating_rates_per_ms": None,
    "cooling_rates_per_ms": None,
    "sweep_start_ms": 0.0,
    "sweep_stop_ms": 400.0,
    "sweep_step_ms": 1.0,
    "level_counts": [2, 3, 4, 5, 6, 7],
    "map_cooling": True,
}
PRESETS = ("uniform", "reduced_final")

TRAJECTORY_COLUMNS_TAIL = ["S_kB", "Q_cum_nK"]
SWEEP_COLUMNS = [
    "tau_H_ms", "tau_C_ms", "tau_cycle_ms", "S_B_kB", "Q_H_nK", "Q_C_nK",
    "W_nK", "P_nK_per_ms", "collisions_total", "efficiency",
]
LEVEL_COLUMNS = [
    "N", "tau_H_ms", "tau_H_mapped_ms", "tau_C_mapped_ms", "tau_cycle_ms",
    "S_B_kB", "Q_H_nK", "W_nK", "P_nK_per_ms",
]
FIT_COLUMNS = [
    "t_ms", "a", "delta_a", "beta_plus_per_nK", "beta_minus_per_nK",
    "T_plus_nK", "T_minus_nK", "residual", "regime",
]


@dataclass(frozen=True)
class Manifest:
    """A parsed config file: the cycle plus sweep and study settings."""

    config: CycleConfig
    grid: np.ndarray = field(compare=False)
    level_counts: tuple = (2, 3, 4, 5, 6, 7)
    map_cooling: bool = True
    target_peak_ms: float = TARGET_PEAK_MS
    rate_preset: str = "uniform"


def _line_map(text):
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"cannot parse config: {exc}",
                          line=mark.line + 1 if mark else None) from exc
    if root is None:
        return {}
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError("config must be a flat key/value mapping",
                          line=root.start_mark.line + 1)
    return {k.value: k.start_mark.line + 1 for k, _ in root.value}


def _number(doc, key, lines, *, positive=False, nonneg=False, integer=False):
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key, lines.get(key))
    if integer and not float(value).is_integer():
        raise ConfigError(f"expected an integer, got {value!r}", key, lines.get(key))
    value = int(value) if integer else float(value)
    if not math.isfinite(value):
        raise ConfigError("value must be finite", key, lines.get(key))
    if positive and not value > 0:
        raise ConfigError(f"must be positive, got {value}", key, lines.get(key))
    if nonneg and value < 0:
        raise ConfigError(f"must be non-negative, got {value}", key, lines.get(key))
    return value


def _rates(doc, key, lines, N):
    value = doc[key]
    if value is None:
        return None
    items = value if isinstance(value, list) else [value]
    if isinstance(value, list) and len(items) != N - 1:
        raise ConfigError(f"{N} levels need {N - 1} rates, got {len(items)}",
                          key, lines.get(key))
    out = []
    for r in items:
        if isinstance(r, bool) or not isinstance(r, (int, float)) or not (
            math.isfinite(r) and r > 0
        ):
            raise ConfigError(f"rates must be positive numbers, got {r!r}",
                              key, lines.get(key))
        out.append(float(r))
    return tuple(out) if isinstance(value, list) else (out[0],) * (N - 1)


def manifest_from_mapping(raw, lines=None) -> Manifest:
    lines = lines or {}
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a flat key/value mapping")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        key = unknown[0]
        raise ConfigError(f"unknown key (allowed: {', '.join(DEFAULTS)})",
                          key, lines.get(key))
    doc = {**DEFAULTS, **raw}

    N = _number(doc, "levels", lines, integer=True)
    if not 2 <= N <= 7:
        raise ConfigError(f"levels must lie in [2, 7], got {N}", "levels", lines.get("levels"))
    B1 = _number(doc, "B1_mG", lines, positive=True)
    B2 = _number(doc, "B2_mG", lines, positive=True)
    if not B1 > B2:
        key = "B2_mG" if "B2_mG" in raw else "B1_mG"
        raise ConfigError(f"need B1_mG > B2_mG, got {B1} <= {B2}", key, lines.get(key))
    ramp = _number(doc, "ramp_time_ms", lines, nonneg=True)
    eps = _number(doc, "epsilon", lines, positive=True)
    if not eps < 0.1:
        raise ConfigError(f"epsilon must be below 0.1, got {eps}", "epsilon", lines.get("epsilon"))
    step = None if doc["step_ms"] is None else _number(doc, "step_ms", lines, positive=True)
    target = _number(doc, "target_peak_ms", lines, positive=True)
    preset = doc["rate_preset"]
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r} (allowed: {', '.join(PRESETS)})",
                          "rate_preset", lines.get("rate_preset"))

    heating = _rates(doc, "heating_rates_per_ms", lines, N)
    cooling = _rates(doc, "cooling_rates_per_ms", lines, N)
    if heating is None or cooling is None:
        base = calibrated_rate(7, target)
        if heating is None:
            heating = (
                reduced_final_profile(base, N).rates if preset == "reduced_final"
                else (base,) * (N - 1)
            )
        if cooling is None:
            cooling = (base,) * (N - 1)

    config = CycleConfig(
        RateProfile(Direction.HEATING, heating),
        RateProfile(Direction.COOLING, cooling),
        B1=B1, B2=B2, ramp_time=ramp, epsilon=eps, step=step,
    )

    start = _number(doc, "sweep_start_ms", lines, nonneg=True)
    stop = _number(doc, "sweep_stop_ms", lines, nonneg=True)
    dt = _number(doc, "sweep_step_ms", lines, positive=True)
    if stop < start:
        raise ConfigError("sweep_stop_ms must not precede sweep_start_ms",
                          "sweep_stop_ms", lines.get("sweep_stop_ms"))
    count = int(math.floor((stop - start) / dt * (1 + 1e-12))) + 1
    grid = start + dt * np.arange(count)

    counts = raw.get("level_counts", list(range(2, N + 1)))
    if not isinstance(counts, list) or not counts or not all(
        isinstance(n, int) and not isinstance(n, bool) and 2 <= n <= N for n in counts
    ):
        raise ConfigError(f"level_counts must be a list of integers in [2, {N}]",
                          "level_counts", lines.get("level_counts"))
    if not isinstance(doc["map_cooling"], bool):
        raise ConfigError("map_cooling must be true or false", "map_cooling",
                          lines.get("map_cooling"))
    return Manifest(config, grid, tuple(sorted(set(counts))), doc["map_cooling"],
                    target, preset)


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    lines = _line_map(text)
    return manifest_from_mapping(yaml.safe_load(text), lines)


def parse_config(path) -> CycleConfig:
    return load_manifest(path).config


def serialize_config(config: CycleConfig) -> str:
    """Flat YAML text that parses back to an equal ``CycleConfig``."""
    doc = {
        "B1_mG": config.B1,
        "B2_mG": config.B2,
        "ramp_time_ms": config.ramp_time,
        "levels": config.N,
        "epsilon": config.epsilon,
        "step_ms": config.step,
        "heating_rates_per_ms": list(config.heating.rates),
        "cooling_rates_per_ms": list(config.cooling.rates),
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v + 0.0:.9g}"


def _json_value(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return int(value)
    v = float(value)
    if not math.isfinite(v):
        return None
    return float(f"{v + 0.0:.9g}")


def trajectory_columns(N):
    return ["t_ms"] + [f"p{n}" for n in range(N)] + TRAJECTORY_COLUMNS_TAIL


def trajectory_rows(traj: Trajectory, field_mG):
    """Rows of a single-field trajectory with cumulative heat since its start."""
    states = np.asarray(traj.states)
    levels = states @ np.arange(states.shape[1])
    Q = LAMBDA_NK_PER_MG * field_mG * (levels - levels[0])
    S = shannon_entropy_trace(states)
    return [[t, *p, s, q] for t, p, s, q in zip(traj.times, states, S, Q)]


def cycle_trajectory_rows(record: CycleRecord):
    """The four strokes stitched on one clock; heat accumulates over the cycle."""
    rows, t0, q0 = [], 0.0, 0.0
    for k, stroke in enumerate(record.strokes):
        traj = stroke.trajectory
        states = np.asarray(traj.states)
        S = shannon_entropy_trace(states)
        if stroke.field is not None:
            levels = states @ np.arange(states.shape[1])
            Q = q0 + LAMBDA_NK_PER_MG * stroke.field * (levels - levels[0])
        else:
            Q = np.full(len(traj), q0)
        for i in range(len(traj)):
            if k > 0 and i == 0:
                continue
            rows.append([t0 + traj.times[i], *states[i], S[i], Q[i]])
        t0 += stroke.duration
        q0 = float(Q[-1])
    return rows


def sweep_row(r: CycleRecord):
    return [r.tau_H, r.tau_C, r.tau_cycle, r.S_B, r.Q_H, r.Q_C, r.W, r.P,
            r.collisions_total, r.efficiency]


def level_rows(cmp: LevelComparison):
    rows = []
    for N in sorted(cmp.curves):
        c = cmp.curves[N]
        for i in range(len(c.tau_H)):
            rows.append([N, c.tau_H[i], c.tau_H_mapped[i], c.tau_C_mapped[i],
                         c.tau_cycle[i], c.S_B[i], c.Q_H[i], c.W[i], c.P[i]])
    return rows


def fit_rows(times, fits):
    return [[t, f.a, f.delta_a, f.beta_plus, f.beta_minus, f.T_plus, f.T_minus,
             f.residual, f.regime.value] for t, f in zip(times, fits)]


def render_table(columns, rows, fmt="csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        records = [dict(zip(columns, (_json_value(v) for v in row))) for row in rows]
        return json.dumps({"columns": columns, "rows": records}, indent=1) + "\n"
    raise SpinOttoError(f"unknown table format {fmt!r}")


def write_table(path, columns, rows, fmt="csv") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_table(columns, rows, fmt))
    return path


def emit_tables(result, fmt, out_dir, stem=None):
    """Write the tables belonging to ``result`` into ``out_dir``.

    Returns the list of written paths. ``result`` may be a ``CycleRecord``,
    ``SweepResult``, ``LevelComparison``, or a ``(Trajectory, field_mG)`` pair.
    """
    if fmt not in ("csv", "json"):
        raise SpinOttoError(f"unknown table format {fmt!r}")
    out = Path(out_dir)
    ext = "." + fmt
    if isinstance(result, CycleRecord):
        stem = stem or "cycle"
        N = len(result.heating.start)
        return [
            write_table(out / f"{stem}_trajectory{ext}", trajectory_columns(N),
                        cycle_trajectory_rows(result), fmt),
            write_table(out / f"{stem}_summary{ext}", SWEEP_COLUMNS,
                        [sweep_row(result)], fmt),
        ]
    if isinstance(result, SweepResult):
        return [write_table(out / f"{stem or 'sweep'}{ext}", SWEEP_COLUMNS,
                            [sweep_row(r) for r in result.records], fmt)]
    if isinstance(result, LevelComparison):
        return [write_table(out / f"{stem or 'levels'}{ext}", LEVEL_COLUMNS,
                            level_rows(result), fmt)]
    if isinstance(result, tuple) and len(result) == 2 and isinstance(result[0], Trajectory):
        traj, field_mG = result
        return [write_table(out / f"{stem or 'trajectory'}{ext}",
                            trajectory_columns(traj.states.shape[1]),
                            trajectory_rows(traj, field_mG), fmt)]
    raise SpinOttoError(f"no table layout for {type(result).__name__}")


def read_populations(path):
    """Read a population table with columns ``t_ms, p0, ..., p{N-1}``.

    Returns ``(times, states)``; extra trailing columns are ignored.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            body = [row for row in reader if row]
    except OSError as exc:
        raise ConfigError(f"cannot read population file {path}: {exc.strerror}") from exc
    except StopIteration:
        raise ConfigError(f"population file {path} is empty") from None
    header = [h.strip() for h in header]
    if not header or header[0] != "t_ms":
        raise ConfigError("population table must start with a 't_ms' column", line=1)
    pcols = []
    for i, name in enumerate(header[1:], start=1):
        if name == f"p{len(pcols)}":
            pcols.append(i)
        else:
            break
    if len(pcols) < 2:
        raise ConfigError("population table needs columns p0, p1, ...", line=1)
    times, states = [], []
    for lineno, row in enumerate(body, start=2):
        try:
            times.append(float(row[0]))
            states.append([float(row[i]) for i in pcols])
        except (ValueError, IndexError):
            raise ConfigError("malformed population row", line=lineno) from None
    return np.array(times), np.array(states)

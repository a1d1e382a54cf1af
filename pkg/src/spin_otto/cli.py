"""Command-line entry point: ``spin-otto <command> [options]``.

Every command reads an optional config file, applies flag overrides and
writes its tables (and plots) into ``--out``. Errors are reported as one
JSON object on stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .cycle import (
    calibrate_uniform_rate,
    heating_entropy_peak,
    run_cycle,
    run_heating,
    sweep_heating_time,
)
from .dynamics import Direction, RateProfile, Trajectory
from .errors import ConfigError, SpinOttoError
from .levels import compare_n_levels, truncate
from .plotting import KINDS, emit_plot
from .tempfit import temperature_trace
from .thermo import zeeman_ladder

EXIT_CODES = {
    "config": 3,
    "domain": 4,
    "closure": 5,
    "calibration": 6,
    "fit": 7,
    "io": 8,
    "internal": 1,
}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat YAML config file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--epsilon", type=float, help="override the cooling closure tolerance")
    common.add_argument("--n", type=str,
                        help="level count, or comma-separated counts for 'levels'")

    p = argparse.ArgumentParser(prog="spin-otto", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run one cycle")
    s.add_argument("--tau-h", type=float, required=True, help="heating time (ms)")

    sub.add_parser("sweep", parents=[common], help="sweep the heating time")

    c = sub.add_parser("calibrate", parents=[common],
                       help="uniform rate putting the entropy peak at a target time")
    c.add_argument("--target", type=float, help="target peak time (ms)")

    f = sub.add_parser("fit", parents=[common], help="fit temperatures to a population table")
    f.add_argument("--input", type=Path, required=True, help="CSV with t_ms, p0, p1, ...")
    f.add_argument("--field", type=float, help="field of the ladder in mG (default B1)")

    sub.add_parser("levels", parents=[common], help="compare truncated engines")

    pl = sub.add_parser("plot", parents=[common], help="render a figure as SVG")
    pl.add_argument("--kind", choices=KINDS, required=True)
    pl.add_argument("--tau-h", type=float, action="append",
                    help="heating time(s) for entropy_vs_time (repeatable)")
    pl.add_argument("--input", type=Path, help="population CSV for temperature_trace")
    pl.add_argument("--field", type=float, help="ladder field for temperature_trace (mG)")
    return p


def _level_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--n expects integers, got {text!r}", key="--n") from None


def _manifest(args):
    if args.config is not None:
        manifest = io.load_manifest(args.config)
    else:
        manifest = io.manifest_from_mapping({})
    config = manifest.config
    if args.epsilon is not None:
        try:
            config = config.replace(epsilon=args.epsilon)
        except SpinOttoError as exc:
            raise ConfigError(str(exc), key="--epsilon") from None
    counts = manifest.level_counts
    if args.n is not None:
        ns = _level_list(args.n)
        if args.command == "levels":
            counts = tuple(sorted(set(ns)))
        elif len(ns) != 1:
            raise ConfigError("--n takes a single level count here", key="--n")
        else:
            config = truncate(config, ns[0]).config
    return dataclasses.replace(manifest, config=config, level_counts=counts)


def _fit_trace(path, field):
    times, states = io.read_populations(path)
    ladder = zeeman_ladder(field, states.shape[1])
    traj = Trajectory(times, states, float(states.min()), 0.0)
    return times, temperature_trace(traj, ladder)


def _out(paths):
    for p in paths:
        print(p)


def run(args):
    manifest = _manifest(args)
    config = manifest.config
    out, fmt = args.out, args.format
    if out.exists() and not out.is_dir():
        raise ConfigError(f"output path {out} is not a directory", key="--out")

    if args.command == "simulate":
        record = run_cycle(config, args.tau_h)
        _out(io.emit_tables(record, fmt, out))
    elif args.command == "sweep":
        _out(io.emit_tables(sweep_heating_time(config, manifest.grid), fmt, out))
    elif args.command == "calibrate":
        target = args.target if args.target is not None else manifest.target_peak_ms
        rate = calibrate_uniform_rate(config, target)
        calibrated = config.replace(heating=RateProfile.uniform(Direction.HEATING, rate, config.N))
        t_peak, s_peak = heating_entropy_peak(calibrated)
        rows = [[rate, target, t_peak, s_peak]]
        cols = ["rate_per_ms", "target_peak_ms", "peak_time_ms", "peak_entropy_kB"]
        _out([io.write_table(out / f"calibration.{fmt}", cols, rows, fmt)])
    elif args.command == "fit":
        field = args.field if args.field is not None else config.B1
        times, fits = _fit_trace(args.input, field)
        _out([io.write_table(out / f"temperature_trace.{fmt}", io.FIT_COLUMNS,
                             io.fit_rows(times, fits), fmt)])
    elif args.command == "levels":
        cmp = compare_n_levels(config, manifest.level_counts, manifest.grid,
                               map_cooling=manifest.map_cooling)
        _out(io.emit_tables(cmp, fmt, out))
    elif args.command == "plot":
        _out([_plot(args, manifest)["path"]])
    return 0


def _plot(args, manifest):
    config, out = manifest.config, args.out
    kind = args.kind
    if kind == "entropy_vs_time":
        taus = args.tau_h or [20.0, 300.0]
        curve = [run_cycle(config, t) for t in taus]
    elif kind == "power_vs_entropy":
        curve = sweep_heating_time(config, manifest.grid)
    elif kind == "n_level_comparison":
        curve = compare_n_levels(config, manifest.level_counts, manifest.grid,
                                 map_cooling=manifest.map_cooling)
    else:
        field = args.field if args.field is not None else config.B1
        if args.input is not None:
            curve = _fit_trace(args.input, field)
        else:
            stroke_time = 2.0 * config.N / min(config.heating.rates)
            traj = run_heating(config, stroke_time).trajectory
            keep = np.arange(0, len(traj), max(1, len(traj) // 120))
            sub = Trajectory(traj.times[keep], traj.states[keep], traj.min_raw, traj.max_norm_error)
            curve = (sub.times, temperature_trace(sub, zeeman_ladder(field, config.N)))
    return emit_plot(curve, kind, out / f"{kind}.svg")


def _report(category, message):
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return EXIT_CODES.get(category, 1)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return run(args)
    except SpinOttoError as exc:
        return _report(exc.category, str(exc))
    except OSError as exc:
        return _report("io", str(exc))


if __name__ == "__main__":
    sys.exit(main())

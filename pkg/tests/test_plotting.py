import xml.etree.ElementTree as ET

import numpy as np
import pytest

from spin_otto.cycle import SweepResult, run_cycle, sweep_heating_time
from spin_otto.dynamics import Trajectory, basis_state
from spin_otto.errors import DomainError
from spin_otto.levels import compare_n_levels
from spin_otto.plotting import emit_plot
from spin_otto.tempfit import temperature_trace
from spin_otto.thermo import zeeman_ladder

SVG = "{http://www.w3.org/2000/svg}"


def ids(path):
    return {el.get("id") for el in ET.parse(path).iter() if el.get("id")}


def test_power_vs_entropy_marker_in_negative_region(tmp_path, calibrated_sweep):
    out = emit_plot(calibrated_sweep, "power_vs_entropy", tmp_path / "p.svg")
    assert out["max_power_regime"] == "negative"
    found = ids(out["path"])
    assert {"positive-region", "negative-region", "max-power-marker"} <= found
    assert out["points"] == len(calibrated_sweep.records)


def test_single_point_curve(tmp_path, calibrated):
    sweep = sweep_heating_time(calibrated, [40.0])
    out = emit_plot(sweep, "power_vs_entropy", tmp_path / "one.svg")
    assert out["points"] == 1
    assert "max-power-marker" in ids(out["path"])


def test_empty_curves_rejected(tmp_path):
    with pytest.raises(DomainError):
        emit_plot(SweepResult(()), "power_vs_entropy", tmp_path / "e.svg")
    with pytest.raises(DomainError):
        emit_plot([], "entropy_vs_time", tmp_path / "e.svg")
    with pytest.raises(DomainError):
        emit_plot((np.array([]), []), "temperature_trace", tmp_path / "e.svg")


def test_unknown_kind(tmp_path, calibrated_sweep):
    with pytest.raises(DomainError):
        emit_plot(calibrated_sweep, "histogram", tmp_path / "x.svg")


def test_n_level_comparison_two_series(tmp_path, calibrated):
    cmp = compare_n_levels(calibrated, {2, 7}, [20.0, 60.0, 150.0])
    out = emit_plot(cmp, "n_level_comparison", tmp_path / "n.svg")
    assert out["series"] == ["N = 2", "N = 7"]
    assert {"levels-2", "levels-7"} <= ids(out["path"])


def test_entropy_vs_time(tmp_path, calibrated):
    records = [run_cycle(calibrated, 20.0), run_cycle(calibrated, 300.0)]
    out = emit_plot(records, "entropy_vs_time", tmp_path / "s.svg")
    assert out["series"] == ["tau_H = 20 ms", "tau_H = 300 ms"]


def test_temperature_trace_regions(tmp_path):
    ladder = zeeman_ladder(346.5, 7)
    states = np.array([basis_state(0, 7), np.full(7, 1 / 7), basis_state(6, 7)])
    traj = Trajectory(np.array([0.0, 1.0, 2.0]), states)
    out = emit_plot((traj.times, temperature_trace(traj, ladder)), "temperature_trace",
                    tmp_path / "t.svg")
    assert out["regimes"] == ["positive", "transition", "negative"]
    assert {"positive-region", "transition-region", "negative-region"} <= ids(out["path"])


def test_plots_are_deterministic(tmp_path, calibrated):
    sweep = sweep_heating_time(calibrated, np.arange(10.0, 200.0, 20.0))
    a = emit_plot(sweep, "power_vs_entropy", tmp_path / "a.svg")["path"].read_bytes()
    b = emit_plot(sweep, "power_vs_entropy", tmp_path / "b.svg")["path"].read_bytes()
    assert a == b
    assert b.lstrip().startswith(b"<?xml")

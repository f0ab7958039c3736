import math

import pytest

from sideband_thermo import io
from sideband_thermo.cli import EXIT_CONFIG, EXIT_ESTIMATOR, EXIT_OK, exit_code_for, main
from sideband_thermo.errors import FitError, PipelineError, SolverError

from test_config_io import REFERENCE_HZ


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(REFERENCE_HZ)
    return path


def run(*args):
    return main([str(a) for a in args])


def test_spectrum_csv(cfg_path, tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run("spectrum", "--config", cfg_path, "--out", out, "--noise", "off") == EXIT_OK
    header, cols, rows = io.read_csv(out)
    assert cols == ["w_hz", "s_het", "s_rr", "s_bb"]
    assert len(rows) == 2 * 4096
    assert len(out.read_text().splitlines()) == len(rows) + 2  # hash comment + header
    text = capsys.readouterr().out
    assert "red" in text and "delta used" in text
    red = max(float(r[2]) for r in rows)
    blue = max(float(r[3]) for r in rows)
    assert red > blue


def test_spectrum_floor_off_peak(tmp_path):
    path = tmp_path / "wide.toml"
    path.write_text(REFERENCE_HZ + "\n[spectrum]\nw_min = -9e6\nw_max = 9.1e6\npoints = 1000\n")
    out = tmp_path / "wide.csv"
    assert run("spectrum", "--config", path, "--out", out, "--noise", "off") == EXIT_OK
    _, _, rows = io.read_csv(out)
    # away from both sidebands and from the carrier at w = 0
    far = [float(r[1]) for r in rows
           if abs(abs(float(r[0])) - 5.33e6) > 1e6 and abs(float(r[0])) > 1e6]
    assert far and all(abs(v - 0.5) < 1e-6 for v in far)


def test_spectrum_reruns_byte_identical(cfg_path, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run("spectrum", "--config", cfg_path, "--out", out, "--seed", 3) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_sweep_resume(cfg_path, tmp_path):
    full = tmp_path / "full.csv"
    assert run("sweep", "--config", cfg_path, "--out", full) == EXIT_OK
    lines = full.read_text().splitlines()
    partial = tmp_path / "part.csv"
    partial.write_text("\n".join(lines[:4]) + "\n")
    assert run("sweep", "--config", cfg_path, "--out", partial, "--resume") == EXIT_OK
    assert partial.read_bytes() == full.read_bytes()
    # a different configuration must not be appended
    assert run("sweep", "--config", cfg_path, "--out", partial, "--resume", "--seed", 99) == EXIT_CONFIG


def test_sweep_parallel_identical(cfg_path, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("sweep", "--config", cfg_path, "--out", a) == EXIT_OK
    assert run("sweep", "--config", cfg_path, "--out", b, "--jobs", 2) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_sweep_requires_section(tmp_path):
    path = tmp_path / "nosweep.toml"
    path.write_text(REFERENCE_HZ.split("[sweep]")[0])
    assert run("sweep", "--config", path, "--out", tmp_path / "x.csv") == EXIT_CONFIG


def test_critical_report(cfg_path, tmp_path, capsys):
    out = tmp_path / "c.json"
    assert run("critical", "--config", cfg_path, "--out", out) == EXIT_OK
    text = capsys.readouterr().out
    assert "n_cr" in text and "3.94" in text


def test_critical_doppler_warning(tmp_path, capsys):
    path = tmp_path / "dop.toml"
    path.write_text(REFERENCE_HZ.replace("kappa = 118e3", "kappa = 53.3e6"))
    assert run("critical", "--config", path) == EXIT_OK
    assert "do not form" in capsys.readouterr().out


def test_critical_no_crossover(tmp_path, capsys):
    path = tmp_path / "nc.toml"
    path.write_text(REFERENCE_HZ.replace("kappa = 118e3", "kappa = 53.3e3").replace("gamma_m = 30.0", "gamma_m = 533e3"))
    assert run("critical", "--config", path) == EXIT_OK
    assert "no crossover" in capsys.readouterr().out


def test_thermometry_pipeline(tmp_path):
    path = tmp_path / "th.toml"
    path.write_text(REFERENCE_HZ.split("[sweep]")[0] + "\n[acquisition]\nseed = 1\n")
    out = tmp_path / "th.csv"
    assert run("thermometry", "--config", path, "--out", out, "--estimator", "corrected") == EXIT_OK
    _, cols, rows = io.read_csv(out)
    row = dict(zip(cols, rows[0]))
    assert abs(float(row["t_corr_k"]) / 0.1 - 1) < 1e-2
    assert float(row["t_raw_k"]) != float(row["t_corr_k"])
    assert out.with_suffix(".json").exists()


def test_thermometry_bias_curve(cfg_path, tmp_path):
    out = tmp_path / "bias.csv"
    assert run("thermometry", "--config", cfg_path, "--out", out) == EXIT_OK
    _, cols, rows = io.read_csv(out)
    assert cols[:7] == ["p_op_w", "n_bar", "delta_bar", "dn", "t_raw_k", "t_corr_k", "flag"]
    assert len(rows) == 5


def test_thermometry_missing_temperature(tmp_path):
    path = tmp_path / "nt.toml"
    path.write_text(REFERENCE_HZ.replace("temperature = 0.1", ""))
    assert run("thermometry", "--config", path) == EXIT_CONFIG


def test_fit_round_trip(tmp_path):
    path = tmp_path / "th.toml"
    path.write_text(REFERENCE_HZ.split("[sweep]")[0])
    out = tmp_path / "spec.csv"
    assert run("spectrum", "--config", path, "--out", out, "--noise", "off", "--units", "rad_s") == EXIT_OK
    # spectrum CSV has extra columns; write a pure two-column trace from it
    _, cols, rows = io.read_csv(out)
    trace = tmp_path / "trace.csv"
    io.write_csv(trace, io.TRACE_COLUMNS, [[float(r[0]), float(r[1])] for r in rows], "x")
    assert run("fit", "--trace", trace, "--config", path, "--out", tmp_path / "fit.json") == EXIT_OK
    assert run("fit", "--trace", trace) == EXIT_OK


def test_fit_needs_trace():
    assert run("fit") == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert run("critical", "--config", tmp_path / "nope.toml") == EXIT_CONFIG


def test_exit_code_mapping():
    assert exit_code_for(SolverError("x")) == 3
    assert exit_code_for(FitError("x")) == EXIT_ESTIMATOR
    assert exit_code_for(PipelineError("fit_red", FitError("x"))) == EXIT_ESTIMATOR

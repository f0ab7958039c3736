"""Command-line front end.

Subcommands: ``spectrum``, ``sweep``, ``critical``, ``thermometry``, ``fit``.
Exit codes are stable: 0 success, 2 config/usage error, 3 numerical
failure, 4 estimator failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from . import config as cfgmod
from . import io
from .errors import (
    ConfigError,
    DomainError,
    EstimatorError,
    ParameterError,
    PipelineError,
    SidebandThermoError,
    SolverError,
)
from .experiment import (
    build_grid,
    estimate_inequivalence,
    estimate_populations,
    fit_peak,
    run_pipeline,
    sideband_components,
    synthesize_trace,
)
from .params import derive_scales
from .sideband import delta_bar, sideband_state
from .spectra import SHOT_NOISE_FLOOR, SpectralModel, populations
from .steady_state import bistability_onset, kerr_crossover_power, solve_n_bar
from .thermometry import (
    BIAS_COLUMNS,
    Estimator,
    bias_curve,
    classify_bias,
    critical_point,
    estimate_temperature,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ESTIMATOR = 4

EXIT_CODES = {
    ConfigError: EXIT_CONFIG,
    ParameterError: EXIT_CONFIG,
    EstimatorError: EXIT_ESTIMATOR,
    DomainError: EXIT_NUMERICAL,
    SolverError: EXIT_NUMERICAL,
}

SWEEP_COLUMNS = ["p_op_w", "detuning_rad_s", "temperature_k", "n_bar", "g_enhanced_rad_s",
                 "delta_bar", "delta_bar_unreliable", "n_roots", "dn_closed", "dn_shift",
                 "t_raw_k", "t_corr_k", "flag", "error"]


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        return exit_code_for(exc.cause)
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return EXIT_NUMERICAL


def _load(args) -> cfgmod.RunConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = cfgmod.load(args.config, units_override=args.units)
    return cfg.with_overrides(seed=args.seed, noise=args.noise,
                              shift_correction=args.shift_correction,
                              estimator=args.estimator, units=args.units)


def _require_temperature(cfg):
    if cfg.temperature is None:
        raise ConfigError("missing required key", key="thermometry.temperature")
    return cfg.temperature


def _out_path(args, default):
    return Path(args.out) if args.out else Path(default)


def _w_label(units):
    return "w_hz" if units == "hz" else "w_rad_s"


def _w_out(w, units):
    return w / (2 * math.pi) if units == "hz" else w


# -- spectrum -------------------------------------------------------------------


def cmd_spectrum(args) -> int:
    cfg = _load(args)
    p, d = cfg.system, cfg.drive
    temperature = _require_temperature(cfg)
    model = SpectralModel.from_drive(p, d, temperature)
    db = delta_bar(p, model.op_point.g_enhanced)
    delta = db.value * p.omega_m if cfg.shift_correction else 0.0
    spec = cfg.spectrum
    if spec.w_min is not None and spec.w_max is not None:
        w = np.linspace(spec.w_min, spec.w_max, spec.points)
        if np.any(w == 0.0):
            raise ConfigError("spectrum grid contains w = 0", key="spectrum.points")
    else:
        centers = (d.detuning + p.omega_m + 0.5 * delta, d.detuning - p.omega_m + 0.5 * delta)
        w, _ = build_grid(p, centers, cfg.acquisition.grid)
    rr, bb = sideband_components(w, model, d, delta)
    clean = SHOT_NOISE_FLOOR + rr + bb
    het = clean
    acq = cfg.acquisition
    if acq.n_avg is not None:
        het = synthesize_trace(model, d, acq.grid, acq.n_avg, acq.seed, delta, w_grid=w).psd
    out = _out_path(args, "spectrum.csv")
    cols = [_w_label(cfg.units), "s_het", "s_rr", "s_bb"]
    n = io.write_csv(out, cols, zip(_w_out(w, cfg.units), het, rr, bb), cfg.hash())
    i_r, i_b = int(np.argmax(rr)), int(np.argmax(bb))
    rows = [["red", _w_out(w[i_r], cfg.units), rr[i_r]], ["blue", _w_out(w[i_b], cfg.units), bb[i_b]]]
    print(io.format_table(["sideband", _w_label(cfg.units), "height"], rows))
    print(f"delta used: {delta:.6g} rad/s (delta_bar = {delta / p.omega_m:.6g}, "
          f"{'reliable' if db.reliable else 'UNRELIABLE near g = Omega/sqrt(2)'})")
    print(f"wrote {n} rows to {out}")
    return EXIT_OK


# -- sweep ----------------------------------------------------------------------


def sweep_point(cfg: cfgmod.RunConfig, value: float):
    """One sweep row; estimator and model failures become the row's ``error`` field."""
    p = cfg.system
    q = cfg.sweep.quantity
    d = cfg.drive
    temperature = cfg.temperature
    if q == "p_op":
        d = d.with_power(value)
    elif q == "detuning":
        d = d.with_detuning(p, value)
    else:
        temperature = value
    errors = []
    points = solve_n_bar(p, d)
    op = points[0]
    db = delta_bar(p, op.g_enhanced)
    model = SpectralModel.from_operating_point(p, d, op, temperature)
    dn_closed = dn_shift = t_raw = t_corr = math.nan
    flag = ""
    if d.detuning == 0.0:
        pop0 = populations(model, use_shift=False)
        pop1 = populations(model, use_shift=True)
        dn_closed, dn_shift = pop0.dn, pop1.dn
        pop = pop1 if cfg.shift_correction else pop0
        temps = []
        for method in (Estimator.RAW, Estimator.CORRECTED):
            try:
                temps.append(estimate_temperature(pop, model, method).t_recovered)
            except EstimatorError as exc:
                temps.append(math.nan)
                errors.append(f"{method.name.lower()}: {exc}")
        t_raw, t_corr = temps
        flag = classify_bias(d.p_op, critical_point(p, d, cfg.approx).p_cr).value
    else:
        errors.append("populations need resonant drive")
    return [d.p_op, d.detuning, temperature, op.n_bar, op.g_enhanced, db.value,
            int(not db.reliable), len(points), dn_closed, dn_shift, t_raw, t_corr, flag,
            "; ".join(errors)]


def _resume_rows(out: Path, cfg_hash: str, grid, key_index: int):
    """Validate an existing sweep file and return how many grid points it already holds."""
    header = io.read_header(out)
    if header is None or header.config_hash != cfg_hash:
        found = header.config_hash if header else "none"
        raise ConfigError(f"cannot resume {out}: config hash {found} differs from {cfg_hash}")
    _, columns, rows = io.read_csv(out)
    if columns != SWEEP_COLUMNS:
        raise ConfigError(f"cannot resume {out}: column layout differs")
    if len(rows) > len(grid):
        raise ConfigError(f"cannot resume {out}: more rows than grid points")
    for i, row in enumerate(rows):
        if float(row[key_index]) != float(grid[i]):
            raise ConfigError(f"cannot resume {out}: row {i + 1} does not match the sweep grid")
    return len(rows)


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.sweep is None:
        raise ConfigError("sweep command needs a [sweep] section", key="sweep")
    _require_temperature(cfg)
    grid = cfg.sweep.grid()
    if cfg.sweep.quantity == "detuning":
        # exact values as stored after a with_detuning round trip
        grid = np.array([cfg.drive.with_detuning(cfg.system, x).detuning for x in grid])
    key_index = {"p_op": 0, "detuning": 1, "temperature": 2}[cfg.sweep.quantity]
    out = _out_path(args, "sweep.csv")
    cfg_hash = cfg.hash()
    done = 0
    if args.resume and out.exists():
        done = _resume_rows(out, cfg_hash, grid, key_index)
    todo = [float(x) for x in grid[done:]]
    work = partial(sweep_point, cfg)
    if args.jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(work, todo))
    else:
        rows = [work(x) for x in todo]
    n = io.write_csv(out, SWEEP_COLUMNS, rows, cfg_hash, append=done > 0)
    print(f"sweep over {cfg.sweep.quantity}: {done} existing rows kept, {n} written to {out}")
    return EXIT_OK


# -- critical -------------------------------------------------------------------


def critical_report(cfg: cfgmod.RunConfig) -> dict:
    p, d = cfg.system, cfg.drive
    cp = critical_point(p, d, cfg.approx)
    scales = derive_scales(p)
    report = {
        "approx_used": cp.approx_used.value,
        "crossover_exists": cp.exists,
        "bracket": cp.bracket,
        "p_cr_w": cp.p_cr,
        "n_cr": cp.n_cr,
        "p_cr_full_w": cp.p_cr_full,
        "p_cr_full_approx_w": cp.p_cr_full_approx,
        "p_cr_resolved_w": cp.p_cr_resolved,
        "n_cr_exact": cp.n_cr_exact,
        "n_cr_resolved": cp.n_cr_resolved,
        "n_cr_resolved_times_hw_kappa_over_4eta_w": cp.n_cr_resolved * p.hbar * d.omega_l * p.kappa / (4 * p.eta),
        "weak_pump_bound_w": cp.weak_pump_bound,
        "kerr_crossover_power_w": kerr_crossover_power(p, d),
        "quoted_reference_p_cr_w": 0.1e-6,
        "quoted_reference_weak_bound_w": 0.206,
        "resolved_cavity": p.kappa < p.omega_m,
        "c0": scales.c0,
        "a_scale": scales.a_scale,
        "notes": list(cp.notes),
    }
    if d.p_op > 0:
        report["p_op_w"] = d.p_op
        report["bias_flag"] = classify_bias(d.p_op, cp.p_cr).value
        if cp.p_cr:
            report["p_op_over_p_cr"] = d.p_op / cp.p_cr
    onset = bistability_onset(p, d)
    report["bistability_window_rad_s"] = (
        None if onset.delta_b is None else [onset.delta_lower, onset.delta_b])
    return report


def cmd_critical(args) -> int:
    cfg = _load(args)
    report = critical_report(cfg)
    for note in report["notes"]:
        print(f"WARNING: {note}")
    if not report["crossover_exists"]:
        print("no crossover")
    rows = [[k, v] for k, v in report.items() if k != "notes"]
    print(io.format_table(["quantity", "value"], rows))
    if args.out:
        io.write_json(args.out, report, cfg.hash())
    return EXIT_OK


# -- thermometry ----------------------------------------------------------------


def cmd_thermometry(args) -> int:
    cfg = _load(args)
    temperature = _require_temperature(cfg)
    cfg_hash = cfg.hash()
    if cfg.sweep is not None and cfg.sweep.quantity == "p_op":
        rows = bias_curve(cfg.system, temperature, cfg.sweep.grid(),
                          use_shift=cfg.shift_correction, jobs=args.jobs)
        out = _out_path(args, "bias_curve.csv")
        n = io.write_csv(out, BIAS_COLUMNS, (r.as_csv_row() for r in rows), cfg_hash)
        print(f"bias curve: {n} rows written to {out}")
        return EXIT_OK
    result = run_pipeline(cfg.system, cfg.drive, temperature, cfg.acquisition)
    report = result.report()
    th = report["thermometry"]
    # both estimators for the same fitted populations
    other = {}
    for method in (Estimator.RAW, Estimator.CORRECTED):
        try:
            other[method.value] = estimate_temperature(result.populations, result.model,
                                                       method).t_recovered
        except EstimatorError as exc:
            other[method.value] = f"error: {exc}"
    report["estimators"] = other
    out = _out_path(args, "thermometry.csv")
    cols = ["temperature_k", "t_raw_k", "t_corr_k", "n_r", "n_b", "delta_rad_s", "n_bar", "flag"]
    row = [temperature, other[Estimator.RAW.value], other[Estimator.CORRECTED.value],
           result.populations.n_r, result.populations.n_b, result.inequivalence.delta_ineq,
           result.op_point.n_bar, th["bias_flag"]]
    io.write_csv(out, cols, [row], cfg_hash)
    io.write_json(out.with_suffix(".json"), report, cfg_hash)
    print(io.format_table(["quantity", "value"], [
        ["injected T [K]", temperature],
        ["recovered T [K]", th["t_recovered_k"]],
        ["method", th["method"]],
        ["bias flag", th["bias_flag"]],
        ["delta [rad/s]", result.inequivalence.delta_ineq],
    ]))
    print(f"wrote {out} and {out.with_suffix('.json')}")
    return EXIT_OK


# -- fit ------------------------------------------------------------------------


def _auto_windows(trace):
    """Split a two-sided trace at w = 0 and centre a window on each maximum."""
    w, y = trace.w_grid, trace.psd
    pos, neg = w > 0, w < 0
    if not pos.any() or not neg.any():
        raise ConfigError("trace must cover both positive and negative offsets")
    windows = []
    for mask in (pos, neg):
        ww, yy = w[mask], y[mask]
        c = ww[int(np.argmax(yy))]
        half = 0.5 * (ww[-1] - ww[0])
        # restrict to the contiguous block around the maximum
        windows.append((max(ww[0], c - half), min(ww[-1], c + half)))
    return windows


def cmd_fit(args) -> int:
    if not args.trace:
        raise ConfigError("fit needs --trace PATH")
    trace = io.read_trace(args.trace)
    if args.window_red and args.window_blue:
        win_r, win_b = tuple(args.window_red), tuple(args.window_blue)
    else:
        win_r, win_b = _auto_windows(trace)
    fit_r = fit_peak(trace, win_r)
    fit_b = fit_peak(trace, win_b)
    cfg = _load(args) if args.config else None
    detuning = cfg.drive.detuning if cfg else 0.0
    ineq = estimate_inequivalence(fit_r, fit_b, detuning)
    pops = estimate_populations(fit_r, fit_b, args.population_mode)
    report = {
        "fit_red": {"center": fit_r.center, "sigma_center": fit_r.sigma_center,
                    "linewidth": fit_r.linewidth, "amplitude": fit_r.amplitude, "floor": fit_r.floor},
        "fit_blue": {"center": fit_b.center, "sigma_center": fit_b.sigma_center,
                     "linewidth": fit_b.linewidth, "amplitude": fit_b.amplitude, "floor": fit_b.floor},
        "delta_rad_s": ineq.delta_ineq,
        "delta_bar": ineq.delta_bar,
        "omega_m_est_rad_s": ineq.omega_m,
        "sigma_delta_quadrature": ineq.sigma_delta,
        "sigma_delta_linear": ineq.sigma_delta_linear,
        "n_r": pops.n_r,
        "n_b": pops.n_b,
    }
    if cfg is not None and cfg.temperature is not None:
        model = SpectralModel.from_drive(cfg.system, cfg.drive, cfg.temperature)
        res = estimate_temperature(pops, model, cfg.estimator)
        report["visible"] = sideband_state(cfg.system, cfg.drive, model.op_point,
                                           ineq.delta_ineq).visible
    else:
        res = estimate_temperature(pops, omega_m=ineq.omega_m)
    report["t_recovered_k"] = res.t_recovered
    report["method"] = res.method.value
    print(io.format_table(["quantity", "value"], [[k, v] for k, v in report.items()
                                                  if not isinstance(v, dict)]))
    if args.out:
        io.write_json(args.out, report, cfg.hash() if cfg else "none")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output path")
    common.add_argument("--seed", type=int, help="override acquisition.seed")
    common.add_argument("--noise", choices=["on", "off"], help="synthetic trace noise")
    common.add_argument("--shift-correction", choices=["on", "off"], dest="shift_correction")
    common.add_argument("--estimator", choices=["raw", "corrected"])
    common.add_argument("--units", choices=["hz", "rad_s"],
                        help="interpret config frequencies as f (hz) or 2*pi*f (rad_s)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    parser = argparse.ArgumentParser(prog="sideband-thermo",
                                     description="Sideband inequivalence and thermometry tools")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="heterodyne spectrum to CSV")
    sp = sub.add_parser("sweep", parents=[common], help="sweep power, detuning or temperature")
    sp.add_argument("--resume", action="store_true", help="append to an existing output file")
    sub.add_parser("critical", parents=[common], help="crossover power and photon number")
    sub.add_parser("thermometry", parents=[common], help="end-to-end pipeline or bias curve")
    fp = sub.add_parser("fit", parents=[common], help="fit sidebands of an imported trace")
    fp.add_argument("--trace", help="CSV with columns w_rad_s, psd")
    fp.add_argument("--window-red", nargs=2, type=float, metavar=("LO", "HI"))
    fp.add_argument("--window-blue", nargs=2, type=float, metavar=("LO", "HI"))
    fp.add_argument("--population-mode", choices=["peak_height", "area"], default="peak_height")
    return parser


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "critical": cmd_critical,
    "thermometry": cmd_thermometry,
    "fit": cmd_fit,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SidebandThermoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())

"""Synthetic heterodyne experiment and the estimation pipeline.

Traces are generated from the spectral model with multiplicative Gaussian
noise of standard deviation ``1/sqrt(n_avg)`` (averaged periodogram). Each
sideband is fitted with a Lorentzian on a flat floor; centres give the
inequivalence, heights give the populations, and the populations give the
temperature.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    DomainError,
    EstimatorError,
    FitError,
    PipelineError,
    SidebandThermoError,
    WindowError,
)
from .params import DriveParams, SystemParams, drive_as_dict, system_as_dict
from .sideband import SidebandState, delta_bar, sideband_state
from .spectra import SHOT_NOISE_FLOOR, SidebandPopulations, SpectralModel, s_bb, s_rr
from .steady_state import OperatingPoint, operating_point
from .thermometry import (
    CriticalPoint,
    Estimator,
    ThermometryResult,
    critical_point,
    estimate_temperature,
)

MIN_WINDOW_SAMPLES = 20
DEFAULT_MAX_NFEV = 2000


@dataclass(frozen=True)
class GridSpec:
    """Sampling of the two sideband windows.

    ``half_width`` defaults to ``20 * max(Gamma, beta)``.
    """

    points_per_window: int = 4096
    half_width: Optional[float] = None

    def resolve_half_width(self, p: SystemParams) -> float:
        if self.half_width is not None:
            return float(self.half_width)
        return 20.0 * max(p.gamma_m, p.beta_lw)


@dataclass(frozen=True)
class SpectrumTrace:
    w_grid: np.ndarray
    psd: np.ndarray
    n_avg: Optional[int]
    seed: Optional[int]
    centers: Tuple[float, float] = (math.nan, math.nan)  # injected (red, blue)
    half_width: float = math.nan

    def window(self, side: str) -> Tuple[float, float]:
        c = self.centers[0] if side == "red" else self.centers[1]
        return c - self.half_width, c + self.half_width


def sideband_centers(p: SystemParams, d: DriveParams, delta_ineq: float):
    """``(Delta + Omega + delta/2, Delta - Omega + delta/2)``."""
    half = 0.5 * delta_ineq
    return d.detuning + p.omega_m + half, d.detuning - p.omega_m + half


def build_grid(p: SystemParams, centers, grid_spec: GridSpec):
    hw = grid_spec.resolve_half_width(p)
    n = grid_spec.points_per_window
    blue = np.linspace(centers[1] - hw, centers[1] + hw, n)
    red = np.linspace(centers[0] - hw, centers[0] + hw, n)
    return np.concatenate([blue, red]), hw


def sideband_components(w, model: SpectralModel, d: DriveParams, delta_ineq: float):
    """Red and blue contributions placed at the inequivalence-shifted centres.

    Both peaks are drawn with mechanical frequency ``Omega + delta/2`` (occupation and
    cooperativity unchanged), the red one at ``Delta + Omega + delta/2`` and the blue one
    at ``Delta - Omega + delta/2``. Their heights then carry the first-order shift
    correction used by :func:`spectra.populations`.
    """
    p = model.params
    shifted = dataclasses.replace(model, params=p.with_(omega_m=p.omega_m + 0.5 * delta_ineq))
    x = np.asarray(w, dtype=float) - d.detuning
    # the blue term is moved by delta to land at -Omega + delta/2
    return s_rr(x, shifted), s_bb(x - delta_ineq, shifted)


def clean_spectrum(w, model: SpectralModel, d: DriveParams, delta_ineq: float):
    """Noise-free ``1/2 + S_RR + S_BB`` with shifted sidebands."""
    rr, bb = sideband_components(w, model, d, delta_ineq)
    return SHOT_NOISE_FLOOR + rr + bb


def synthesize_trace(
    model: SpectralModel,
    d: DriveParams,
    grid_spec: GridSpec = GridSpec(),
    n_avg: Optional[int] = None,
    seed: Optional[int] = 0,
    delta_ineq: Optional[float] = None,
    w_grid=None,
) -> SpectrumTrace:
    """Averaged heterodyne trace around both sidebands.

    ``n_avg=None`` switches the noise off. ``delta_ineq`` defaults to the
    modelled inequivalence at the operating point; pass ``0`` for unshifted
    sidebands.
    """
    p = model.params
    if n_avg is not None and n_avg < 1:
        raise DomainError(f"n_avg must be >= 1, got {n_avg!r}")
    if delta_ineq is None:
        delta_ineq = delta_bar(p, model.op_point.g_enhanced).value * p.omega_m
    centers = sideband_centers(p, d, delta_ineq)
    if w_grid is None:
        w_grid, hw = build_grid(p, centers, grid_spec)
    else:
        w_grid = np.asarray(w_grid, dtype=float)
        hw = grid_spec.resolve_half_width(p)
    if np.any(w_grid == 0.0):
        raise DomainError("frequency grid must not contain w = 0")
    clean = clean_spectrum(w_grid, model, d, delta_ineq)
    if n_avg is None:
        psd = clean
    else:
        rng = np.random.default_rng(seed)
        xi = rng.standard_normal(w_grid.shape) / math.sqrt(n_avg)
        psd = np.maximum(clean * (1.0 + xi), 0.0)
    return SpectrumTrace(w_grid=w_grid, psd=psd, n_avg=n_avg, seed=seed,
                         centers=centers, half_width=hw)


# -- peak fitting ---------------------------------------------------------------


@dataclass(frozen=True)
class PeakFit:
    """Lorentzian ``floor + A (beta/2)^2 / ((w - w0)^2 + (beta/2)^2)``.

    ``covariance`` is ordered ``(center, linewidth, amplitude, floor)``.
    """

    center: float
    linewidth: float
    amplitude: float
    area: float
    floor: float
    covariance: np.ndarray
    n_points: int = 0
    rms_residual: float = 0.0
    nfev: int = 0

    @property
    def sigma_center(self):
        return math.sqrt(max(self.covariance[0, 0], 0.0))

    @property
    def sigma_amplitude(self):
        return math.sqrt(max(self.covariance[2, 2], 0.0))

    @classmethod
    def from_center(cls, center, sigma_center=0.0, linewidth=1.0, amplitude=1.0,
                    floor=SHOT_NOISE_FLOOR):
        """A fit record built from reported values rather than a trace."""
        cov = np.zeros((4, 4))
        cov[0, 0] = sigma_center**2
        return cls(center=center, linewidth=linewidth, amplitude=amplitude,
                   area=0.5 * math.pi * amplitude * linewidth, floor=floor, covariance=cov)


def lorentzian(w, center, linewidth, amplitude, floor):
    hw2 = (0.5 * linewidth) ** 2
    return floor + amplitude * hw2 / ((w - center) ** 2 + hw2)


def _initial_guess(w, y):
    i = int(np.argmax(y))
    edge = max(2, len(y) // 10)
    floor = float(np.median(np.concatenate([y[:edge], y[-edge:]])))
    amp = float(y[i] - floor)
    half = floor + 0.5 * amp
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < len(y) - 1 and y[hi] > half:
        hi += 1
    width = max(float(w[hi] - w[lo]), float(w[1] - w[0]))
    return i, float(w[i]), width, amp, floor


def fit_peak(trace: SpectrumTrace, window: Tuple[float, float], max_nfev=DEFAULT_MAX_NFEV,
             weighted: Optional[bool] = None) -> PeakFit:
    """Least-squares Lorentzian fit inside ``window``.

    A first unweighted pass seeds a second pass weighted by the first-pass
    model, matching the multiplicative noise of averaged traces. The
    covariance is scaled by the reduced chi-square of the final pass.
    ``weighted=None`` reweights only noisy traces (``n_avg`` set).
    """
    if weighted is None:
        weighted = trace.n_avg is not None
    lo, hi = window
    mask = (trace.w_grid >= lo) & (trace.w_grid <= hi)
    w = trace.w_grid[mask]
    y = trace.psd[mask]
    if len(w) < MIN_WINDOW_SAMPLES:
        raise WindowError(f"window holds {len(w)} samples, need >= {MIN_WINDOW_SAMPLES}")
    i, c0, b0, a0, f0 = _initial_guess(w, y)
    if i < 2 or i > len(w) - 3 or a0 <= 0.0:
        raise WindowError("peak maximum lies at the window edge; window excludes the sideband")

    # scaled variables: offset in initial widths, log width, amplitude and floor in units of a0
    scale = a0

    def unpack(x):
        return c0 + x[0] * b0, b0 * math.exp(x[1]), x[2] * scale, x[3] * scale

    def solve(x_start, sigma):
        def resid(x):
            return (lorentzian(w, *unpack(x)) - y) / sigma

        return least_squares(resid, x_start, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                             max_nfev=max_nfev)

    def check(res):
        if not res.success or not np.all(np.isfinite(res.x)):
            raise FitError(
                f"Lorentzian fit did not converge: {res.message}",
                diagnostics={"status": res.status, "nfev": res.nfev, "cost": float(res.cost),
                             "window": (lo, hi)},
            )

    x0 = np.array([0.0, 0.0, 1.0, f0 / scale])
    res = solve(x0, scale)
    check(res)
    nfev = res.nfev
    if weighted:
        # multiplicative noise: per-bin sigma proportional to the first-pass model
        sigma = lorentzian(w, *unpack(res.x))
        if np.all(sigma > 0.0):
            res = solve(res.x, sigma)
            check(res)
            nfev += res.nfev
    center, width, amp, floor = unpack(res.x)
    dof = max(len(w) - 4, 1)
    s_sq = 2.0 * res.cost / dof
    jac = res.jac
    try:
        cov_x = np.linalg.inv(jac.T @ jac) * s_sq
    except np.linalg.LinAlgError:
        cov_x = np.full((4, 4), np.nan)
    # chain rule back to physical parameters
    t = np.diag([b0, width, scale, scale])
    cov = t @ cov_x @ t
    model = lorentzian(w, center, width, amp, floor)
    rms = math.sqrt(np.mean((model - y) ** 2)) / max(abs(amp), 1e-300)
    return PeakFit(center=center, linewidth=width, amplitude=amp, area=0.5 * math.pi * amp * width,
                   floor=floor, covariance=cov, n_points=len(w), rms_residual=rms, nfev=nfev)


# -- estimators -----------------------------------------------------------------


@dataclass(frozen=True)
class InequivalenceEstimate:
    delta_ineq: float
    omega_m: float
    sigma_delta: float  # quadrature sum
    sigma_delta_linear: float
    sigma_omega_m: float

    @property
    def delta_bar(self):
        return self.delta_ineq / self.omega_m


def estimate_inequivalence(fit_r: PeakFit, fit_b: PeakFit, detuning: float = 0.0) -> InequivalenceEstimate:
    """Invert the sideband positions: ``delta = w_r + w_b - 2 Delta``, ``Omega = (w_r - w_b)/2``."""
    if not fit_r.center - detuning > 0.0 > fit_b.center - detuning:
        raise EstimatorError(
            f"sideband ordering violated: red {fit_r.center!r}, blue {fit_b.center!r}"
        )
    s_r, s_b = fit_r.sigma_center, fit_b.sigma_center
    quad = math.hypot(s_r, s_b)
    return InequivalenceEstimate(
        delta_ineq=fit_r.center + fit_b.center - 2.0 * detuning,
        omega_m=(fit_r.center - fit_b.center) / 2.0,
        sigma_delta=quad,
        sigma_delta_linear=s_r + s_b,
        sigma_omega_m=0.5 * quad,
    )


def estimate_populations(fit_r: PeakFit, fit_b: PeakFit, mode: str = "peak_height",
                         beta: Optional[float] = None, floor_ref: float = SHOT_NOISE_FLOOR,
                         rescale_to_floor: bool = False) -> SidebandPopulations:
    """Sideband populations from fitted peaks, in shot-noise units (floor = 1/2).

    Heights are measured above the fitted floor. ``rescale_to_floor``
    additionally multiplies by ``floor_ref / floor``; use it for traces of
    unknown gain. On calibrated traces it only injects the floor's fit error.
    """
    def one(fit):
        if mode == "peak_height":
            n = fit.amplitude
        elif mode == "area":
            width = fit.linewidth if beta is None else beta
            n = fit.area / (0.5 * math.pi * width)
        else:
            raise ValueError(f"unknown population mode {mode!r}")
        if rescale_to_floor:
            n *= floor_ref / fit.floor
        if n < 0.0:
            raise EstimatorError(f"negative fitted sideband height {n!r}")
        return n

    return SidebandPopulations.of(one(fit_r), one(fit_b), shift_corrected=True, source=mode)


# -- pipeline -------------------------------------------------------------------


@dataclass(frozen=True)
class AcquisitionSpec:
    n_avg: Optional[int] = None
    seed: Optional[int] = 0
    grid: GridSpec = GridSpec()
    estimator: str = "corrected"
    population_mode: str = "peak_height"
    shift: bool = True  # place sidebands at the inequivalence-shifted centres
    branch: str = "low"


@dataclass
class PipelineResult:
    thermometry: ThermometryResult
    state: SidebandState
    op_point: OperatingPoint
    model: SpectralModel
    trace: SpectrumTrace
    fit_red: PeakFit
    fit_blue: PeakFit
    inequivalence: InequivalenceEstimate
    populations: SidebandPopulations
    critical: CriticalPoint
    acquisition: AcquisitionSpec
    extra: dict = field(default_factory=dict)

    def report(self) -> dict:
        """Plain-data summary of every intermediate."""
        def fit_dict(f: PeakFit):
            return {"center": f.center, "sigma_center": f.sigma_center, "linewidth": f.linewidth,
                    "amplitude": f.amplitude, "area": f.area, "floor": f.floor,
                    "rms_residual": f.rms_residual, "nfev": f.nfev}

        acq = self.acquisition
        return {
            "system": system_as_dict(self.model.params),
            "drive": drive_as_dict(self.model.drive),
            "temperature_k": self.model.temperature,
            "acquisition": {"n_avg": acq.n_avg, "seed": acq.seed,
                            "points_per_window": acq.grid.points_per_window,
                            "half_width": self.trace.half_width, "estimator": acq.estimator,
                            "population_mode": acq.population_mode, "shift": acq.shift},
            "steady_state": {"n_bar": self.op_point.n_bar, "g_enhanced": self.op_point.g_enhanced,
                             "branch": self.op_point.branch.value,
                             "residual": self.op_point.residual},
            "sideband_state": dataclasses.asdict(self.state),
            "spectral_model": {"m_th": self.model.m_th, "cooperativity": self.model.coop},
            "fit_red": fit_dict(self.fit_red),
            "fit_blue": fit_dict(self.fit_blue),
            "inequivalence": {"delta": self.inequivalence.delta_ineq,
                              "delta_bar": self.inequivalence.delta_bar,
                              "omega_m_est": self.inequivalence.omega_m,
                              "sigma_delta_quadrature": self.inequivalence.sigma_delta,
                              "sigma_delta_linear": self.inequivalence.sigma_delta_linear,
                              "provenance": "measured"},
            "populations": dataclasses.asdict(self.populations),
            "critical": {"p_cr": self.critical.p_cr, "n_cr": self.critical.n_cr,
                         "approx": self.critical.approx_used.value, "exists": self.critical.exists},
            "thermometry": {"t_recovered_k": self.thermometry.t_recovered,
                            "ratio": self.thermometry.ratio,
                            "method": self.thermometry.method.value,
                            "bias_flag": self.thermometry.bias_flag.value
                            if self.thermometry.bias_flag else None},
        }


def _stage(name, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except SidebandThermoError as exc:
        raise PipelineError(name, exc) from exc


def run_pipeline(p: SystemParams, d: DriveParams, temperature: float,
                 acq: AcquisitionSpec = AcquisitionSpec()) -> PipelineResult:
    """Steady state, synthetic trace, peak fits, inequivalence, populations, temperature.

    Any failure is re-raised as :class:`PipelineError` tagged with its stage.
    """
    op = _stage("steady_state", operating_point, p, d, acq.branch)
    model = _stage("spectral_model", SpectralModel.from_operating_point, p, d, op, temperature)
    db = delta_bar(p, op.g_enhanced).value
    trace = _stage("synthesize", synthesize_trace, model, d, acq.grid, acq.n_avg, acq.seed,
                   db * p.omega_m if acq.shift else 0.0)
    fit_r = _stage("fit_red", fit_peak, trace, trace.window("red"))
    fit_b = _stage("fit_blue", fit_peak, trace, trace.window("blue"))
    ineq = _stage("inequivalence", estimate_inequivalence, fit_r, fit_b, d.detuning)
    state = _stage("sideband_state", sideband_state, p, d, op, ineq.delta_ineq)
    pops = _stage("populations", estimate_populations, fit_r, fit_b, acq.population_mode)
    critical = _stage("critical_point", critical_point, p, d)
    thermo = _stage("temperature", estimate_temperature, pops, model, Estimator.parse(acq.estimator),
                    critical=critical)
    return PipelineResult(thermometry=thermo, state=state, op_point=op, model=model, trace=trace,
                          fit_red=fit_r, fit_blue=fit_b, inequivalence=ineq, populations=pops,
                          critical=critical, acquisition=acq)

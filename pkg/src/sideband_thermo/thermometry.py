"""Temperature from sideband asymmetry, and where that stops working.

At low pump power the red/blue population ratio follows Bose-Einstein
statistics, ``n_b / n_r = exp(-hbar Omega / k_B T)``. With increasing power
the classical inequivalence contributes a term quadratic in power that
eventually dominates; the crossover power ``P_cr`` bounds the useful pump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, EstimatorError, RatioOutOfRangeError, TemperatureOverflowError
from .params import HBAR, K_B, DriveParams, SystemParams, derive_scales
from .sideband import delta_bar, weak_asymmetry_coefficient_printed
from .spectra import SidebandPopulations, SpectralModel, populations
from .steady_state import operating_point

T_MAX = 1e6
RATIO_GUARD = 1e3 * np.finfo(float).eps
NEAR_CRITICAL_FRACTION = 0.5


class Estimator(str, Enum):
    RAW = "ratio_raw"
    CORRECTED = "ratio_backaction_corrected"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"raw": cls.RAW, "corrected": cls.CORRECTED}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValueError(f"unknown estimator {value!r}") from None


class BiasFlag(str, Enum):
    QUANTUM = "quantum_dominated"
    NEAR_CRITICAL = "near_critical"
    CLASSICAL = "classical_dominated"


class Approximation(str, Enum):
    FULL = "full"
    RESOLVED = "resolved"


@dataclass(frozen=True)
class ThermometryResult:
    t_recovered: float
    ratio: float
    method: Estimator
    bias_flag: Optional[BiasFlag] = None
    n_r: float = math.nan
    n_b: float = math.nan


@dataclass(frozen=True)
class CriticalPoint:
    """Quantum-to-classical crossover.

    ``p_cr`` and ``n_cr`` follow ``approx_used``; every variant is kept in
    the remaining fields so reports can show them side by side.
    """

    p_cr: Optional[float]
    n_cr: float
    approx_used: Approximation
    exists: bool
    bracket: float
    p_cr_full: Optional[float]
    p_cr_full_approx: float
    p_cr_resolved: float
    n_cr_exact: float
    n_cr_resolved: float
    weak_pump_bound: float
    kerr_crossover_power: float
    notes: list = field(default_factory=list)


def bose_ratio(temperature, omega_m, hbar=HBAR, k_b=K_B):
    """``n_b / n_r`` for a thermal mode."""
    return np.exp(-hbar * omega_m / (k_b * np.asarray(temperature, dtype=float)))


def bose_populations(temperature, omega_m, hbar=HBAR, k_b=K_B):
    """Thermal sideband pair ``(m_th + 1, m_th)``.

    Keeps full precision where ``bose_ratio`` is within rounding of 1
    (high temperature), because the estimator only needs ``n_b - n_r``.
    """
    m = 1.0 / math.expm1(hbar * omega_m / (k_b * temperature))
    return m + 1.0, m


def temperature_from_ratio(n_r, n_b, omega_m, hbar=HBAR, k_b=K_B, t_max=T_MAX) -> float:
    """Invert the Bose-Einstein ratio: ``T = hbar Omega / (k_B ln(n_r / n_b))``."""
    if not (n_b > 0.0 and n_r > n_b):
        raise RatioOutOfRangeError(
            f"need n_r > n_b > 0 for a positive temperature, got n_r={n_r!r}, n_b={n_b!r}"
        )
    ratio = n_b / n_r
    if 1.0 - ratio < RATIO_GUARD:
        raise TemperatureOverflowError(f"ratio {ratio!r} indistinguishable from 1")
    log_ratio = -math.log1p((n_b - n_r) / n_r)
    t = hbar * omega_m / (k_b * log_ratio)
    if t > t_max:
        raise TemperatureOverflowError(f"recovered temperature {t:.6g} K exceeds {t_max:g} K")
    return t


def backaction_term(model: SpectralModel) -> float:
    """Population added equally to both sidebands by the ``C kappa^2`` term."""
    p = model.params
    big_k = p.kappa**2 + 4.0 * p.omega_m**2
    return 2.0 * model.coop * p.eta * p.kappa**2 * model.coop * p.kappa**2 / big_k**2


def classify_bias(p_op, p_cr, near_fraction=NEAR_CRITICAL_FRACTION) -> BiasFlag:
    if p_cr is None:
        return BiasFlag.QUANTUM
    if p_op > p_cr:
        return BiasFlag.CLASSICAL
    if p_op >= near_fraction * p_cr:
        return BiasFlag.NEAR_CRITICAL
    return BiasFlag.QUANTUM


def estimate_temperature(
    pop: SidebandPopulations,
    model: Optional[SpectralModel] = None,
    method="raw",
    omega_m: Optional[float] = None,
    critical: Optional[CriticalPoint] = None,
    p_op: Optional[float] = None,
    t_max=T_MAX,
) -> ThermometryResult:
    """Temperature from a pair of sideband populations.

    ``method="corrected"`` first removes :func:`backaction_term` from both
    populations, which needs ``model``.
    """
    method = Estimator.parse(method)
    n_r, n_b = pop.n_r, pop.n_b
    if model is not None:
        params = model.params
        hbar, k_b = params.hbar, params.k_b
        omega = params.omega_m if omega_m is None else omega_m
    elif omega_m is None:
        raise ValueError("need either a model or omega_m")
    else:
        hbar, k_b, omega = HBAR, K_B, omega_m
    if method is Estimator.CORRECTED:
        if model is None:
            raise ValueError("backaction correction needs the spectral model")
        b = backaction_term(model)
        n_r, n_b = n_r - b, n_b - b
    t = temperature_from_ratio(n_r, n_b, omega, hbar, k_b, t_max)
    flag = None
    if critical is not None:
        if p_op is None and model is not None:
            p_op = model.drive.p_op
        flag = classify_bias(p_op, critical.p_cr)
    return ThermometryResult(t_recovered=t, ratio=n_b / n_r, method=method, bias_flag=flag,
                             n_r=n_r, n_b=n_b)


def temperature_backaction_corrected(pop: SidebandPopulations, model: SpectralModel,
                                     critical: Optional[CriticalPoint] = None):
    return estimate_temperature(pop, model, Estimator.CORRECTED, critical=critical)


# -- merged asymmetry polynomial and crossover ----------------------------------


def _bracket(p: SystemParams) -> float:
    scales = derive_scales(p)
    big_k = p.kappa**2 + 4.0 * p.omega_m**2
    return (
        128.0 * scales.c0 * scales.a_scale**2 * p.kappa * p.omega_m * p.eta * p.g0**2 / big_k**2
        - 1.0
    )


def merged_asymmetry_coefficients(p: SystemParams, d: DriveParams):
    """``(linear, quadratic)`` with ``dn = linear * P - quadratic * P^2``.

    The quadratic coefficient combines the frequency-inequivalence loss
    (positive) with the amplitude-inequivalence gain (the ``-1``).
    """
    scales = derive_scales(p)
    big_k = p.kappa**2 + 4.0 * p.omega_m**2
    hw = p.hbar * d.omega_l
    linear = 8.0 * scales.c0 * p.eta**2 * p.kappa / (hw * big_k)
    quadratic = weak_asymmetry_coefficient_printed(p, d) * _bracket(p)
    return linear, quadratic


def merged_asymmetry(p: SystemParams, d: DriveParams) -> float:
    """Red/blue population difference from the merged quantum + classical polynomial."""
    if d.detuning != 0.0:
        raise DomainError("merged asymmetry is derived for resonant drive")
    linear, quadratic = merged_asymmetry_coefficients(p, d)
    return linear * d.p_op - quadratic * d.p_op**2


def critical_point(p: SystemParams, d: DriveParams, approx="full") -> CriticalPoint:
    """Crossover power and intracavity photon number.

    ``p_cr_full`` is the non-trivial zero of the merged polynomial, i.e. the
    power at which the classical quadratic term cancels the quantum linear
    one; the polynomial's maximum sits at half that power.
    """
    approx = Approximation(approx)
    scales = derive_scales(p)
    big_k = p.kappa**2 + 4.0 * p.omega_m**2
    hw = p.hbar * d.omega_l
    bracket = _bracket(p)
    exists = bracket > 0.0
    p_full = None
    if exists:
        p_full = (
            4.0 * hw * scales.c0 * p.kappa**2 * p.omega_m * scales.a_scale**2 / big_k / bracket
        )
    p_full_approx = hw * p.kappa * big_k / (32.0 * p.eta * p.g0**2)
    p_resolved = hw * p.kappa * p.omega_m**2 / (8.0 * p.eta * p.g0**2)
    n_exact = big_k / (8.0 * p.g0**2)
    n_resolved = p.omega_m**2 / (2.0 * p.g0**2)
    notes = []
    if not exists:
        notes.append("no crossover: classical term never overtakes the quantum term")
    if p.kappa >= p.omega_m:
        notes.append("unresolved (Doppler) cavity: sidebands essentially do not form")
    if approx is Approximation.FULL:
        chosen_p, chosen_n = p_full, n_exact
    else:
        chosen_p, chosen_n = (p_resolved if exists else None), n_resolved
    return CriticalPoint(
        p_cr=chosen_p,
        n_cr=chosen_n,
        approx_used=approx,
        exists=exists,
        bracket=bracket,
        p_cr_full=p_full,
        p_cr_full_approx=p_full_approx,
        p_cr_resolved=p_resolved,
        n_cr_exact=n_exact,
        n_cr_resolved=n_resolved,
        weak_pump_bound=scales.a_scale**2 * p.kappa * hw / p.eta,
        kerr_crossover_power=scales.a_scale * p.kappa * hw / (4.0 * p.eta),
        notes=notes,
    )


# -- bias sweep ---------------------------------------------------------------


@dataclass(frozen=True)
class BiasRow:
    p_op: float
    n_bar: float
    delta_bar: float
    dn: float
    t_raw: float
    t_corr: float
    flag: BiasFlag
    delta_bar_unreliable: bool = False
    error: str = ""

    def as_csv_row(self):
        return [self.p_op, self.n_bar, self.delta_bar, self.dn, self.t_raw, self.t_corr,
                self.flag.value, int(self.delta_bar_unreliable), self.error]


BIAS_COLUMNS = ["p_op_w", "n_bar", "delta_bar", "dn", "t_raw_k", "t_corr_k", "flag",
                "delta_bar_unreliable", "error"]


def bias_point(p: SystemParams, temperature: float, p_op: float,
               critical: Optional[CriticalPoint] = None, use_shift=True) -> BiasRow:
    d = DriveParams.from_cavity(p, p_op, 0.0)
    if critical is None:
        critical = critical_point(p, d)
    model = SpectralModel.from_operating_point(p, d, operating_point(p, d), temperature)
    db = delta_bar(p, model.op_point.g_enhanced)
    pop = populations(model, use_shift=use_shift)
    errors = []
    t_vals = []
    for method in (Estimator.RAW, Estimator.CORRECTED):
        try:
            t_vals.append(estimate_temperature(pop, model, method).t_recovered)
        except EstimatorError as exc:
            t_vals.append(math.nan)
            errors.append(f"{method.name.lower()}: {exc}")
    return BiasRow(
        p_op=p_op,
        n_bar=model.n_bar,
        delta_bar=db.value,
        dn=pop.dn,
        t_raw=t_vals[0],
        t_corr=t_vals[1],
        flag=classify_bias(p_op, critical.p_cr),
        delta_bar_unreliable=not db.reliable,
        error="; ".join(errors),
    )


def bias_curve(p: SystemParams, temperature: float, power_grid: Sequence[float],
               use_shift=True, jobs: int = 1):
    """Recovered temperature versus pump power at resonant drive.

    Per-point estimator failures are recorded in the row's ``error`` field.
    Output order follows ``power_grid`` regardless of ``jobs``.
    """
    grid = [float(x) for x in power_grid]
    if not grid:
        return []
    critical = critical_point(p, DriveParams.from_cavity(p, grid[0], 0.0))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        from functools import partial

        work = partial(bias_point, p, temperature, critical=critical, use_shift=use_shift)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, grid))
    return [bias_point(p, temperature, x, critical, use_shift) for x in grid]

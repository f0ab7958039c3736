"""Sideband inequivalence in frequency and amplitude.

The normalized inequivalence ``delta_bar = delta / omega_m`` is modelled as

    delta_bar = (2 Gamma^2 + 8 g^2) / (gamma^2 + 4 Omega^2 (1 - 2 (g/Omega)^2)^2)

with ``gamma = kappa + Gamma`` and ``g = g0 sqrt(n)``. The expression peaks
at ``g = Omega/sqrt(2)`` and is not trustworthy close to that point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError
from .params import DriveParams, SystemParams, derive_scales
from .steady_state import OperatingPoint, operating_point

RESONANT_G_OVER_OMEGA = 1.0 / math.sqrt(2.0)
DEFAULT_EXCLUSION_BAND = 0.1


class DeltaBar(NamedTuple):
    value: float
    reliable: bool


class AsymptoticDeltaBar(NamedTuple):
    value: float
    valid: bool


@dataclass(frozen=True)
class SidebandState:
    delta_r: float
    delta_b: float
    delta_ineq: float
    delta_bar: float
    visible: bool
    dn_nonlinear: float
    provenance: str = "model"  # "model" (from delta_bar) or "measured"
    reliable: bool = True


def delta_bar(p: SystemParams, g_enhanced, exclusion_band=DEFAULT_EXCLUSION_BAND) -> DeltaBar:
    """Normalized inequivalence at enhanced coupling ``g_enhanced`` (scalar or array)."""
    g = np.asarray(g_enhanced, dtype=float)
    gamma_tot = p.kappa + p.gamma_m
    x = g / p.omega_m
    value = (2.0 * p.gamma_m**2 + 8.0 * g * g) / (
        gamma_tot**2 + 4.0 * p.omega_m**2 * (1.0 - 2.0 * x * x) ** 2
    )
    reliable = np.abs(x - RESONANT_G_OVER_OMEGA) >= exclusion_band
    if value.ndim == 0:
        return DeltaBar(float(value), bool(reliable))
    return DeltaBar(value, reliable)


def delta_bar_asymptotic(p: SystemParams, g, branch: str) -> AsymptoticDeltaBar:
    """Weak (``2 g^2/Omega^2``) or strong (``Omega^2 / 2 g^2``) coupling limit.

    ``valid`` is false outside ``g/Omega < 0.1`` (weak) or ``g/Omega > 1``
    (strong), or for an unresolved cavity.
    """
    ratio = g / p.omega_m
    resolved = p.kappa < p.omega_m
    if branch == "weak":
        return AsymptoticDeltaBar(2.0 * ratio * ratio, bool(resolved and ratio < 0.1))
    if branch == "strong":
        if g == 0:
            return AsymptoticDeltaBar(math.inf, False)
        return AsymptoticDeltaBar(1.0 / (2.0 * ratio * ratio), bool(resolved and ratio > 1.0))
    raise ValueError(f"unknown branch {branch!r}")


@dataclass(frozen=True)
class DeltaBarPower:
    value: float
    reliable: bool
    n_bar: float
    g_enhanced: float
    weak_closed_form: float
    strong_closed_form: float


def delta_bar_weak_power(p: SystemParams, d: DriveParams) -> float:
    """Low-power law ``8 g0^2 eta P / (hbar omega kappa Omega^2)``."""
    return 8.0 * p.g0**2 * p.eta * d.p_op / (p.hbar * d.omega_l * p.kappa * p.omega_m**2)


def delta_bar_strong_power(p: SystemParams, d: DriveParams) -> float:
    """High-power law ``(hbar omega Omega^4 / (2 eta g0^2 kappa P))^(1/3)``."""
    if d.p_op == 0:
        return math.inf
    return (
        p.hbar * d.omega_l * p.omega_m**4 / (2.0 * p.eta * p.g0**2 * p.kappa * d.p_op)
    ) ** (1.0 / 3.0)


def delta_bar_vs_power(p: SystemParams, d: DriveParams, branch: str = "low") -> DeltaBarPower:
    """Chain the steady state into ``delta_bar``; resonant drive only."""
    if d.detuning != 0.0:
        raise DomainError("delta_bar_vs_power is defined for resonant drive")
    op = operating_point(p, d, branch)
    db = delta_bar(p, op.g_enhanced)
    return DeltaBarPower(
        value=db.value,
        reliable=db.reliable,
        n_bar=op.n_bar,
        g_enhanced=op.g_enhanced,
        weak_closed_form=delta_bar_weak_power(p, d),
        strong_closed_form=delta_bar_strong_power(p, d),
    )


def visibility(p: SystemParams, delta_ineq: float) -> bool:
    """Inequivalence is directly resolvable when it exceeds the sideband linewidth."""
    return delta_ineq > p.beta_lw


def detunings(d: DriveParams, p: SystemParams, delta_ineq: float):
    """Red and blue sideband offsets ``(Delta + Omega + delta/2, Delta - Omega + delta/2)``."""
    half = 0.5 * delta_ineq
    return d.detuning + p.omega_m + half, d.detuning - p.omega_m + half


def amplitude_asymmetry_nl(n_bar, delta_bar_value):
    """Classical population excess of the red sideband, ``n * delta_bar``."""
    return n_bar * delta_bar_value


def strong_asymmetry_plateau(p: SystemParams) -> float:
    return p.omega_m**2 / (2.0 * p.g0**2)


def weak_asymmetry_coefficient(p: SystemParams, d: DriveParams) -> float:
    """``dn / P^2`` obtained by chaining the weak-pump photon number into ``n * delta_bar``.

    Equals ``32 eta^2 g0^2 / (hbar^2 omega^2 kappa^2 Omega^2)``.
    """
    hw = p.hbar * d.omega_l
    return 32.0 * p.eta**2 * p.g0**2 / (hw**2 * p.kappa**2 * p.omega_m**2)


def weak_asymmetry_coefficient_printed(p: SystemParams, d: DriveParams) -> float:
    """The textbook form ``2 eta^2 / (hbar^2 omega^2 A^2 kappa Omega)``.

    Smaller than :func:`weak_asymmetry_coefficient` by the factor ``4A``
    (``A = Omega kappa / 4 g0^2``); kept because the merged
    quantum+classical polynomial is built on it.
    """
    a = derive_scales(p).a_scale
    hw = p.hbar * d.omega_l
    return 2.0 * p.eta**2 / (hw**2 * a**2 * p.kappa * p.omega_m)


def sideband_state(
    p: SystemParams,
    d: DriveParams,
    op: Optional[OperatingPoint] = None,
    measured_delta: Optional[float] = None,
    exclusion_band=DEFAULT_EXCLUSION_BAND,
) -> SidebandState:
    """Collect detunings, inequivalence and visibility for one operating point.

    ``measured_delta`` replaces the modelled inequivalence (e.g. from fitted
    peak centres); the state then records ``provenance="measured"``.
    """
    if op is None:
        op = operating_point(p, d)
    db = delta_bar(p, op.g_enhanced, exclusion_band)
    if measured_delta is None:
        delta_ineq = db.value * p.omega_m
        provenance, reliable = "model", db.reliable
    else:
        delta_ineq = float(measured_delta)
        provenance, reliable = "measured", True
    d_r, d_b = detunings(d, p, delta_ineq)
    dbar = delta_ineq / p.omega_m
    return SidebandState(
        delta_r=d_r,
        delta_b=d_b,
        delta_ineq=delta_ineq,
        delta_bar=dbar,
        visible=visibility(p, delta_ineq),
        dn_nonlinear=amplitude_asymmetry_nl(op.n_bar, dbar),
        provenance=provenance,
        reliable=reliable,
    )

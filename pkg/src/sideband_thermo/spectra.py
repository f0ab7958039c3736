"""Heterodyne sideband spectra.

Spectra are dimensionless and normalized so the shot-noise background is
exactly 1/2. The red (Stokes) sideband sits at positive offset ``w = +Omega``
and carries the ``m_th + 1`` weight; the blue one sits at ``w = -Omega`` with
weight ``m_th``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .params import HBAR, K_B, DriveParams, SystemParams, derive_scales
from .sideband import delta_bar
from .steady_state import OperatingPoint, operating_point

SHOT_NOISE_FLOOR = 0.5


def chi(w, p: SystemParams):
    """Mechanical response ``Omega / (Omega^2 - w^2 - i w Gamma)``."""
    w = np.asarray(w, dtype=float)
    # (Omega - w)(Omega + w) avoids cancellation near the resonance
    out = p.omega_m / ((p.omega_m - w) * (p.omega_m + w) - 1j * w * p.gamma_m)
    return out if out.ndim else complex(out)


def m_th(omega_m: float, temperature: float, hbar=None, k_b=None) -> float:
    """Bose-Einstein occupation of a mode at ``omega_m`` and ``temperature``."""
    hbar = HBAR if hbar is None else hbar
    k_b = K_B if k_b is None else k_b
    if not temperature > 0:
        raise DomainError(f"temperature must be > 0 K, got {temperature!r}")
    x = hbar * omega_m / (k_b * temperature)
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class SpectralModel:
    params: SystemParams
    drive: DriveParams
    op_point: OperatingPoint
    temperature: float
    m_th: float
    coop: float

    @classmethod
    def from_drive(cls, p: SystemParams, d: DriveParams, temperature: float, branch="low"):
        return cls.from_operating_point(p, d, operating_point(p, d, branch), temperature)

    @classmethod
    def from_operating_point(cls, p, d, op: OperatingPoint, temperature: float):
        c0 = derive_scales(p).c0
        occ = m_th(p.omega_m, temperature, p.hbar, p.k_b)
        return cls(params=p, drive=d, op_point=op, temperature=temperature, m_th=occ,
                   coop=op.n_bar * c0)

    @property
    def n_bar(self):
        return self.op_point.n_bar


@dataclass(frozen=True)
class SidebandPopulations:
    n_r: float
    n_b: float
    dn: float
    shift_corrected: bool
    delta_ineq: float = 0.0
    source: str = "closed_form"

    @classmethod
    def of(cls, n_r, n_b, shift_corrected=False, delta_ineq=0.0, source="closed_form"):
        return cls(n_r=n_r, n_b=n_b, dn=n_r - n_b, shift_corrected=shift_corrected,
                   delta_ineq=delta_ineq, source=source)


def c_eff(w, model: SpectralModel):
    """Frequency-dependent cooperativity ``C / (1 - 2 i w / kappa)^2``."""
    w = np.asarray(w, dtype=float)
    out = model.coop / (1.0 - 2j * w / model.params.kappa) ** 2
    return out if out.ndim else complex(out)


def _abs_c_eff(w, model):
    kappa = model.params.kappa
    return model.coop * kappa**2 / (kappa**2 + 4.0 * w * w)


def s_qq(w, model: SpectralModel):
    """Mechanical spectral density with the ``+1`` emission term on ``w > 0``."""
    w = np.asarray(w, dtype=float)
    if np.any(w == 0.0):
        raise DomainError("s_qq is undefined at w = 0 (branch point)")
    p = model.params
    chi_sq = p.omega_m**2 / (((p.omega_m - w) * (p.omega_m + w)) ** 2 + (w * p.gamma_m) ** 2)
    weight = model.m_th + _abs_c_eff(w, model) + (w > 0)
    out = 2.0 * p.gamma_m * chi_sq * weight
    return out if out.ndim else float(out)


def _scattered(w, model):
    p = model.params
    return p.eta * p.gamma_m * _abs_c_eff(w, model) * s_qq(w, model)


def s_rr(w, model: SpectralModel, detuning: float = 0.0):
    """Red-sideband contribution, non-zero on the Stokes side ``w + detuning > 0``."""
    w = np.asarray(w, dtype=float)
    shifted = w + detuning
    out = np.zeros_like(shifted)
    mask = shifted > 0.0
    out[mask] = _scattered(shifted[mask], model)
    return out if out.ndim else float(out)


def s_bb(w, model: SpectralModel, detuning: float = 0.0):
    """Blue-sideband contribution, non-zero on the anti-Stokes side ``w - detuning < 0``."""
    w = np.asarray(w, dtype=float)
    shifted = w - detuning
    out = np.zeros_like(shifted)
    mask = shifted < 0.0
    out[mask] = _scattered(shifted[mask], model)
    return out if out.ndim else float(out)


def s_het(w, model: SpectralModel, detuning: float = 0.0):
    """Total heterodyne spectrum ``1/2 + S_RR + S_BB``."""
    return SHOT_NOISE_FLOOR + s_rr(w, model, detuning) + s_bb(w, model, detuning)


# -- resonant-drive closed forms ------------------------------------------------


def _closed_form(w, model, occupation):
    p = model.params
    w = np.asarray(w, dtype=float)
    kappa_sq = p.kappa**2
    lor = kappa_sq + 4.0 * w * w
    mech = ((p.omega_m - w) * (p.omega_m + w)) ** 2 + (w * p.gamma_m) ** 2
    pref = 2.0 * model.coop * p.eta * p.gamma_m**2 * kappa_sq * p.omega_m**2 / lor**2
    out = pref * (occupation * lor + model.coop * kappa_sq) / mech
    return out if out.ndim else float(out)


def s_rr_closed(w, model: SpectralModel):
    """Resonant-drive red sideband written out in closed form (even in ``w``)."""
    return _closed_form(w, model, model.m_th + 1.0)


def s_bb_closed(w, model: SpectralModel):
    """Resonant-drive blue sideband written out in closed form (even in ``w``)."""
    return _closed_form(w, model, model.m_th)


@dataclass(frozen=True)
class PeakValues:
    """Sideband heights at ``w = +-Omega`` and their ``Omega`` derivatives."""

    red: float
    blue: float
    d_red: float
    d_blue: float


def peak_values(model: SpectralModel, omega_m: Optional[float] = None) -> PeakValues:
    """Closed-form peak heights as functions of the mechanical frequency.

    Occupation and cooperativity are held fixed; only the explicit
    ``Omega`` dependence through ``kappa^2 + 4 Omega^2`` is differentiated.
    """
    p = model.params
    om = p.omega_m if omega_m is None else omega_m
    kappa_sq = p.kappa**2
    big_k = kappa_sq + 4.0 * om * om
    c, eta, m = model.coop, p.eta, model.m_th
    backaction = c * kappa_sq
    pref = 2.0 * c * eta * kappa_sq
    red = pref * ((m + 1.0) * big_k + backaction) / big_k**2
    blue = pref * (m * big_k + backaction) / big_k**2
    dk = 8.0 * om
    d_red = pref * (-(m + 1.0) * dk / big_k**2 - 2.0 * backaction * dk / big_k**3)
    d_blue = pref * (-m * dk / big_k**2 - 2.0 * backaction * dk / big_k**3)
    return PeakValues(red=red, blue=blue, d_red=d_red, d_blue=d_blue)


def model_delta(model: SpectralModel) -> float:
    """Inequivalence ``delta`` implied by the operating point."""
    return delta_bar(model.params, model.op_point.g_enhanced).value * model.params.omega_m


def populations(model: SpectralModel, use_shift: bool = False,
                delta_ineq: Optional[float] = None) -> SidebandPopulations:
    """Sideband populations at resonant drive.

    With ``use_shift`` each sideband height is Taylor-corrected to first
    order for the inequivalence shift ``delta/2``:
    ``n = S(Omega) + (delta/2) dS/dOmega``. ``delta_ineq`` defaults to the
    modelled inequivalence; pass a measured value to override it.
    """
    if model.drive.detuning != 0.0:
        raise DomainError("sideband populations are defined for resonant drive only")
    pv = peak_values(model)
    if not use_shift:
        return SidebandPopulations.of(pv.red, pv.blue, shift_corrected=False)
    delta = model_delta(model) if delta_ineq is None else float(delta_ineq)
    half = 0.5 * delta
    return SidebandPopulations.of(
        pv.red + half * pv.d_red,
        pv.blue + half * pv.d_blue,
        shift_corrected=True,
        delta_ineq=delta,
    )


def quantum_asymmetry(model: SpectralModel) -> float:
    """``2 C eta kappa^2 / (kappa^2 + 4 Omega^2)``: the red excess from the ``+1`` term."""
    p = model.params
    return 2.0 * model.coop * p.eta * p.kappa**2 / (p.kappa**2 + 4.0 * p.omega_m**2)


@dataclass(frozen=True)
class AsymmetryExpansion:
    """``dn = linear * x - quadratic * x^2`` in photon number and in pump power."""

    linear_n: float
    quadratic_n: float
    linear_p: float
    quadratic_p: float


def asymmetry_expansion(p: SystemParams, d: DriveParams) -> AsymmetryExpansion:
    """Shift-corrected red/blue asymmetry to second order at weak pump."""
    c0 = derive_scales(p).c0
    big_k = p.kappa**2 + 4.0 * p.omega_m**2
    hw = p.hbar * d.omega_l
    return AsymmetryExpansion(
        linear_n=2.0 * c0 * p.eta * p.kappa**2 / big_k,
        quadratic_n=16.0 * c0 * p.eta * p.kappa**2 * p.g0**2 / big_k**2,
        linear_p=8.0 * c0 * p.eta**2 * p.kappa / (hw * big_k),
        quadratic_p=256.0 * c0 * p.eta**3 * p.g0**2 / (hw**2 * big_k**2),
    )


def spectrum_table(w, model: SpectralModel, detuning: float = 0.0):
    """Columns ``(w, s_het, s_rr, s_bb)`` as a 2-D array."""
    w = np.asarray(w, dtype=float)
    rr = s_rr(w, model, detuning)
    bb = s_bb(w, model, detuning)
    return np.column_stack([w, SHOT_NOISE_FLOOR + rr + bb, rr, bb])

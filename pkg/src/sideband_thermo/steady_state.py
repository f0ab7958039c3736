"""Intracavity steady state.

The intracavity photon number ``n`` solves

    alpha^2 = n * (kappa^2/4 + (K n + detuning)^2),
    K = 2 g0^2 omega_m / (omega_m^2 + gamma_m^2/4),

with ``alpha^2 = eta kappa P / (hbar omega_l)``. For ``detuning >= 0`` there
is exactly one positive root; for sufficiently blue detuning the cubic has
three (optical bistability).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from scipy.optimize import brentq

from .cubic import newton_polish, real_roots
from .errors import DomainError, SolverError
from .params import DriveParams, SystemParams, derive_scales

RESIDUAL_RTOL = 1e-9


class Branch(str, Enum):
    UNIQUE = "unique"
    BISTABLE_LOW = "bistable_low"
    BISTABLE_MID = "bistable_mid"  # unstable
    BISTABLE_HIGH = "bistable_high"


@dataclass(frozen=True)
class OperatingPoint:
    alpha: float
    n_bar: float
    g_enhanced: float
    branch: Branch
    residual: float = 0.0


def kerr_coefficient(p: SystemParams) -> float:
    """Frequency pull per intracavity photon, ``2 g0^2 omega_m / (omega_m^2 + gamma_m^2/4)``."""
    return 2.0 * p.g0**2 * p.omega_m / (p.omega_m**2 + 0.25 * p.gamma_m**2)


def photon_flux(p: SystemParams, d: DriveParams) -> float:
    """Incident photon flux amplitude ``sqrt(eta kappa P / hbar omega_l)``."""
    return math.sqrt(p.eta * p.kappa * d.p_op / (p.hbar * d.omega_l))


def cubic_coefficients(p: SystemParams, detuning: float, alpha_sq: float):
    k = kerr_coefficient(p)
    return (k * k, 2.0 * k * detuning, 0.25 * p.kappa**2 + detuning**2, -alpha_sq)


def cubic_residual(p: SystemParams, d: DriveParams, n_bar, alpha_sq=None):
    """``alpha^2 - n (kappa^2/4 + (K n + detuning)^2)``; vectorises over ``n_bar``."""
    if alpha_sq is None:
        alpha_sq = photon_flux(p, d) ** 2
    k = kerr_coefficient(p)
    return alpha_sq - n_bar * (0.25 * p.kappa**2 + (k * n_bar + d.detuning) ** 2)


def _labels(count):
    if count == 1:
        return [Branch.UNIQUE]
    if count == 2:
        return [Branch.BISTABLE_LOW, Branch.BISTABLE_HIGH]
    return [Branch.BISTABLE_LOW, Branch.BISTABLE_MID, Branch.BISTABLE_HIGH]


def solve_n_bar(p: SystemParams, d: DriveParams) -> List[OperatingPoint]:
    """All positive steady-state photon numbers, ascending.

    Returns a single :class:`OperatingPoint` outside the bistable window and
    three inside it (middle one unstable).
    """
    alpha = photon_flux(p, d)
    alpha_sq = alpha * alpha
    if alpha_sq == 0.0:
        return [OperatingPoint(alpha=0.0, n_bar=0.0, g_enhanced=0.0, branch=Branch.UNIQUE)]

    coeffs = cubic_coefficients(p, d.detuning, alpha_sq)
    k = kerr_coefficient(p)
    quarter_kappa_sq = 0.25 * p.kappa**2
    detuning = d.detuning

    # factored form: the expanded polynomial cancels badly near double roots
    def f(n):
        return n * (quarter_kappa_sq + (k * n + detuning) ** 2) - alpha_sq

    def df(n):
        shifted = k * n + detuning
        return quarter_kappa_sq + shifted * shifted + 2.0 * k * n * shifted

    tol = RESIDUAL_RTOL * max(alpha_sq, 1.0)
    roots = []
    for n in real_roots(*coeffs):
        if n <= 0.0:
            continue
        n = newton_polish(f, df, n, steps=2)
        res = cubic_residual(p, d, n, alpha_sq)
        if abs(res) > tol:
            n = newton_polish(f, df, n, steps=50)
            res = cubic_residual(p, d, n, alpha_sq)
        if abs(res) > tol:
            raise SolverError(
                f"steady-state root n={n!r} has residual {res!r} above {tol!r}"
            )
        roots.append((n, res))
    expected = _expected_root_count(p.kappa, detuning, alpha_sq * k)
    if len(roots) != expected:
        roots = _bracketed_roots(f, p.kappa, k, detuning, alpha_sq)
    if not roots:
        raise SolverError("no positive steady-state root for alpha > 0")
    if d.detuning >= 0.0 and len(roots) > 1:
        # only one root is mathematically possible here; keep the best
        roots = [min(roots, key=lambda r: abs(r[1]))]
    return [
        OperatingPoint(
            alpha=alpha,
            n_bar=n,
            g_enhanced=p.g0 * math.sqrt(n),
            branch=label,
            residual=res,
        )
        for (n, res), label in zip(roots, _labels(len(roots)))
    ]


def _expected_root_count(kappa, detuning, target):
    if detuning >= -math.sqrt(3.0) * kappa / 2.0:
        return 1
    h_max, h_min = _turning_values(kappa, detuning)
    return 3 if h_min < target < h_max else 1


def _bracketed_roots(f, kappa, k, detuning, alpha_sq):
    """Fallback when the discriminant sign is lost to rounding near a double root."""
    upper = 4.0 * alpha_sq / kappa**2 * (1.0 + 1e-9)
    edges = [0.0, upper]
    if detuning < -math.sqrt(3.0) * kappa / 2.0:
        s = math.sqrt(detuning * detuning - 0.75 * kappa * kappa)
        n_max = (-2.0 * detuning - s) / (3.0 * k)
        n_min = (-2.0 * detuning + s) / (3.0 * k)
        edges = [0.0, n_max, n_min, max(upper, 2.0 * n_min)]
    roots = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        f_lo, f_hi = f(lo), f(hi)
        if f_lo == 0.0 and lo > 0.0:
            roots.append((lo, 0.0))
        elif f_lo * f_hi < 0.0:
            n = brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
            roots.append((n, -f(n)))
    return roots


def operating_point(p: SystemParams, d: DriveParams, branch: str = "low") -> OperatingPoint:
    """Single operating point; ``branch`` picks low/mid/high inside the bistable window."""
    points = solve_n_bar(p, d)
    if len(points) == 1:
        return points[0]
    index = {"low": 0, "mid": 1, "high": -1}[branch]
    if branch == "mid" and len(points) < 3:
        raise DomainError("no middle branch at this operating point")
    return points[index]


# -- resonant-pump asymptotes --------------------------------------------------


@dataclass(frozen=True)
class AsymptoticResult:
    n_bar: float
    branch: str
    printed_bound: float
    crossover_power: float
    margin: float
    valid: bool


def kerr_crossover_power(p: SystemParams, d: DriveParams) -> float:
    """Pump power at which the linear and cubic terms of the resonant cubic balance.

    Below it ``n`` grows linearly with power, above it as the cube root.
    Equals ``A kappa hbar omega / (4 eta)``.
    """
    a = derive_scales(p).a_scale
    return a * p.kappa * p.hbar * d.omega_l / (4.0 * p.eta)


def n_bar_asymptotic(p: SystemParams, d: DriveParams, branch: str) -> AsymptoticResult:
    """Weak- or strong-pump closed form for the resonant photon number.

    ``printed_bound`` carries the textbook validity thresholds
    ``A^2 kappa hbar omega / eta`` (weak) and ``A^4 kappa hbar omega / eta``
    (strong). ``valid`` is judged against :func:`kerr_crossover_power`, the
    threshold obtained by balancing the terms of the cubic, with a factor of
    ten margin.
    """
    if d.detuning != 0.0:
        raise DomainError("pump-power asymptotes are derived for resonant drive only")
    scales = derive_scales(p)
    a = scales.a_scale
    hw = p.hbar * d.omega_l
    crossover = kerr_crossover_power(p, d)
    if branch == "weak_pump":
        n = 4.0 * p.eta * d.p_op / (hw * p.kappa)
        bound = a**2 * p.kappa * hw / p.eta
        margin = d.p_op / crossover
        valid = margin < 0.1
    elif branch == "strong_pump":
        n = (a * p.eta * p.omega_m / (hw * p.g0**2)) ** (1.0 / 3.0) * d.p_op ** (1.0 / 3.0)
        bound = a**4 * p.kappa * hw / p.eta
        margin = d.p_op / crossover
        valid = margin > 10.0
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return AsymptoticResult(
        n_bar=n, branch=branch, printed_bound=bound, crossover_power=crossover,
        margin=margin, valid=valid,
    )


# -- bistability --------------------------------------------------------------


@dataclass(frozen=True)
class BistabilityReport:
    """Detuning window ``(delta_lower, delta_b)`` with three steady states.

    ``delta_b`` is the critical blue detuning where the window opens when
    coming from red detuning; ``None`` when no window exists at this power.
    """

    delta_b: Optional[float]
    delta_lower: Optional[float]
    threshold_drive: float

    def is_bistable_at(self, detuning: float) -> bool:
        if self.delta_b is None or detuning >= 0.0:
            return False
        return self.delta_lower < detuning < self.delta_b


def _turning_values(kappa, detuning):
    """h(x) = x (kappa^2/4 + (x + detuning)^2) at its local max and min (x = K n)."""
    s = math.sqrt(detuning * detuning - 0.75 * kappa * kappa)
    x_max = (-2.0 * detuning - s) / 3.0
    x_min = (-2.0 * detuning + s) / 3.0
    # x_min + detuning = (detuning + s)/3 computed without cancellation
    shifted_min = (-0.75 * kappa * kappa) / (s - detuning) / 3.0
    h_max = x_max * (0.25 * kappa * kappa + ((detuning - s) / 3.0) ** 2)
    h_min = x_min * (0.25 * kappa * kappa + shifted_min**2)
    return h_max, h_min


def bistability_onset(p: SystemParams, d: DriveParams) -> BistabilityReport:
    """Locate the detuning window in which the steady-state cubic has three roots.

    Works in ``x = K n``. Turning points exist only for
    ``detuning < -sqrt(3) kappa / 2``; the window opens where the local
    maximum of the cubic reaches ``alpha^2 K`` and closes where the local
    minimum does. The pump power is held fixed while the pump frequency
    follows ``omega_c - detuning``, matching ``DriveParams.with_detuning``.
    """
    kappa = p.kappa
    k = kerr_coefficient(p)
    flux_per_hbar = p.eta * kappa * d.p_op / p.hbar

    def target(delta):
        return flux_per_hbar / (p.omega_c - delta) * k

    threshold = kappa**3 / (3.0 * math.sqrt(3.0))
    d0 = -math.sqrt(3.0) * kappa / 2.0
    if target(d0) <= threshold:
        return BistabilityReport(delta_b=None, delta_lower=None, threshold_drive=threshold)

    xtol = 1e-12 * kappa

    def f_open(delta):
        return _turning_values(kappa, delta)[0] - target(delta)

    def f_close(delta):
        return _turning_values(kappa, delta)[1] - target(delta)

    def expand(f):
        lo = d0 - kappa
        while f(lo) < 0.0:
            lo = d0 + 2.0 * (lo - d0)
            if not math.isfinite(lo):
                raise SolverError("failed to bracket bistability edge")
        return lo

    # start just inside the turning-point domain
    start = d0 * (1.0 + 1e-12)
    delta_b = brentq(f_open, expand(f_open), start, xtol=xtol, rtol=1e-15)
    delta_lower = brentq(f_close, expand(f_close), delta_b, xtol=xtol, rtol=1e-15)
    return BistabilityReport(delta_b=delta_b, delta_lower=delta_lower, threshold_drive=threshold)

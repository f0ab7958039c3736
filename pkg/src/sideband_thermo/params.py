"""Device and drive parameters, derived scales and regime labels.

Everything is stored in angular units (rad/s). Values quoted as ``2*pi*f``
can be converted with :func:`hz_to_rad` or loaded from a config section
that declares ``units = "hz"``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Optional

from .errors import ParameterError

TWO_PI = 2.0 * math.pi

#: CODATA 2018 (exact SI definitions).
HBAR = 1.054571817e-34
K_B = 1.380649e-23

WEAK_COUPLING_THRESHOLD = 0.1
STRONG_COUPLING_THRESHOLD = 1.0


def hz_to_rad(f):
    return TWO_PI * f


def rad_to_hz(w):
    return w / TWO_PI


@dataclass(frozen=True)
class Constants:
    hbar: float = HBAR
    k_b: float = K_B

    def __post_init__(self):
        if not (self.hbar > 0 and self.k_b > 0):
            raise ParameterError("physical constants must be positive")


@dataclass(frozen=True)
class SystemParams:
    """Optomechanical device.

    Attributes
    ----------
    omega_m : mechanical angular frequency [rad/s]
    kappa : optical energy decay rate [rad/s]
    gamma_m : mechanical energy decay rate [rad/s]
    g0 : single-photon coupling rate [rad/s]
    omega_c : cavity resonance [rad/s]
    eta : external coupling efficiency, in (0, 1]
    beta_lw : measured sideband linewidth [rad/s]; defaults to ``gamma_m``
    allow_narrow_linewidth : permit ``beta_lw < gamma_m``
    """

    omega_m: float
    kappa: float
    gamma_m: float
    g0: float
    omega_c: float
    eta: float
    beta_lw: Optional[float] = None
    allow_narrow_linewidth: bool = False
    constants: Constants = field(default_factory=Constants)

    def __post_init__(self):
        for name in ("omega_m", "kappa", "gamma_m", "g0", "omega_c"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be a finite positive number, got {value!r}")
        if not (0.0 < self.eta <= 1.0):
            raise ParameterError(f"eta must lie in (0, 1], got {self.eta!r}")
        if self.beta_lw is None:
            object.__setattr__(self, "beta_lw", float(self.gamma_m))
        elif not (math.isfinite(self.beta_lw) and self.beta_lw > 0):
            raise ParameterError(f"beta_lw must be positive, got {self.beta_lw!r}")
        elif self.beta_lw < self.gamma_m and not self.allow_narrow_linewidth:
            raise ParameterError(
                "beta_lw < gamma_m; set allow_narrow_linewidth=True to override"
            )

    @property
    def hbar(self):
        return self.constants.hbar

    @property
    def k_b(self):
        return self.constants.k_b

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedScales:
    gamma_tot: float
    c0: float
    a_scale: float


@dataclass(frozen=True)
class DriveParams:
    """Pump power [W], pump angular frequency and detuning ``omega_c - omega_l``."""

    p_op: float
    omega_l: float
    detuning: float

    def __post_init__(self):
        if not (math.isfinite(self.p_op) and self.p_op >= 0):
            raise ParameterError(f"p_op must be >= 0, got {self.p_op!r}")
        if not (math.isfinite(self.omega_l) and self.omega_l > 0):
            raise ParameterError(f"omega_l must be positive, got {self.omega_l!r}")
        if not math.isfinite(self.detuning):
            raise ParameterError("detuning must be finite")

    @classmethod
    def from_cavity(cls, system: SystemParams, p_op: float, detuning: float = 0.0):
        return cls(p_op=p_op, omega_l=system.omega_c - detuning, detuning=detuning)

    @classmethod
    def build(cls, system, p_op, omega_l=None, detuning=None, rtol=1e-12):
        """Construct from any consistent subset of (omega_l, detuning)."""
        if omega_l is None and detuning is None:
            detuning = 0.0
        if omega_l is None:
            return cls.from_cavity(system, p_op, detuning)
        if detuning is None:
            return cls(p_op=p_op, omega_l=omega_l, detuning=system.omega_c - omega_l)
        expected = system.omega_c - omega_l
        if abs(expected - detuning) > rtol * system.omega_c:
            raise ParameterError(
                f"detuning {detuning!r} inconsistent with omega_c - omega_l = {expected!r}"
            )
        return cls(p_op=p_op, omega_l=omega_l, detuning=detuning)

    def check_against(self, system: SystemParams, rtol=1e-12):
        expected = system.omega_c - self.omega_l
        if abs(expected - self.detuning) > rtol * system.omega_c:
            raise ParameterError("drive detuning does not match omega_c - omega_l")

    def with_power(self, p_op):
        return replace(self, p_op=p_op)

    def with_detuning(self, system, detuning):
        return replace(self, omega_l=system.omega_c - detuning, detuning=detuning)


class CouplingRegime(str, Enum):
    WEAK = "weak"
    CROSSOVER = "crossover"
    STRONG = "strong"


@dataclass(frozen=True)
class RegimeReport:
    sideband_resolved: bool
    coupling_regime: CouplingRegime
    bistable_possible: bool


def derive_scales(p: SystemParams) -> DerivedScales:
    """Total linewidth, single-photon cooperativity and the scale ``A = omega_m kappa / 4 g0^2``."""
    if not isinstance(p, SystemParams):
        raise ParameterError("derive_scales expects SystemParams")
    g0_sq = p.g0 * p.g0
    return DerivedScales(
        gamma_tot=p.kappa + p.gamma_m,
        c0=4.0 * g0_sq / (p.kappa * p.gamma_m),
        a_scale=p.omega_m * p.kappa / (4.0 * g0_sq),
    )


def coupling_regime(g_over_omega, weak=WEAK_COUPLING_THRESHOLD, strong=STRONG_COUPLING_THRESHOLD):
    if g_over_omega < weak:
        return CouplingRegime.WEAK
    if g_over_omega > strong:
        return CouplingRegime.STRONG
    return CouplingRegime.CROSSOVER


def classify_regime(
    p: SystemParams,
    g_enhanced: float,
    detuning: float,
    drive: Optional[DriveParams] = None,
    weak_threshold=WEAK_COUPLING_THRESHOLD,
    strong_threshold=STRONG_COUPLING_THRESHOLD,
) -> RegimeReport:
    """Label sideband resolution, coupling strength and bistability.

    Without ``drive`` the bistability flag uses the power-independent
    necessary condition ``detuning < -sqrt(3) kappa / 2``; with it the
    actual root count of the steady-state cubic decides.
    """
    if not g_enhanced >= 0:
        raise ParameterError(f"g_enhanced must be >= 0, got {g_enhanced!r}")
    if drive is None:
        bistable = detuning < -math.sqrt(3.0) * p.kappa / 2.0
    else:
        from .steady_state import bistability_onset

        report = bistability_onset(p, drive.with_detuning(p, detuning))
        bistable = report.is_bistable_at(detuning)
    return RegimeReport(
        sideband_resolved=p.kappa < p.omega_m,
        coupling_regime=coupling_regime(g_enhanced / p.omega_m, weak_threshold, strong_threshold),
        bistable_possible=bistable,
    )


# -- unit conversion for config round trips ---------------------------------

SYSTEM_FREQUENCY_FIELDS = ("omega_m", "kappa", "gamma_m", "g0", "omega_c", "beta_lw")
DRIVE_FREQUENCY_FIELDS = ("omega_l", "detuning")


def section_to_rad(values: dict, frequency_fields, units: str) -> dict:
    """Return a copy of ``values`` with frequency fields in rad/s."""
    if units not in ("rad_s", "hz"):
        raise ParameterError(f"units must be 'rad_s' or 'hz', got {units!r}")
    out = dict(values)
    if units == "hz":
        for key in frequency_fields:
            if out.get(key) is not None:
                out[key] = hz_to_rad(out[key])
    return out


def section_from_rad(values: dict, frequency_fields, units: str) -> dict:
    if units not in ("rad_s", "hz"):
        raise ParameterError(f"units must be 'rad_s' or 'hz', got {units!r}")
    out = dict(values)
    if units == "hz":
        for key in frequency_fields:
            if out.get(key) is not None:
                out[key] = rad_to_hz(out[key])
    return out


def system_as_dict(p: SystemParams) -> dict:
    return {f.name: getattr(p, f.name) for f in fields(p) if f.name != "constants"}


def drive_as_dict(d: DriveParams) -> dict:
    return asdict(d)


# -- reference devices --------------------------------------------------------


def reference_params(**overrides) -> SystemParams:
    """Superconducting electromechanical device used for the critical-power example."""
    values = dict(
        omega_m=hz_to_rad(5.33e6),
        kappa=hz_to_rad(118e3),
        gamma_m=hz_to_rad(30.0),
        g0=hz_to_rad(60.0),
        omega_c=hz_to_rad(4.26e9),
        eta=0.76,
    )
    values.update(overrides)
    return SystemParams(**values)

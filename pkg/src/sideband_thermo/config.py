"""Run configuration (TOML).

Example::

    units = "hz"            # frequencies below are f, not 2*pi*f

    [system]
    omega_m = 5.33e6
    kappa = 118e3
    gamma_m = 30.0
    g0 = 60.0
    omega_c = 4.26e9
    eta = 0.76

    [drive]
    p_op = 1e-12
    detuning = 0.0

    [thermometry]
    temperature = 0.1
    estimator = "corrected"

    [sweep]
    quantity = "p_op"       # p_op | detuning | temperature
    min = 1e-15
    max = 1e-6
    points = 50
    scale = "log"

    [acquisition]
    n_avg = 100             # omit for a noise-free trace
    seed = 0
    points_per_window = 4096

Internally everything is rad/s; ``units`` only affects parsing and output.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, ParameterError
from .experiment import AcquisitionSpec, GridSpec
from .params import (
    DRIVE_FREQUENCY_FIELDS,
    SYSTEM_FREQUENCY_FIELDS,
    DriveParams,
    SystemParams,
    section_from_rad,
    section_to_rad,
)

SWEEP_QUANTITIES = ("p_op", "detuning", "temperature")
SYSTEM_KEYS = {"omega_m", "kappa", "gamma_m", "g0", "omega_c", "eta", "beta_lw",
               "allow_narrow_linewidth"}
DRIVE_KEYS = {"p_op", "omega_l", "detuning"}
THERMO_KEYS = {"temperature", "estimator", "approx", "shift_correction", "population_mode"}
SWEEP_KEYS = {"quantity", "min", "max", "points", "scale"}
ACQ_KEYS = {"n_avg", "seed", "points_per_window", "half_width", "noise"}
SPECTRUM_KEYS = {"w_min", "w_max", "points"}
TOP_KEYS = {"units", "system", "drive", "thermometry", "sweep", "acquisition", "spectrum"}


@dataclass(frozen=True)
class SweepSpec:
    quantity: str
    min: float
    max: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.quantity not in SWEEP_QUANTITIES:
            raise ConfigError(f"sweep quantity must be one of {SWEEP_QUANTITIES}", key="sweep.quantity")
        if self.points < 2:
            raise ConfigError("sweep needs at least 2 points", key="sweep.points")
        if not self.min < self.max:
            raise ConfigError("sweep requires min < max", key="sweep.min")
        if self.scale not in ("linear", "log"):
            raise ConfigError("sweep scale must be 'linear' or 'log'", key="sweep.scale")
        if self.scale == "log" and self.min <= 0:
            raise ConfigError("log sweep requires min > 0", key="sweep.min")

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class SpectrumSpec:
    w_min: Optional[float] = None
    w_max: Optional[float] = None
    points: int = 4096


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    drive: DriveParams
    units: str = "rad_s"
    temperature: Optional[float] = None
    estimator: str = "raw"
    approx: str = "full"
    shift_correction: bool = True
    population_mode: str = "peak_height"
    sweep: Optional[SweepSpec] = None
    acquisition: AcquisitionSpec = AcquisitionSpec()
    spectrum: SpectrumSpec = SpectrumSpec()
    source: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        """Canonical nested dict in the config's own units (round-trips through :func:`from_dict`)."""
        units = self.units
        system = section_from_rad(
            {k: v for k, v in _system_dict(self.system).items()}, SYSTEM_FREQUENCY_FIELDS, units
        )
        drive = section_from_rad(
            {"p_op": self.drive.p_op, "detuning": self.drive.detuning, "omega_l": self.drive.omega_l},
            DRIVE_FREQUENCY_FIELDS, units,
        )
        out = {"units": units, "system": system, "drive": drive}
        thermo = {"estimator": self.estimator, "approx": self.approx,
                  "shift_correction": self.shift_correction,
                  "population_mode": self.population_mode}
        if self.temperature is not None:
            thermo["temperature"] = self.temperature
        out["thermometry"] = thermo
        if self.sweep is not None:
            sw = {"quantity": self.sweep.quantity, "min": self.sweep.min, "max": self.sweep.max,
                  "points": self.sweep.points, "scale": self.sweep.scale}
            if self.sweep.quantity == "detuning" and units == "hz":
                sw["min"], sw["max"] = sw["min"] / (2 * math.pi), sw["max"] / (2 * math.pi)
            out["sweep"] = sw
        acq = self.acquisition
        a = {"noise": acq.n_avg is not None, "seed": acq.seed,
             "points_per_window": acq.grid.points_per_window}
        if acq.n_avg is not None:
            a["n_avg"] = acq.n_avg
        if acq.grid.half_width is not None:
            a["half_width"] = _from_rad(acq.grid.half_width, units)
        out["acquisition"] = a
        sp = {"points": self.spectrum.points}
        if self.spectrum.w_min is not None:
            sp["w_min"] = _from_rad(self.spectrum.w_min, units)
        if self.spectrum.w_max is not None:
            sp["w_max"] = _from_rad(self.spectrum.w_max, units)
        out["spectrum"] = sp
        return out

    def hash(self) -> str:
        """Short digest of the resolved configuration (rad/s, after overrides)."""
        payload = replace(self, units="rad_s").to_dict()
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=repr)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_overrides(self, **kw) -> "RunConfig":
        """Apply CLI flags. ``None`` values leave the field unchanged."""
        cfg = self
        if kw.get("seed") is not None:
            cfg = replace(cfg, acquisition=replace(cfg.acquisition, seed=kw["seed"]))
        noise = kw.get("noise")
        if noise == "off":
            cfg = replace(cfg, acquisition=replace(cfg.acquisition, n_avg=None))
        elif noise == "on" and cfg.acquisition.n_avg is None:
            raise ConfigError("--noise on needs acquisition.n_avg in the config", key="acquisition.n_avg")
        if kw.get("shift_correction") is not None:
            cfg = replace(cfg, shift_correction=kw["shift_correction"] == "on")
        if kw.get("estimator") is not None:
            cfg = replace(cfg, estimator=kw["estimator"])
        if kw.get("units") is not None:
            cfg = replace(cfg, units=kw["units"])
        acq = replace(cfg.acquisition, estimator=cfg.estimator, shift=cfg.shift_correction,
                      population_mode=cfg.population_mode)
        return replace(cfg, acquisition=acq)


def _system_dict(p: SystemParams) -> dict:
    out = {k: getattr(p, k) for k in ("omega_m", "kappa", "gamma_m", "g0", "omega_c", "eta")}
    if p.beta_lw != p.gamma_m:
        out["beta_lw"] = p.beta_lw
    if p.allow_narrow_linewidth:
        out["allow_narrow_linewidth"] = True
    return out


def _to_rad(x, units):
    return x * 2 * math.pi if units == "hz" else x


def _from_rad(x, units):
    return x / (2 * math.pi) if units == "hz" else x


def _line_of(text: str, key: str) -> Optional[int]:
    if not text:
        return None
    name = key.split(".")[-1]
    for i, line in enumerate(text.splitlines(), 1):
        if re.match(rf"\s*{re.escape(name)}\s*=", line) or line.strip() == f"[{name}]":
            return i
    return None


def _check_keys(section: dict, allowed, prefix, text):
    for key in section:
        if key not in allowed:
            full = f"{prefix}.{key}" if prefix else key
            raise ConfigError("unknown key", key=full, line=_line_of(text, full))


def _number(section, key, prefix, text, required=False, default=None):
    if key not in section:
        if required:
            raise ConfigError("missing required key", key=f"{prefix}.{key}")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number", key=f"{prefix}.{key}",
                          line=_line_of(text, f"{prefix}.{key}"))
    return float(value)


def from_dict(data: dict, text: str = "", units_override: Optional[str] = None) -> RunConfig:
    """Validate a parsed config; ``text`` (the raw file) is only used for line numbers."""
    _check_keys(data, TOP_KEYS, "", text)
    units = units_override or data.get("units", "rad_s")
    if units not in ("rad_s", "hz"):
        raise ConfigError("units must be 'rad_s' or 'hz'", key="units", line=_line_of(text, "units"))

    sys_raw = data.get("system")
    if not isinstance(sys_raw, dict):
        raise ConfigError("missing [system] section", key="system")
    _check_keys(sys_raw, SYSTEM_KEYS, "system", text)
    sys_vals = {k: _number(sys_raw, k, "system", text, required=k != "beta_lw")
                for k in SYSTEM_KEYS - {"allow_narrow_linewidth"}}
    sys_vals = section_to_rad(sys_vals, SYSTEM_FREQUENCY_FIELDS, units)
    try:
        system = SystemParams(**sys_vals,
                              allow_narrow_linewidth=bool(sys_raw.get("allow_narrow_linewidth", False)))
    except ParameterError as exc:
        raise ConfigError(str(exc), key="system") from exc

    drv_raw = data.get("drive", {})
    _check_keys(drv_raw, DRIVE_KEYS, "drive", text)
    drv_vals = {k: _number(drv_raw, k, "drive", text) for k in DRIVE_KEYS}
    drv_vals = section_to_rad(drv_vals, DRIVE_FREQUENCY_FIELDS, units)
    try:
        drive = DriveParams.build(system, drv_vals["p_op"] if drv_vals["p_op"] is not None else 0.0,
                                  omega_l=drv_vals["omega_l"], detuning=drv_vals["detuning"])
    except ParameterError as exc:
        raise ConfigError(str(exc), key="drive") from exc

    th_raw = data.get("thermometry", {})
    _check_keys(th_raw, THERMO_KEYS, "thermometry", text)
    temperature = _number(th_raw, "temperature", "thermometry", text)
    if temperature is not None and not temperature > 0:
        raise ConfigError("temperature must be > 0 K", key="thermometry.temperature",
                          line=_line_of(text, "thermometry.temperature"))
    estimator = th_raw.get("estimator", "raw")
    if estimator not in ("raw", "corrected", "ratio_raw", "ratio_backaction_corrected"):
        raise ConfigError("estimator must be 'raw' or 'corrected'", key="thermometry.estimator")
    approx = th_raw.get("approx", "full")
    if approx not in ("full", "resolved"):
        raise ConfigError("approx must be 'full' or 'resolved'", key="thermometry.approx")
    pop_mode = th_raw.get("population_mode", "peak_height")
    if pop_mode not in ("peak_height", "area"):
        raise ConfigError("population_mode must be 'peak_height' or 'area'",
                          key="thermometry.population_mode")

    sweep = None
    if "sweep" in data:
        sw = data["sweep"]
        _check_keys(sw, SWEEP_KEYS, "sweep", text)
        if not sw:
            raise ConfigError("empty [sweep] section", key="sweep")
        for k in ("quantity", "min", "max", "points"):
            if k not in sw:
                raise ConfigError("missing required key", key=f"sweep.{k}")
        lo = _number(sw, "min", "sweep", text)
        hi = _number(sw, "max", "sweep", text)
        if sw["quantity"] == "detuning":
            lo, hi = _to_rad(lo, units), _to_rad(hi, units)
        sweep = SweepSpec(quantity=sw["quantity"], min=lo, max=hi, points=int(sw["points"]),
                          scale=sw.get("scale", "linear"))

    acq_raw = data.get("acquisition", {})
    _check_keys(acq_raw, ACQ_KEYS, "acquisition", text)
    n_avg = acq_raw.get("n_avg")
    if n_avg is not None and (not isinstance(n_avg, int) or n_avg < 1):
        raise ConfigError("n_avg must be a positive integer", key="acquisition.n_avg",
                          line=_line_of(text, "acquisition.n_avg"))
    if acq_raw.get("noise") is False:
        n_avg = None
    half_width = _number(acq_raw, "half_width", "acquisition", text)
    grid = GridSpec(points_per_window=int(acq_raw.get("points_per_window", 4096)),
                    half_width=None if half_width is None else _to_rad(half_width, units))
    if grid.points_per_window < 20:
        raise ConfigError("points_per_window must be >= 20", key="acquisition.points_per_window")
    shift = bool(th_raw.get("shift_correction", True))
    acq = AcquisitionSpec(n_avg=n_avg, seed=int(acq_raw.get("seed", 0)), grid=grid,
                          estimator=estimator, population_mode=pop_mode, shift=shift)

    sp_raw = data.get("spectrum", {})
    _check_keys(sp_raw, SPECTRUM_KEYS, "spectrum", text)
    w_min = _number(sp_raw, "w_min", "spectrum", text)
    w_max = _number(sp_raw, "w_max", "spectrum", text)
    spectrum = SpectrumSpec(
        w_min=None if w_min is None else _to_rad(w_min, units),
        w_max=None if w_max is None else _to_rad(w_max, units),
        points=int(sp_raw.get("points", 4096)),
    )
    if spectrum.points < 2:
        raise ConfigError("spectrum needs at least 2 points", key="spectrum.points")

    return RunConfig(system=system, drive=drive, units=units, temperature=temperature,
                     estimator=estimator, approx=approx, shift_correction=shift,
                     population_mode=pop_mode, sweep=sweep, acquisition=acq, spectrum=spectrum,
                     source=data)


def loads(text: str, units_override: Optional[str] = None) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", line=int(match.group(1)) if match else None) from exc
    return from_dict(data, text, units_override)


def load(path, units_override: Optional[str] = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return loads(text, units_override)


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def dumps(cfg: RunConfig) -> str:
    """Serialise to TOML (flat tables only, so no writer dependency is needed)."""
    data = cfg.to_dict()
    lines = [f"units = {_toml_value(data.pop('units'))}"]
    for section, values in data.items():
        lines.append("")
        lines.append(f"[{section}]")
        for k, v in values.items():
            if v is not None:
                lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sideband_thermo.errors import ParameterError
from sideband_thermo.params import (
    DRIVE_FREQUENCY_FIELDS,
    SYSTEM_FREQUENCY_FIELDS,
    CouplingRegime,
    DriveParams,
    SystemParams,
    classify_regime,
    derive_scales,
    hz_to_rad,
    section_from_rad,
    section_to_rad,
    reference_params,
)

positive = st.floats(min_value=1e-3, max_value=1e12, allow_nan=False, allow_infinity=False)


def test_reference_values_are_angular():
    p = reference_params()
    assert p.omega_m == pytest.approx(2 * math.pi * 5.33e6, rel=1e-15)
    assert p.beta_lw == p.gamma_m


@given(omega=positive, kappa=positive, gamma=positive, g0=positive)
def test_cooperativity_times_scale(omega, kappa, gamma, g0):
    p = SystemParams(omega_m=omega, kappa=kappa, gamma_m=gamma, g0=g0, omega_c=1e15, eta=0.5)
    s = derive_scales(p)
    assert s.c0 * s.a_scale == pytest.approx(omega / gamma, rel=1e-12)
    assert s.gamma_tot == kappa + gamma


@given(st.dictionaries(st.sampled_from(SYSTEM_FREQUENCY_FIELDS), positive, min_size=1))
def test_unit_round_trip(values):
    back = section_from_rad(section_to_rad(values, SYSTEM_FREQUENCY_FIELDS, "hz"),
                            SYSTEM_FREQUENCY_FIELDS, "hz")
    for k, v in values.items():
        assert back[k] == pytest.approx(v, rel=1e-15)


def test_non_frequency_fields_untouched():
    out = section_to_rad({"p_op": 1.0, "detuning": 2.0}, DRIVE_FREQUENCY_FIELDS, "hz")
    assert out == {"p_op": 1.0, "detuning": hz_to_rad(2.0)}


@pytest.mark.parametrize("field,value", [("omega_m", 0.0), ("kappa", -1.0), ("g0", math.nan),
                                         ("eta", 1.5), ("eta", 0.0)])
def test_invalid_system_rejected(field, value):
    kwargs = dict(omega_m=1.0, kappa=1.0, gamma_m=1.0, g0=1.0, omega_c=10.0, eta=0.5)
    kwargs[field] = value
    with pytest.raises(ParameterError):
        SystemParams(**kwargs)


def test_narrow_linewidth_needs_opt_in():
    with pytest.raises(ParameterError):
        reference_params(beta_lw=1.0)
    assert reference_params(beta_lw=1.0, allow_narrow_linewidth=True).beta_lw == 1.0


def test_drive_consistency(ref):
    d = DriveParams.build(ref, 1e-9, detuning=1e5)
    assert d.omega_l == ref.omega_c - 1e5
    with pytest.raises(ParameterError):
        DriveParams.build(ref, 1e-9, omega_l=ref.omega_c, detuning=1e6)
    with pytest.raises(ParameterError):
        DriveParams.from_cavity(ref, -1.0)
    moved = d.with_detuning(ref, -2e5)
    assert moved.omega_l == ref.omega_c + 2e5


def test_regime_labels(ref):
    r = classify_regime(ref, 0.05 * ref.omega_m, 0.0)
    assert r.sideband_resolved and r.coupling_regime is CouplingRegime.WEAK
    assert not r.bistable_possible
    assert classify_regime(ref, 2 * ref.omega_m, -ref.kappa).bistable_possible
    assert classify_regime(ref, 0.5 * ref.omega_m, 0.0).coupling_regime is CouplingRegime.CROSSOVER


def test_regime_with_drive_uses_root_count(ref):
    d = DriveParams.from_cavity(ref, 1e-15, 0.0)
    # below the bistability threshold power no window exists
    assert not classify_regime(ref, 0.0, -5 * ref.kappa, drive=d).bistable_possible

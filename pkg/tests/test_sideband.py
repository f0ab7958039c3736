import math

import numpy as np
import pytest

from sideband_thermo.errors import DomainError
from sideband_thermo.params import DriveParams, derive_scales
from sideband_thermo.sideband import (
    delta_bar,
    delta_bar_asymptotic,
    delta_bar_strong_power,
    delta_bar_vs_power,
    delta_bar_weak_power,
    detunings,
    sideband_state,
    weak_asymmetry_coefficient,
    weak_asymmetry_coefficient_printed,
)


def test_peak_value_and_flag(ref):
    g = ref.omega_m / math.sqrt(2)
    db = delta_bar(ref, g)
    gamma = ref.kappa + ref.gamma_m
    assert db.value == pytest.approx((2 * ref.gamma_m**2 + 4 * ref.omega_m**2) / gamma**2, rel=1e-12)
    assert not db.reliable
    assert delta_bar(ref, 0.5 * ref.omega_m).reliable


def test_vectorised(ref):
    g = np.linspace(0, 2, 5) * ref.omega_m
    out = delta_bar(ref, g)
    assert out.value.shape == (5,) and out.reliable.dtype == bool


def test_asymptotic_branches(ref):
    g = 0.01 * ref.omega_m
    weak = delta_bar_asymptotic(ref, g, "weak")
    assert weak.valid and weak.value == pytest.approx(delta_bar(ref, g).value, rel=1e-3)
    g = 10 * ref.omega_m
    strong = delta_bar_asymptotic(ref, g, "strong")
    # leading correction is O((Omega/g)^2) = 1%
    assert strong.valid and strong.value == pytest.approx(delta_bar(ref, g).value, rel=2e-2)
    assert not delta_bar_asymptotic(ref, 0.5 * ref.omega_m, "weak").valid
    with pytest.raises(ValueError):
        delta_bar_asymptotic(ref, g, "other")


def test_power_laws_track_chain(ref):
    d = DriveParams.from_cavity(ref, 1e-16)
    res = delta_bar_vs_power(ref, d)
    assert res.value == pytest.approx(res.weak_closed_form, rel=1e-3)
    with pytest.raises(DomainError):
        delta_bar_vs_power(ref, DriveParams.from_cavity(ref, 1e-9, 1.0))
    assert delta_bar_strong_power(ref, d.with_power(0.0)) == math.inf
    assert delta_bar_weak_power(ref, d.with_power(2e-16)) == pytest.approx(2 * res.weak_closed_form)


def test_weak_coefficient_factor(ref):
    d = DriveParams.from_cavity(ref, 1e-12)
    a = derive_scales(ref).a_scale
    ratio = weak_asymmetry_coefficient(ref, d) / weak_asymmetry_coefficient_printed(ref, d)
    assert ratio == pytest.approx(4 * a, rel=1e-12)


def test_detunings_and_state(ref):
    d = DriveParams.from_cavity(ref, 1e-9)
    r, b = detunings(d, ref, 2.0)
    assert r - b == 2 * ref.omega_m and r + b == 2.0
    st = sideband_state(ref, d)
    assert st.provenance == "model"
    assert st.delta_r + st.delta_b == pytest.approx(st.delta_ineq, rel=1e-12)
    m = sideband_state(ref, d, measured_delta=1e6)
    assert m.provenance == "measured" and m.visible and m.delta_bar == 1e6 / ref.omega_m

import math

import numpy as np
import pytest

from sideband_thermo.errors import DomainError, EstimatorError, PipelineError, WindowError
from sideband_thermo.experiment import (
    AcquisitionSpec,
    GridSpec,
    PeakFit,
    SpectrumTrace,
    clean_spectrum,
    estimate_inequivalence,
    estimate_populations,
    fit_peak,
    lorentzian,
    run_pipeline,
    synthesize_trace,
)
from sideband_thermo.params import DriveParams, reference_params
from sideband_thermo.spectra import SHOT_NOISE_FLOOR, SpectralModel, model_delta, populations


@pytest.fixture
def setup(ref, ref_pcr):
    d = DriveParams.from_cavity(ref, 1e-3 * ref_pcr)
    return ref, d, SpectralModel.from_drive(ref, d, 0.1)


def test_noise_off_equals_model(setup):
    p, d, m = setup
    tr = synthesize_trace(m, d)
    delta = model_delta(m)
    assert np.array_equal(tr.psd, clean_spectrum(tr.w_grid, m, d, delta))
    assert tr.w_grid.size == 2 * 4096
    hw = 20 * max(p.gamma_m, p.beta_lw)
    assert tr.half_width == hw
    assert tr.w_grid[0] == pytest.approx(-p.omega_m + 0.5 * delta - hw, rel=1e-15)


def test_same_seed_same_trace(setup):
    _, d, m = setup
    a = synthesize_trace(m, d, n_avg=50, seed=7)
    b = synthesize_trace(m, d, n_avg=50, seed=7)
    c = synthesize_trace(m, d, n_avg=50, seed=8)
    assert np.array_equal(a.psd, b.psd) and not np.array_equal(a.psd, c.psd)
    assert np.all(a.psd >= 0)


def test_noise_variance_oracle(setup):
    p, d, m = setup
    # off-peak bins only: a wide grid far from both sidebands
    w = np.linspace(0.2, 0.8, 10_000) * p.omega_m
    tr = synthesize_trace(m, d, n_avg=100, seed=1, w_grid=w)
    rel = tr.psd / clean_spectrum(w, m, d, model_delta(m)) - 1
    assert np.var(rel) == pytest.approx(1 / 100, rel=0.1)


def test_grid_rejects_zero(setup):
    _, d, m = setup
    with pytest.raises(DomainError):
        synthesize_trace(m, d, w_grid=np.array([-1.0, 0.0, 1.0]))
    with pytest.raises(DomainError):
        synthesize_trace(m, d, n_avg=0)


def test_pure_lorentzian_recovered():
    w = np.linspace(-50.0, 50.0, 2001) + 1e6
    truth = (1e6 + 3.3, 7.0, 40.0, 0.5)
    tr = SpectrumTrace(w_grid=w, psd=lorentzian(w, *truth), n_avg=None, seed=None)
    fit = fit_peak(tr, (w[0], w[-1]))
    got = (fit.center, fit.linewidth, fit.amplitude, fit.floor)
    assert got[0] == pytest.approx(truth[0], rel=1e-12)
    for g, t in zip(got[1:], truth[1:]):
        assert g == pytest.approx(t, rel=1e-6)
    assert fit.rms_residual < 1e-6
    assert fit.area == pytest.approx(0.5 * math.pi * fit.amplitude * fit.linewidth)


def test_full_sideband_center_within_gamma_over_ten(setup):
    p, d, m = setup
    tr = synthesize_trace(m, d)
    fit = fit_peak(tr, tr.window("red"))
    i = int(np.argmax(tr.psd * (tr.w_grid > 0)))
    assert abs(fit.center - tr.w_grid[i]) < p.gamma_m / 10
    assert abs(fit.center - tr.centers[0]) < p.gamma_m / 10
    assert fit.floor == pytest.approx(SHOT_NOISE_FLOOR, rel=1e-3)


def test_window_errors(setup):
    _, d, m = setup
    tr = synthesize_trace(m, d)
    c = tr.centers[0]
    with pytest.raises(WindowError):
        fit_peak(tr, (c + 5 * tr.half_width / 10, c + tr.half_width))  # peak at the left edge
    with pytest.raises(WindowError):
        fit_peak(tr, (c, c + 1e-9))


def test_inequivalence_sign_and_symmetry():
    r, b = PeakFit.from_center(5.0, 1.0), PeakFit.from_center(-5.0, 1.0)
    est = estimate_inequivalence(r, b)
    assert est.delta_ineq == 0.0 and est.omega_m == 5.0
    assert est.sigma_delta == pytest.approx(math.sqrt(2)) and est.sigma_delta_linear == 2.0
    with pytest.raises(EstimatorError):
        estimate_inequivalence(b, r)


def test_population_modes(setup):
    p, d, m = setup
    tr = synthesize_trace(m, d)
    fr, fb = fit_peak(tr, tr.window("red")), fit_peak(tr, tr.window("blue"))
    ref = populations(m, use_shift=True)
    pops = estimate_populations(fr, fb)
    assert pops.n_r == pytest.approx(ref.n_r, rel=5e-3)
    assert pops.n_b == pytest.approx(ref.n_b, rel=5e-3)
    area = estimate_populations(fr, fb, "area")
    assert area.source == "area" and area.n_r == pytest.approx(pops.n_r, rel=1e-12)
    assert estimate_populations(fr, fr).dn == 0.0
    with pytest.raises(ValueError):
        estimate_populations(fr, fb, "median")


def test_negative_height_rejected():
    neg = PeakFit.from_center(1.0, amplitude=-1.0)
    with pytest.raises(EstimatorError):
        estimate_populations(neg, neg)


def test_pipeline_records_everything(setup):
    p, d, m = setup
    res = run_pipeline(p, d, 0.1)
    assert res.fit_red.center - res.fit_blue.center == 2 * res.inequivalence.omega_m
    assert res.state.provenance == "measured"
    rep = res.report()
    for key in ("steady_state", "fit_red", "fit_blue", "inequivalence", "populations", "thermometry"):
        assert key in rep
    assert rep["thermometry"]["t_recovered_k"] == pytest.approx(0.1, rel=1e-2)


def test_pipeline_stage_tag(ref):
    d = DriveParams.from_cavity(ref, 1e-12)
    acq = AcquisitionSpec(grid=GridSpec(points_per_window=10))
    with pytest.raises(PipelineError) as info:
        run_pipeline(ref, d, 0.1, acq)
    assert info.value.stage == "fit_red"
    assert isinstance(info.value.cause, WindowError)


def test_delta_estimator_unbiased_large_sample(setup):
    # wider check than the acceptance block: 1000 seeds, 3 standard errors
    p, d, m = setup
    injected = model_delta(m)
    est = []
    for seed in range(1000, 2000):
        tr = synthesize_trace(m, d, n_avg=100, seed=seed)
        est.append(fit_peak(tr, tr.window("red")).center + fit_peak(tr, tr.window("blue")).center)
    est = np.array(est)
    se = est.std(ddof=1) / math.sqrt(len(est))
    assert abs(est.mean() - injected) < 3 * se

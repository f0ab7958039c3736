import math

import numpy as np
import pytest

from sideband_thermo import config as cfgmod
from sideband_thermo import io
from sideband_thermo.errors import ConfigError
from sideband_thermo.experiment import SpectrumTrace
from sideband_thermo.params import reference_params

REFERENCE_HZ = """units = "hz"

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

[sweep]
quantity = "p_op"
min = 1e-15
max = 1e-9
points = 5
scale = "log"

[acquisition]
n_avg = 100
seed = 4
"""


def test_hz_config_matches_reference():
    cfg = cfgmod.loads(REFERENCE_HZ)
    ref = reference_params()
    assert cfg.system.omega_m == pytest.approx(ref.omega_m, rel=1e-15)
    assert cfg.drive.omega_l == pytest.approx(ref.omega_c, rel=1e-15)
    assert cfg.sweep.grid()[0] == pytest.approx(1e-15)
    assert cfg.acquisition.n_avg == 100 and cfg.acquisition.seed == 4


def test_round_trip_and_hash_units_independent():
    cfg = cfgmod.loads(REFERENCE_HZ)
    again = cfgmod.loads(cfgmod.dumps(cfg))
    assert again.system == cfg.system and again.drive == cfg.drive
    assert again.hash() == cfg.hash()
    as_rad = cfgmod.loads(cfgmod.dumps(cfg.with_overrides(units="rad_s")))
    assert as_rad.units == "rad_s"
    assert as_rad.system.omega_m == pytest.approx(cfg.system.omega_m, rel=1e-15)


def test_overrides_change_hash():
    cfg = cfgmod.loads(REFERENCE_HZ)
    assert cfg.with_overrides(seed=5).hash() != cfg.hash()
    assert cfg.with_overrides(noise="off").acquisition.n_avg is None


@pytest.mark.parametrize("edit,key", [
    (("omega_m = 5.33e6", "omega_m = -1"), "system"),
    (("eta = 0.76", "eta = \"x\""), "system.eta"),
    (("points = 5", "points = 1"), "sweep.points"),
    (("min = 1e-15", "min = 0.0"), "sweep.min"),
    (("seed = 4", "bogus = 1"), "acquisition.bogus"),
    (("temperature = 0.1", "temperature = -3"), "thermometry.temperature"),
])
def test_validation_reports_key(edit, key):
    with pytest.raises(ConfigError) as info:
        cfgmod.loads(REFERENCE_HZ.replace(*edit))
    assert info.value.key == key


def test_unknown_key_has_line_number():
    with pytest.raises(ConfigError) as info:
        cfgmod.loads(REFERENCE_HZ.replace("seed = 4", "bogus = 1"))
    assert info.value.line == REFERENCE_HZ.splitlines().index("seed = 4") + 1


def test_empty_sweep_rejected():
    text = REFERENCE_HZ.split("[sweep]")[0] + "[sweep]\n"
    with pytest.raises(ConfigError):
        cfgmod.loads(text)


def test_bad_toml():
    with pytest.raises(ConfigError):
        cfgmod.loads("units = \n")


def test_csv_header_and_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    w = np.array([-2.0, -1.0, 1.0, 2.0]) * 1e6
    psd = np.array([0.5, 1.0 / 3.0, math.pi, 0.5])
    io.write_trace(path, SpectrumTrace(w_grid=w, psd=psd, n_avg=None, seed=None), "abc")
    head = io.read_header(path)
    assert head.config_hash == "abc" and head.tool == "sideband_thermo"
    back = io.read_trace(path)
    assert np.array_equal(back.w_grid, w) and np.array_equal(back.psd, psd)


def test_trace_with_zero_frequency_rejected(tmp_path):
    path = tmp_path / "t.csv"
    io.write_csv(path, io.TRACE_COLUMNS, [[0.0, 1.0], [1.0, 1.0]], "x")
    with pytest.raises(ConfigError):
        io.read_trace(path)


def test_json_handles_numpy_and_nan(tmp_path):
    path = tmp_path / "r.json"
    io.write_json(path, {"a": np.float64(1.5), "b": math.nan, "c": np.arange(2)}, "h")
    text = path.read_text()
    assert '"a": 1.5' in text and '"b": "nan"' in text and '"config_hash": "h"' in text

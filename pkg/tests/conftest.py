import pytest

from sideband_thermo.params import DriveParams, reference_params
from sideband_thermo.thermometry import critical_point


@pytest.fixture(scope="session")
def ref():
    return reference_params()


@pytest.fixture(scope="session")
def ref_pcr(ref):
    return critical_point(ref, DriveParams.from_cavity(ref, 1e-12, 0.0)).p_cr


@pytest.fixture
def resonant(ref):
    def make(p_op):
        return DriveParams.from_cavity(ref, p_op, 0.0)

    return make

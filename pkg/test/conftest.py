import pytest

from src.core.law_factory import LawFactory
from src.fields.grid import Boundary, GridSpec

UNIT_POWER = {"variant": "power", "a": 1.0, "gamma": 2.0, "beta": 3.0, "rho_bar": 1.0}
REFERENCE_POWER = {"variant": "power", "a": 0.45, "gamma": 2.0, "beta": 3.0, "rho_bar": 3.0}
UNIT_CS = {"variant": "cs", "kT": 1.0, "rho_bar": 1.0}


@pytest.fixture(scope="session")
def unit_law():
    """p(s) = s^2 / (1 - s)^3"""
    return LawFactory.create(UNIT_POWER)


@pytest.fixture(scope="session")
def reference_law():
    """p'(1.5) = 1, the law of the shipped study configs"""
    return LawFactory.create(REFERENCE_POWER)


@pytest.fixture(scope="session")
def cs_law():
    return LawFactory.create(UNIT_CS)


@pytest.fixture(scope="session")
def periodic_2d():
    return GridSpec.cube(2, 3.141592653589793, 32)


@pytest.fixture(scope="session")
def noslip_2d():
    return GridSpec.cube(2, 1.0, 16, Boundary.NOSLIP)


@pytest.fixture(scope="session")
def noslip_1d():
    return GridSpec.cube(1, 4.0, 128, Boundary.NOSLIP)

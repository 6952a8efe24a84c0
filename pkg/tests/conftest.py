import numpy as np
import pytest
from hypothesis import settings

from dpre.disorder import DisorderLaw

settings.register_profile("repro", deadline=None, derandomize=True)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def gaussian():
    return DisorderLaw.gaussian()


@pytest.fixture(scope="session")
def rademacher():
    return DisorderLaw.rademacher()


@pytest.fixture(scope="session")
def bounded_table():
    # asymmetric three-point law, centered
    return DisorderLaw.table([-2.0, 0.5, 1.0], [0.25, 0.5, 0.25])


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)

import numpy as np
import pytest

from empclt import ProcessSpec


@pytest.fixture(scope="session")
def iid_uniform():
    return ProcessSpec.iid("uniform")


@pytest.fixture(scope="session")
def iid_normal():
    return ProcessSpec.iid("standard-normal")


@pytest.fixture(scope="session")
def geo_half():
    # geometric coefficient decay, unit-variance uniform innovations
    return ProcessSpec.geometric(0.5, "uniform")


@pytest.fixture()
def rng():
    return np.random.default_rng(20260816)

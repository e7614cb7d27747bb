import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from layered_anc import diamond, fully_connected

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def diamond_net():
    return diamond()


@pytest.fixture
def grid2x2():
    return fully_connected((2, 2), 1.0, 1.0, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from swan.geometry import RadioConfig

settings.register_profile(
    "swan", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("swan")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_radio():
    """Normalised units: P = 1, sigma^2 = 0.1."""
    return RadioConfig(P=1.0, sigma2=0.1)

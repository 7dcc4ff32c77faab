import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rydhet.atomsys import TWO_PI, reference_system

settings.register_profile(
    "default", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

MHZ = TWO_PI * 1e6


@pytest.fixture(scope="session")
def weak_probe():
    """60 MHz probe, 24 MHz coupling, 1.3 GHz detuning, 403 K."""
    return reference_system()


@pytest.fixture(scope="session")
def strong_probe():
    return reference_system(probe_rabi_mhz=400.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "fbsheet",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    max_examples=50,
)
settings.load_profile("fbsheet")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240901)

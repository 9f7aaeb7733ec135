import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ritzpinn._runtime import tune_allocator

tune_allocator()

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)

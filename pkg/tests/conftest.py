import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spraylab.core import TangentState

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ball_state(rng, n=2, radius=0.9, unit=False):
    x = rng.normal(size=n)
    x *= rng.uniform(0.0, radius) / np.linalg.norm(x)
    y = rng.normal(size=n)
    if unit:
        y /= np.linalg.norm(y)
    return TangentState(x, y)


def half_plane_state(rng):
    return TangentState([rng.uniform(-2, 2), rng.uniform(0.1, 2)], rng.normal(size=2))

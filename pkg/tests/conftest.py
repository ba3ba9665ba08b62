import numpy as np
import pytest

from lpyramids import _backend
from lpyramids.kernels import BandwidthSchedule, PointSet, RadialProfile


@pytest.fixture(params=_backend.available_backends())
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    monkeypatch.setattr(_backend, "impl", _backend.get_backend(request.param))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


class ExplicitSchedule:
    """Arbitrary per-level bandwidths (duck-typed schedule for tests)."""

    def __init__(self, sigmas):
        self.sigmas = list(sigmas)

    def at(self, level):
        return self.sigmas[level]


def random_instance(rng, n_max=20, p_max=3, level_max=5):
    """Random point set, data, schedule and level count (suite 1)."""
    n = int(rng.integers(2, n_max + 1))
    p = int(rng.integers(1, p_max + 1))
    ps = PointSet(rng.random((n, p)))
    y = rng.standard_normal(n)
    if rng.random() < 0.25:
        profile = RadialProfile.power_law(p + 0.5 + 2 * rng.random(), C=0.5 + rng.random(), dim=p)
    else:
        profile = RadialProfile.gaussian()
    schedule = BandwidthSchedule.geometric(0.05 + 2 * rng.random(), 1.5 + 1.5 * rng.random())
    level = int(rng.integers(1, level_max + 1))
    return ps, y, profile, schedule, level


def suite_one(seed=1, count=100):
    rng = np.random.default_rng(seed)
    return [random_instance(rng) for _ in range(count)]

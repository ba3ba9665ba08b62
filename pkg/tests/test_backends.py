import os
import subprocess
import sys

import numpy as np
import pytest

from lpyramids import _backend, _pykernels
from lpyramids.kernels import UNDERFLOW_FLOOR

needs_compiled = pytest.mark.skipif(
    "cython" not in _backend.available_backends(), reason="compiled backend not built"
)

PROFILES = [(0, 2.0, 1.0), (1, 3.5, 0.7)]


@needs_compiled
@pytest.mark.parametrize("code", PROFILES)
def test_kernel_rows_agree(code, rng):
    c = _backend.get_backend("cython")
    xq = rng.random((37, 3)) * 4 - 2
    xs = rng.random((11, 3))
    for sigma in (1e-3, 0.05, 0.7, 30.0):
        wc, fc = c.kernel_rows(xq, xs, sigma, *code, UNDERFLOW_FLOOR)
        wp, fp = _pykernels.kernel_rows(xq, xs, sigma, *code, UNDERFLOW_FLOOR)
        np.testing.assert_array_equal(np.asarray(fc), fp)
        np.testing.assert_allclose(wc, wp, rtol=1e-12, atol=1e-15)


@needs_compiled
@pytest.mark.parametrize("code", PROFILES)
def test_extend_agrees(code, rng):
    c = _backend.get_backend("cython")
    xq = np.linspace(-3, 4, 501)[:, None]
    xs = rng.random((16, 1))
    sig = 2.0 / 2.0 ** np.arange(14)
    resid = rng.standard_normal((14, 16))
    vc, nc = c.extend(xq, xs, sig, resid, *code, UNDERFLOW_FLOOR)
    vp, np_ = _pykernels.extend(xq, xs, sig, resid, *code, UNDERFLOW_FLOOR)
    np.testing.assert_array_equal(np.asarray(nc), np_)
    np.testing.assert_allclose(vc, vp, rtol=1e-12, atol=1e-13)


@needs_compiled
def test_sq_distances_agree(rng):
    a, b = rng.random((20, 4)), rng.random((9, 4))
    np.testing.assert_allclose(
        _backend.get_backend("cython").sq_distances(a, b), _pykernels.sq_distances(a, b), rtol=1e-15
    )


def test_extend_blocks_match_unblocked(rng, monkeypatch):
    xq = rng.random((50, 2))
    xs = rng.random((7, 2))
    sig = np.array([1.0, 0.3])
    resid = rng.standard_normal((2, 7))
    full = _pykernels.extend(xq, xs, sig, resid, 0, 2.0, 1.0, UNDERFLOW_FLOOR)[0]
    monkeypatch.setattr(_pykernels, "_BLOCK", 8)
    blocked = _pykernels.extend(xq, xs, sig, resid, 0, 2.0, 1.0, UNDERFLOW_FLOOR)[0]
    np.testing.assert_array_equal(full, blocked)


def test_env_var_forces_fallback():
    env = dict(os.environ, LPYRAMIDS_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "import lpyramids; print(lpyramids.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_unknown_backend_name():
    with pytest.raises(ValueError):
        _backend.get_backend("fortran")


def test_bench_runs():
    from lpyramids import bench

    rows = bench.run(scale=1, repeat=1)
    assert [r[0] for r in rows] == ["extend 1-D grid", "kernel_rows 3-D", "sq_distances 3-D"]
    for _, times in rows:
        assert set(times) == set(_backend.available_backends())

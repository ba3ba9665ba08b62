"""Radial profiles, bandwidth schedules and row-stochastic kernels on point sets.

All distances are Euclidean in the ambient space. A kernel row at a point ``x``
is the vector of profile values ``phi(|x - x_j| / sigma)`` normalized to sum to
one over the samples ``x_j``.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _backend, _pykernels
from .errors import DegenerateInput, DomainError, InvariantViolation, ShapeError

#: Raw row sums below this are treated as underflowed (row returned as zeros).
UNDERFLOW_FLOOR = 1e-300

_PROFILE_CODES = {"gaussian": _pykernels.GAUSSIAN, "power_law": _pykernels.POWER_LAW}

#: Tolerance on row sums for kernels built directly from a profile.
STOCHASTIC_ATOL = 1e-12


class PointSet:
    """Sample locations ``x_1, ..., x_n`` in ``R^p``.

    Parameters
    ----------
    points : array_like
        Shape ``(n, p)``, or ``(n,)`` for one-dimensional data.
    allow_duplicates : bool
        Skip the pairwise-distinctness check. Patch sets built from signals
        may legitimately repeat.

    Raises
    ------
    DegenerateInput
        Empty input, non-finite coordinates, or repeated points when
        ``allow_duplicates`` is False.
    ShapeError
        Input that is not one- or two-dimensional.
    """

    def __init__(self, points, *, allow_duplicates=False):
        arr = np.array(points, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ShapeError(f"points must be 1-D or 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DegenerateInput("point set must contain at least one point")
        if not np.all(np.isfinite(arr)):
            raise DegenerateInput("point coordinates must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self._points = arr
        if not allow_duplicates and arr.shape[0] >= 2 and self.delta == 0.0:
            raise DegenerateInput("point set contains duplicate points")

    @property
    def points(self):
        return self._points

    @property
    def n(self):
        return self._points.shape[0]

    @property
    def p(self):
        return self._points.shape[1]

    @cached_property
    def delta(self):
        """Minimum pairwise separation, or None for a single point."""
        if self.n < 2:
            return None
        d2 = _backend.impl.sq_distances(self._points, self._points)
        np.fill_diagonal(d2, np.inf)
        return float(np.sqrt(d2.min()))

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"PointSet(n={self.n}, p={self.p})"


@dataclass(frozen=True)
class RadialProfile:
    """Radial function ``phi`` with ``phi(0) = 1``, nonincreasing on ``r >= 0``.

    Use :meth:`gaussian` or :meth:`power_law` rather than the constructor.
    The power-law profile is ``phi(r) = 1 / (1 + r**q / C)``, which satisfies
    ``phi(r) <= C * r**-q``.
    """

    kind: str = "gaussian"
    q: float = 2.0
    C: float = 1.0
    dim: int | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "power_law"):
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if self.kind == "power_law":
            if not self.C > 0:
                raise DomainError("power-law constant C must be positive")
            if self.dim is None or not self.q > self.dim:
                raise DomainError(
                    f"power-law tail needs q > p (q={self.q}, p={self.dim})"
                )

    @classmethod
    def gaussian(cls):
        """``phi(r) = exp(-r**2)``."""
        return cls("gaussian")

    @classmethod
    def power_law(cls, q, C=1.0, dim=1):
        """Algebraically decaying profile; requires ``q > dim``."""
        return cls("power_law", float(q), float(C), int(dim))

    @property
    def code(self):
        """``(kind, q, C)`` triple understood by the kernel backends."""
        return _PROFILE_CODES[self.kind], float(self.q), float(self.C)

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        if np.any(r < 0):
            raise DomainError("profile is defined for r >= 0")
        kind, q, c = self.code
        return _pykernels._profile(r, kind, q, c)

    evaluate = __call__

    def check_dimension(self, p):
        if self.kind == "power_law" and not self.q > p:
            raise DomainError(f"power-law tail needs q > p (q={self.q}, p={p})")


@dataclass(frozen=True)
class BandwidthSchedule:
    """Sequence of bandwidths ``sigma_0, sigma_1, ...``.

    ``geometric``: ``sigma0 / mu**l``. ``plateaued``: the same, floored at
    ``floor``. ``constant``: ``sigma0`` at every level.
    """

    kind: str
    sigma0: float
    mu: float = 1.0
    floor: float = 0.0

    def __post_init__(self):
        if self.kind not in ("geometric", "plateaued", "constant"):
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        if not self.sigma0 > 0:
            raise DomainError("sigma0 must be positive")
        if self.kind != "constant" and not self.mu > 1:
            raise DomainError("decay factor mu must exceed 1")
        if self.kind == "plateaued" and not self.floor > 0:
            raise DomainError("plateau floor must be positive")

    @classmethod
    def geometric(cls, sigma0, mu=2.0):
        return cls("geometric", float(sigma0), float(mu))

    @classmethod
    def plateaued(cls, sigma0, mu, floor):
        return cls("plateaued", float(sigma0), float(mu), float(floor))

    @classmethod
    def constant(cls, sigma):
        return cls("constant", float(sigma))

    def at(self, level):
        if level < 0:
            raise DomainError("level index must be nonnegative")
        if self.kind == "constant":
            return self.sigma0
        sigma = self.sigma0 / self.mu**level
        if self.kind == "plateaued":
            sigma = max(sigma, self.floor)
        if not sigma > 0:
            raise DomainError(f"bandwidth underflowed to zero at level {level}")
        return sigma

    def take(self, count):
        return np.array([self.at(k) for k in range(count)])


class MarkovKernel:
    """Dense ``n x n`` matrix with unit row sums.

    Parameters
    ----------
    matrix : array_like
        Square matrix.
    atol : float
        Allowed deviation of each row sum from one.
    nonnegative : bool
        Also require entries in ``[0, 1]``. Truncated LP kernels
        ``I - (I - Q)^K`` keep unit row sums but may have negative entries,
        so they are built with this off.
    degenerate : bool
        Marks kernels produced by a fallback path (e.g. uniform matrix for
        identical patches).
    """

    def __init__(self, matrix, *, atol=STOCHASTIC_ATOL, nonnegative=True, degenerate=False):
        arr = np.array(matrix, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeError(f"kernel must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvariantViolation("kernel entries must be finite")
        err = np.max(np.abs(arr.sum(axis=1) - 1.0)) if arr.size else 0.0
        if err > atol:
            raise InvariantViolation(f"rows do not sum to 1 (max error {err:.3g} > {atol:g})")
        if nonnegative and (arr.min() < 0 or arr.max() > 1):
            raise InvariantViolation("kernel entries must lie in [0, 1]")
        arr.setflags(write=False)
        self._matrix = arr
        self.nonnegative = bool(nonnegative)
        self.degenerate = bool(degenerate)

    @property
    def matrix(self):
        return self._matrix

    @property
    def n(self):
        return self._matrix.shape[0]

    def __matmul__(self, other):
        return self._matrix @ other

    def __array__(self, dtype=None, copy=None):
        return self._matrix if dtype is None else self._matrix.astype(dtype)

    def __repr__(self):
        return f"MarkovKernel(n={self.n})"


class KernelRow(NamedTuple):
    weights: np.ndarray
    underflow: bool


class BandwidthCheck(NamedTuple):
    converges: bool
    delta: float
    ratio: float
    deviation: float


def _as_query(ps, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x[None]
    if x.ndim != 1 or x.shape[0] != ps.p:
        raise ShapeError(f"query point has shape {x.shape}, expected ({ps.p},)")
    return np.ascontiguousarray(x[None, :])


def _check_sigma(sigma):
    if not sigma > 0 or not np.isfinite(sigma):
        raise DomainError(f"bandwidth must be positive and finite, got {sigma}")


def min_separation(ps):
    """Smallest Euclidean distance between two distinct-index samples.

    Raises
    ------
    DegenerateInput
        Fewer than two points, or a repeated point (separation zero).
    """
    if ps.n < 2:
        raise DegenerateInput("minimum separation needs at least two points")
    delta = ps.delta
    if delta == 0.0:
        raise DegenerateInput("point set contains duplicate points")
    return delta


def kernel_row(ps, profile, sigma, x, floor=UNDERFLOW_FLOOR):
    """Normalized affinities of ``x`` to every sample.

    If the unnormalized sum falls below ``floor`` the row is all zeros and
    ``underflow`` is set.
    """
    _check_sigma(sigma)
    profile.check_dimension(ps.p)
    xq = _as_query(ps, x)
    w, flags = _backend.impl.kernel_rows(xq, ps.points, float(sigma), *profile.code, float(floor))
    return KernelRow(np.asarray(w)[0], bool(flags[0]))


def kernel_matrix(ps, profile, sigma):
    """Restriction of the normalized kernel to the samples (rows at each ``x_i``)."""
    _check_sigma(sigma)
    profile.check_dimension(ps.p)
    w, flags = _backend.impl.kernel_rows(
        ps.points, ps.points, float(sigma), *profile.code, UNDERFLOW_FLOOR
    )
    # phi(0) = 1 keeps every on-sample denominator >= 1
    assert not np.any(flags)
    return MarkovKernel(w)


def _require_stochastic(K):
    if not isinstance(K, MarkovKernel):
        K = MarkovKernel(K)
    if not K.nonnegative:
        raise InvariantViolation("identity deviation shortcut needs a nonnegative kernel")
    return K


def identity_deviation_shortcut(K):
    """``2 * max_i (1 - K_ii)``, valid for nonnegative row-stochastic ``K``."""
    K = _require_stochastic(K)
    return float(2.0 * np.max(1.0 - np.diag(K.matrix)))


def identity_deviation_inf(K):
    """``||I - K||_inf`` as the largest row l1-norm of ``I - K``.

    Cross-checked against :func:`identity_deviation_shortcut`.
    """
    K = _require_stochastic(K)
    direct = float(np.max(np.abs(np.eye(K.n) - K.matrix).sum(axis=1)))
    shortcut = identity_deviation_shortcut(K)
    if abs(direct - shortcut) > 1e-12:
        raise InvariantViolation(
            f"row-l1 deviation {direct!r} disagrees with diagonal shortcut {shortcut!r}"
        )
    return direct


def convergence_bandwidth_check(ps, profile, sigma, eps):
    """Empirical test of ``||I - P||_inf < eps`` at bandwidth ``sigma``.

    Returns the verdict with the separation ``delta``, ``sigma / delta`` and the
    measured deviation.
    """
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    delta = min_separation(ps)
    dev = identity_deviation_inf(kernel_matrix(ps, profile, sigma))
    return BandwidthCheck(dev < eps, delta, sigma / delta, dev)

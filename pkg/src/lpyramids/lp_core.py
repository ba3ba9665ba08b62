"""Laplacian pyramids fit/extend loop and its convergence and stability diagnostics.

Level ``l`` smooths the current residual ``d_l`` with the bandwidth-``sigma_l``
kernel and subtracts the smoothed values on the samples::

    d_0 = y
    d_{l+1} = d_l - P_l d_l

Out of sample the approximation is ``f_K(x) = sum_l P_l(x, .) @ d_l``. Only the
residual vectors are stored; kernel rows are recomputed when evaluating.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _backend
from .errors import DegenerateInput, DomainError, ShapeError
from .kernels import (
    UNDERFLOW_FLOOR,
    BandwidthSchedule,
    MarkovKernel,
    PointSet,
    RadialProfile,
    identity_deviation_inf,
    kernel_matrix,
    kernel_row,
)

#: Relative default stopping tolerance, scaled by ``max |y|``.
DEFAULT_RTOL = 1e-13

#: Consecutive non-decreasing residual norms before a fit is declared stalled.
STALL_LEVELS = 10

#: Stability constant: the bound actually proved is ``3 * 2**m``.
STABILITY_CONSTANT = 4.0


class StopReason(str, Enum):
    REACHED_TOLERANCE = "ReachedTolerance"
    REACHED_MAX_LEVELS = "ReachedMaxLevels"
    STALLED = "Stalled"


@dataclass(frozen=True)
class Level:
    """Bandwidth used at one level and the residual it smooths."""

    sigma: float
    residual: np.ndarray


@dataclass(frozen=True)
class FitReport:
    """Outcome of :func:`lp_fit`.

    ``residual_norms[l]`` is ``max |d_{l+1}|``, the residual left after level
    ``l``; ``levels_used`` is the index ``K`` of the last level, so the fit has
    ``K + 1`` levels.
    """

    residual_norms: tuple
    stop_reason: StopReason
    levels_used: int

    @property
    def n_levels(self):
        return self.levels_used + 1


@dataclass(frozen=True)
class LPModel:
    ps: PointSet
    profile: RadialProfile
    schedule: object
    y: np.ndarray
    levels: tuple
    final_residual: np.ndarray = field(repr=False)

    @property
    def K(self):
        return len(self.levels) - 1

    @property
    def sigmas(self):
        return np.array([lev.sigma for lev in self.levels])

    def residuals(self):
        """Stacked ``(K + 1, n)`` array of ``d_0 .. d_K``."""
        return np.stack([lev.residual for lev in self.levels])

    def on_sample(self, level=None):
        """Approximation ``f_l`` at the samples (``y - d_{l+1}``); default ``l = K``."""
        if level is None:
            level = self.K
        if not 0 <= level <= self.K:
            raise DomainError(f"level {level} outside fitted range 0..{self.K}")
        if level == self.K:
            return self.y - self.final_residual
        return self.y - self.levels[level + 1].residual

    def kernel_matrices(self):
        """On-sample kernels ``P_0 .. P_K`` (recomputed, not cached)."""
        return [kernel_matrix(self.ps, self.profile, lev.sigma) for lev in self.levels]

    def extend(self, x):
        return lp_extend(self, x)

    def extend_many(self, xs, return_underflow=False):
        return lp_extend_many(self, xs, return_underflow=return_underflow)


@dataclass(frozen=True)
class StabilityCertificate:
    m: int
    bound: float
    observed: float
    satisfied: bool
    deviations: tuple = field(default=(), repr=False)


def _as_values(ps, y):
    y = np.array(y, dtype=np.float64, copy=True)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y[:, 0]
    if y.ndim != 1 or y.shape[0] != ps.n:
        raise ShapeError(f"values have shape {y.shape}, expected ({ps.n},)")
    if not np.all(np.isfinite(y)):
        raise DegenerateInput("values must be finite (NaN or inf found)")
    return y


def lp_fit(ps, y, profile=None, schedule=None, tol=None, max_levels=200):
    """Fit a Laplacian pyramid to samples ``y`` at the points ``ps``.

    Parameters
    ----------
    ps : PointSet
    y : array_like, shape (n,)
    profile : RadialProfile, optional
        Defaults to the Gaussian ``exp(-r**2)``.
    schedule : BandwidthSchedule or object with ``at(level)``
        Defaults to ``geometric(sigma0=1, mu=2)``.
    tol : float, optional
        Stop once ``max |d_{l+1}| <= tol``. Defaults to ``1e-13 * max |y|``.
    max_levels : int
        Maximum number of levels (``K + 1``).

    Returns
    -------
    model : LPModel
    report : FitReport
    """
    if profile is None:
        profile = RadialProfile.gaussian()
    if schedule is None:
        schedule = BandwidthSchedule.geometric(1.0, 2.0)
    y = _as_values(ps, y)
    if max_levels < 1:
        raise DomainError("max_levels must be at least 1")
    if tol is None:
        tol = DEFAULT_RTOL * float(np.max(np.abs(y)))
    if not tol >= 0:
        raise DomainError("tol must be nonnegative")

    levels = []
    norms = []
    d = y.copy()
    prev = float(np.max(np.abs(y)))
    stalled = 0
    level = 0
    while True:
        sigma = float(schedule.at(level))
        d.setflags(write=False)
        levels.append(Level(sigma, d))
        if np.all(d == d[0]):
            # unit row sums reproduce a constant exactly; skip the rounding of P @ d
            d = np.zeros_like(d)
        else:
            d = d - kernel_matrix(ps, profile, sigma).matrix @ d
        norm = float(np.max(np.abs(d)))
        norms.append(norm)
        stalled = stalled + 1 if norm >= prev else 0
        prev = norm
        if norm <= tol:
            reason = StopReason.REACHED_TOLERANCE
        elif level + 1 >= max_levels:
            reason = StopReason.REACHED_MAX_LEVELS
        elif stalled >= STALL_LEVELS:
            reason = StopReason.STALLED
        else:
            level += 1
            continue
        break

    d.setflags(write=False)
    y.setflags(write=False)
    model = LPModel(ps, profile, schedule, y, tuple(levels), d)
    return model, FitReport(tuple(norms), reason, level)


def lp_extend_many(model, xs, return_underflow=False):
    """Evaluate the fitted approximation at each row of ``xs``.

    Levels whose kernel normalization underflows at a query point contribute
    zero there; ``return_underflow`` also returns the per-point count of such
    levels.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 1 and model.ps.p == 1:
        xs = xs[:, None]
    if xs.ndim != 2 or xs.shape[1] != model.ps.p:
        raise ShapeError(f"query array has shape {xs.shape}, expected (q, {model.ps.p})")
    if xs.shape[0] == 0:
        vals, counts = np.zeros(0), np.zeros(0, dtype=np.int64)
    else:
        vals, counts = _backend.impl.extend(
            np.ascontiguousarray(xs),
            model.ps.points,
            np.ascontiguousarray(model.sigmas),
            np.ascontiguousarray(model.residuals()),
            *model.profile.code,
            UNDERFLOW_FLOOR,
        )
    vals = np.asarray(vals)
    if return_underflow:
        return vals, np.asarray(counts)
    return vals


def lp_extend(model, x):
    """Value of the fitted approximation at a single point ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x[None]
    if x.ndim != 1 or x.shape[0] != model.ps.p:
        raise ShapeError(f"query point has shape {x.shape}, expected ({model.ps.p},)")
    return float(lp_extend_many(model, x[None, :])[0])


def nadaraya_watson(ps, y, profile, sigma, x):
    """Kernel-weighted average of ``y`` at ``x`` (the level-0 LP estimate)."""
    y = _as_values(ps, y)
    return float(kernel_row(ps, profile, sigma, x).weights @ y)


def _as_matrix(K):
    return K.matrix if isinstance(K, MarkovKernel) else np.asarray(K, dtype=np.float64)


def residual_operator(kernels, level):
    """``(I - P_{l-1}) ... (I - P_0)``, the map from ``y`` to ``d_l``."""
    if level < 1:
        raise DomainError("residual operator is defined for level >= 1")
    if len(kernels) < level:
        raise DomainError(f"need {level} kernels, got {len(kernels)}")
    mats = [_as_matrix(K) for K in kernels[:level]]
    eye = np.eye(mats[0].shape[0])
    D = eye - mats[0]
    for P in mats[1:]:
        D = (eye - P) @ D
    return D


def error_bound_product(kernels, level):
    """``prod_{k < level} ||I - P_k||_inf``, bounding ``max|d_level| / max|y|``."""
    if level < 1:
        raise DomainError("error bound is defined for level >= 1")
    if len(kernels) < level:
        raise DomainError(f"need {level} kernels, got {len(kernels)}")
    out = 1.0
    for K in kernels[:level]:
        out *= identity_deviation_inf(K)
    return out


def stability_certificate(model):
    """Check ``max_l ||f_l||_inf <= 4 * 2**m * ||y||_inf`` on the samples.

    ``m`` is the first level from which every fitted kernel satisfies
    ``||I - P_j||_inf <= 1/2``; if the last level does not, ``m = K``.
    """
    devs = [identity_deviation_inf(K) for K in model.kernel_matrices()]
    m = model.K
    if devs[-1] <= 0.5:
        m = len(devs) - 1
        while m > 0 and devs[m - 1] <= 0.5:
            m -= 1
    ynorm = float(np.max(np.abs(model.y)))
    bound = STABILITY_CONSTANT * 2.0**m * ynorm
    observed = max(float(np.max(np.abs(model.on_sample(k)))) for k in range(model.K + 1))
    return StabilityCertificate(m, bound, observed, observed <= bound, tuple(devs))

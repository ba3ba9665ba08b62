"""Non-local means on 1-D signals with truncated LP kernels ``Q_K = I - (I - Q)^K``.

Each sample owns the length-``m`` window centred on it (reflect padding at the
ends). ``Q`` is the row-normalized Gaussian affinity between windows; iterating
``Q_K`` trades noise variance for smoothing bias, and larger ``K`` keeps
``Q_K`` closer to the identity.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DegenerateInput, DomainError, ShapeError
from .kernels import MarkovKernel, PointSet

#: Row-sum tolerance for truncated kernels (products accumulate roundoff).
TRUNCATED_ATOL = 1e-10


@dataclass(frozen=True)
class PatchConfig:
    """Patch extraction and affinity bandwidth settings.

    The Gaussian bandwidth is ``sigma = median_sq / bandwidth_divisor``, where
    ``median_sq`` is the median squared distance over patch pairs ``i < j``,
    and affinities are ``exp(-|x_i - x_j|**2 / sigma**2)``.
    """

    patch_size: int = 3
    boundary: str = "reflect"
    bandwidth_divisor: float = 3.0

    def __post_init__(self):
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise DomainError("patch_size must be a positive odd integer")
        if self.boundary != "reflect":
            raise DomainError(f"unsupported boundary mode {self.boundary!r}")
        if not self.bandwidth_divisor > 0:
            raise DomainError("bandwidth_divisor must be positive")


@dataclass(frozen=True)
class DenoiseTrace:
    """``iterates[l] = Q_K^l y``; ``errors[l]`` relative l2 error when a reference is known."""

    iterates: np.ndarray
    errors: np.ndarray | None
    K: int | None = None

    @property
    def L(self):
        return self.iterates.shape[0] - 1


def _as_signal(signal):
    s = np.asarray(signal, dtype=np.float64)
    if s.ndim != 1:
        raise ShapeError(f"signal must be 1-D, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise DegenerateInput("signal must be finite")
    return s


def extract_patches(signal, cfg=PatchConfig()):
    """One centred window per sample; returns ``M`` points in ``R^m``."""
    s = _as_signal(signal)
    M, m = s.shape[0], cfg.patch_size
    if m > M / 2:
        raise DegenerateInput(f"patch size {m} too large for signal of length {M}")
    half = m // 2
    padded = np.pad(s, half, mode="reflect") if half else s
    windows = np.lib.stride_tricks.sliding_window_view(padded, m)
    return PointSet(windows, allow_duplicates=True)


def median_pair_sq_distance(sq_dist):
    """Lower-middle median of the strictly upper-triangular entries."""
    iu = np.triu_indices(sq_dist.shape[0], k=1)
    vals = np.sort(sq_dist[iu])
    return float(vals[(vals.size - 1) // 2])


def build_nl_kernel(patches, cfg=PatchConfig()):
    """Row-normalized Gaussian patch affinity matrix ``Q`` (self-weight included).

    If every patch is identical the uniform matrix is returned with
    ``degenerate`` set. If the median is zero but some patches differ, the
    median over the nonzero pair distances is used instead.
    """
    if patches.n < 2:
        raise DegenerateInput("NL-means kernel needs at least two patches")
    X = patches.points
    d2 = np.asarray(_backend.impl.sq_distances(X, X))
    n = patches.n
    med = median_pair_sq_distance(d2)
    if med == 0.0:
        iu = np.triu_indices(n, k=1)
        pos = np.sort(d2[iu][d2[iu] > 0])
        if pos.size == 0:
            return MarkovKernel(np.full((n, n), 1.0 / n), degenerate=True)
        med = float(pos[(pos.size - 1) // 2])
    sigma = med / cfg.bandwidth_divisor
    G = np.exp(-d2 / sigma**2)
    return MarkovKernel(G / G.sum(axis=1, keepdims=True))


def truncated_lp_kernel(Q, K):
    """``I - (I - Q)^K`` by repeated multiplication of ``R = I - Q``."""
    if K < 1 or int(K) != K:
        raise DomainError("kernel step K must be a positive integer")
    if not isinstance(Q, MarkovKernel):
        Q = MarkovKernel(Q)
    if K == 1:
        return Q
    eye = np.eye(Q.n)
    R = eye - Q.matrix
    RK = R
    for _ in range(int(K) - 1):
        RK = RK @ R
    return MarkovKernel(eye - RK, atol=TRUNCATED_ATOL, nonnegative=False)


def spectral_map(lam, K):
    """Eigenvalue of ``Q_K`` corresponding to eigenvalue ``lam`` of ``Q``."""
    lam = np.asarray(lam, dtype=np.float64)
    if np.any((lam < 0) | (lam > 1)):
        raise DomainError("eigenvalue must lie in [0, 1]")
    out = 1.0 - (1.0 - lam) ** K
    return float(out) if out.ndim == 0 else out


def relative_error(v, reference):
    ref = np.asarray(reference, dtype=np.float64)
    scale = np.linalg.norm(ref)
    if scale == 0:
        raise DomainError("reference signal has zero norm")
    return float(np.linalg.norm(np.asarray(v) - ref) / scale)


def denoise_iterate(QK, y, L, reference=None, K=None):
    """Apply ``QK`` to ``y`` ``L`` times, keeping every iterate."""
    Qm = QK.matrix if isinstance(QK, MarkovKernel) else np.asarray(QK, dtype=np.float64)
    y = _as_signal(y)
    if Qm.shape != (y.shape[0], y.shape[0]):
        raise ShapeError(f"kernel shape {Qm.shape} does not match signal length {y.shape[0]}")
    if L < 0:
        raise DomainError("iteration count must be nonnegative")
    out = np.empty((L + 1, y.shape[0]))
    out[0] = y
    for k in range(1, L + 1):
        out[k] = Qm @ out[k - 1]
    errors = None
    if reference is not None:
        ref = _as_signal(reference)
        if ref.shape != y.shape:
            raise ShapeError("reference length differs from signal length")
        errors = np.linalg.norm(out - ref, axis=1) / np.linalg.norm(ref)
    return DenoiseTrace(out, errors, K)


def boosted_kernel_sequence_errors(Q, y, reference, L):
    """Errors of ``Q_l y`` for ``l = 1..L`` (non-iterated truncated kernels).

    Uses ``Q_l y = y - (I - Q)^l y`` with the residual updated in place, so no
    ``Q_l`` matrix is formed.
    """
    Qm = Q.matrix if isinstance(Q, MarkovKernel) else np.asarray(Q, dtype=np.float64)
    y = _as_signal(y)
    ref = _as_signal(reference)
    scale = np.linalg.norm(ref)
    d = y.copy()
    errs = np.empty(L)
    for k in range(L):
        d = d - Qm @ d
        errs[k] = np.linalg.norm((y - d) - ref) / scale
    return errs

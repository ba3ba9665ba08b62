"""Pure-numpy implementation of the hot kernels (fallback for ``_ckernels``)."""

import numpy as np

GAUSSIAN = 0
POWER_LAW = 1

# rows processed per block in extend(); bounds peak memory at _BLOCK * n doubles
_BLOCK = 4096


def _profile(r, kind, q, c):
    if kind == GAUSSIAN:
        return np.exp(-r * r)
    return 1.0 / (1.0 + r**q / c)


def sq_distances(a, b):
    """Squared Euclidean distances between rows of ``a`` and rows of ``b``."""
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_rows(xq, xs, sigma, kind, q, c, floor):
    """Normalized kernel rows; rows whose raw sum is below ``floor`` are zeroed."""
    g = _profile(np.sqrt(sq_distances(xq, xs)) / sigma, kind, q, c)
    total = g.sum(axis=1)
    flags = total < floor
    w = np.zeros_like(g)
    ok = ~flags
    w[ok] = g[ok] / total[ok, None]
    return w, flags


def extend(xq, xs, sigmas, resid, kind, q, c, floor):
    """Sum over levels of normalized-kernel averages of per-level residuals.

    Returns the extended values and, per query point, the number of levels whose
    normalization underflowed (those levels contribute zero).
    """
    m = xq.shape[0]
    values = np.zeros(m)
    counts = np.zeros(m, dtype=np.int64)
    for start in range(0, m, _BLOCK):
        stop = min(start + _BLOCK, m)
        dist = np.sqrt(sq_distances(xq[start:stop], xs))
        acc = np.zeros(stop - start)
        for sigma, d in zip(sigmas, resid):
            g = _profile(dist / sigma, kind, q, c)
            total = g.sum(axis=1)
            bad = total < floor
            counts[start:stop] += bad
            total[bad] = 1.0
            # row-wise reduction: a query's value must not depend on the block it sits in
            contrib = ((g / total[:, None]) * d).sum(axis=1)
            contrib[bad] = 0.0
            acc += contrib
        values[start:stop] = acc
    return values, counts

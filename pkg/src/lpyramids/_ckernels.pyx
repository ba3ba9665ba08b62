# cython: language_level=3
"""Compiled kernels for radial-profile weights and multilevel extension.

Mirrors ``_pykernels`` call for call. Sums within a row run left to right.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow, sqrt

cnp.import_array()

cdef enum:
    GAUSSIAN = 0
    POWER_LAW = 1


cdef inline double _profile(double r, int kind, double q, double c) noexcept nogil:
    if kind == GAUSSIAN:
        return exp(-r * r)
    return 1.0 / (1.0 + pow(r, q) / c)


def sq_distances(const double[:, ::1] a, const double[:, ::1] b):
    """Squared Euclidean distances between rows of ``a`` and rows of ``b``."""
    cdef Py_ssize_t m = a.shape[0], n = b.shape[0], p = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, t
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(m):
            for j in range(n):
                acc = 0.0
                for k in range(p):
                    t = a[i, k] - b[j, k]
                    acc = acc + t * t
                o[i, j] = acc
    return out


def kernel_rows(const double[:, ::1] xq, const double[:, ::1] xs, double sigma,
                int kind, double q, double c, double floor):
    """Normalized kernel rows; rows whose raw sum is below ``floor`` are zeroed."""
    cdef Py_ssize_t m = xq.shape[0], n = xs.shape[0], p = xq.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, t, total
    out = np.empty((m, n), dtype=np.float64)
    flags = np.zeros(m, dtype=np.bool_)
    cdef double[:, ::1] w = out
    cdef cnp.npy_bool[::1] f = flags
    with nogil:
        for i in range(m):
            total = 0.0
            for j in range(n):
                acc = 0.0
                for k in range(p):
                    t = xq[i, k] - xs[j, k]
                    acc = acc + t * t
                w[i, j] = _profile(sqrt(acc) / sigma, kind, q, c)
                total = total + w[i, j]
            if total < floor:
                f[i] = 1
                for j in range(n):
                    w[i, j] = 0.0
            else:
                for j in range(n):
                    w[i, j] = w[i, j] / total
    return out, flags


def extend(const double[:, ::1] xq, const double[:, ::1] xs, const double[::1] sigmas,
           const double[:, ::1] resid, int kind, double q, double c, double floor):
    """Sum over levels of normalized-kernel averages of per-level residuals.

    Returns the extended values and, per query point, the number of levels whose
    normalization underflowed (those levels contribute zero).
    """
    cdef Py_ssize_t m = xq.shape[0], n = xs.shape[0], p = xq.shape[1]
    cdef Py_ssize_t nlev = sigmas.shape[0]
    cdef Py_ssize_t i, j, k, lev
    cdef double acc, t, total, s, val
    values = np.zeros(m, dtype=np.float64)
    counts = np.zeros(m, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    g = np.empty(n, dtype=np.float64)
    cdef double[::1] v = values
    cdef cnp.int64_t[::1] cnt = counts
    cdef double[::1] dd = dist
    cdef double[::1] gg = g
    with nogil:
        for i in range(m):
            for j in range(n):
                acc = 0.0
                for k in range(p):
                    t = xq[i, k] - xs[j, k]
                    acc = acc + t * t
                dd[j] = sqrt(acc)
            val = 0.0
            for lev in range(nlev):
                total = 0.0
                for j in range(n):
                    gg[j] = _profile(dd[j] / sigmas[lev], kind, q, c)
                    total = total + gg[j]
                if total < floor:
                    cnt[i] += 1
                    continue
                s = 0.0
                for j in range(n):
                    s = s + (gg[j] / total) * resid[lev, j]
                val = val + s
            v[i] = val
    return values, counts

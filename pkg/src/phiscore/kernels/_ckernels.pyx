# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Semantics mirror ``_fallback`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, INFINITY, isfinite, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double LOG_2PI = 1.8378770664093453
cdef double EPS10 = 10.0 * 2.220446049250313e-16


cdef double _e_step(const double[:] x, double[:] w, double[:] mu, double[:] var,
                    double[:, :] resp) noexcept nogil:
    """Fill ``resp`` with responsibilities; return the mean log-likelihood."""
    cdef Py_ssize_t n = x.shape[0], k = w.shape[0], i, j
    cdef double total = 0.0, mx, s, lp, d
    for i in range(n):
        mx = -INFINITY
        for j in range(k):
            d = x[i] - mu[j]
            lp = -0.5 * (LOG_2PI + log(var[j]) + d * d / var[j]) + log(w[j])
            resp[i, j] = lp
            if lp > mx:
                mx = lp
        s = 0.0
        for j in range(k):
            s += exp(resp[i, j] - mx)
        lp = mx + log(s)
        for j in range(k):
            resp[i, j] = exp(resp[i, j] - lp)
        total += lp
    return total / n


cdef void _m_step(const double[:] x, double[:] w, double[:] mu, double[:] var,
                  double[:, :] resp, double reg) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], k = w.shape[0], i, j
    cdef double nk, sx, sxx, d, wsum = 0.0
    for j in range(k):
        nk = 0.0
        sx = 0.0
        for i in range(n):
            nk += resp[i, j]
            sx += resp[i, j] * x[i]
        nk += EPS10
        mu[j] = sx / nk
        sxx = 0.0
        for i in range(n):
            d = x[i] - mu[j]
            sxx += resp[i, j] * d * d
        var[j] = sxx / nk + reg
        w[j] = nk
        wsum += nk
    for j in range(k):
        w[j] = w[j] / wsum


def em_loop(const double[:] x, double[:] w, double[:] mu, double[:] var,
            double tol, int max_iter, double reg):
    """Run EM in place on (w, mu, var).

    Returns (trace, n_iter, converged, final_mean_loglik, bad_iter) where
    bad_iter is the 1-based iteration that produced a non-finite
    likelihood, or 0.
    """
    cdef Py_ssize_t n = x.shape[0], k = w.shape[0]
    cdef double[:, :] resp = np.empty((n, k), dtype=np.float64)
    trace_arr = np.empty(max_iter, dtype=np.float64)
    cdef double[:] trace = trace_arr
    cdef double lower = -INFINITY, prev, final
    cdef int it = 0, n_iter = 0, bad = 0
    cdef bint converged = False
    with nogil:
        for it in range(1, max_iter + 1):
            prev = lower
            lower = _e_step(x, w, mu, var, resp)
            if not isfinite(lower):
                bad = it
                break
            _m_step(x, w, mu, var, resp, reg)
            trace[it - 1] = lower
            n_iter = it
            if fabs(lower - prev) < tol:
                converged = True
                break
        final = _e_step(x, w, mu, var, resp)
    return trace_arr[:n_iter].copy(), n_iter, bool(converged), final, bad


def lloyd_1d(const double[:] x, double[:] centers, int max_iter):
    """Lloyd iterations in place on ``centers``; returns (labels, n_iter)."""
    cdef Py_ssize_t n = x.shape[0], k = centers.shape[0], i, j, best, far
    labels_arr = np.zeros(n, dtype=np.intp)
    new_arr = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[:] labels = labels_arr
    cdef Py_ssize_t[:] new = new_arr
    cdef double[:] sums = np.zeros(k, dtype=np.float64)
    cdef Py_ssize_t[:] counts = np.zeros(k, dtype=np.intp)
    cdef double[:] dist = np.zeros(n, dtype=np.float64)
    cdef double bd, d, fd
    cdef int it, n_iter = 0
    cdef bint changed
    with nogil:
        _assign(x, centers, labels)
        for it in range(max_iter):
            n_iter = it + 1
            for j in range(k):
                sums[j] = 0.0
                counts[j] = 0
            for i in range(n):
                sums[labels[i]] += x[i]
                counts[labels[i]] += 1
            for i in range(n):
                dist[i] = fabs(x[i] - centers[labels[i]])
            for j in range(k):
                if counts[j] > 0:
                    centers[j] = sums[j] / counts[j]
            for j in range(k):
                if counts[j] == 0:
                    far = 0
                    fd = -1.0
                    for i in range(n):
                        if dist[i] > fd:
                            fd = dist[i]
                            far = i
                    centers[j] = x[far]
                    dist[far] = -1.0
            _assign(x, centers, new)
            changed = False
            for i in range(n):
                if new[i] != labels[i]:
                    changed = True
                labels[i] = new[i]
            if not changed:
                break
    return labels_arr, n_iter


cdef void _assign(const double[:] x, double[:] centers, Py_ssize_t[:] labels) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], k = centers.shape[0], i, j, best
    cdef double bd, d
    for i in range(n):
        best = 0
        bd = fabs(x[i] - centers[0])
        for j in range(1, k):
            d = fabs(x[i] - centers[j])
            if d < bd:
                bd = d
                best = j
        labels[i] = best


def indel_distance(str a, str b):
    """Insert/delete edit distance: len(a) + len(b) - 2 * LCS(a, b)."""
    cdef Py_ssize_t la = len(a), lb = len(b), i, j
    cdef Py_ssize_t *row
    cdef Py_ssize_t prev_diag, tmp, lcs
    cdef Py_UCS4 ca
    if la == 0 or lb == 0:
        return la + lb
    row = <Py_ssize_t *> malloc((lb + 1) * sizeof(Py_ssize_t))
    if row == NULL:
        raise MemoryError()
    try:
        for j in range(lb + 1):
            row[j] = 0
        for i in range(la):
            ca = a[i]
            prev_diag = 0
            for j in range(1, lb + 1):
                tmp = row[j]
                if ca == b[j - 1]:
                    row[j] = prev_diag + 1
                elif row[j - 1] > row[j]:
                    row[j] = row[j - 1]
                prev_diag = tmp
        lcs = row[lb]
    finally:
        free(row)
    return la + lb - 2 * lcs


def permutation_counts(const cnp.uint8_t[:] flags, const cnp.int64_t[:, :] swaps):
    """Count flagged items in the first ``swaps.shape[1]`` slots after a
    partial Fisher-Yates shuffle driven by each row of ``swaps``."""
    cdef Py_ssize_t n = flags.shape[0], n_perm = swaps.shape[0], m = swaps.shape[1]
    cdef Py_ssize_t p, i, j, t
    counts_arr = np.zeros(n_perm, dtype=np.int64)
    cdef cnp.int64_t[:] counts = counts_arr
    cdef Py_ssize_t[:] idx = np.empty(n, dtype=np.intp)
    cdef cnp.int64_t c
    with nogil:
        for p in range(n_perm):
            for i in range(n):
                idx[i] = i
            c = 0
            for i in range(m):
                j = swaps[p, i]
                t = idx[i]
                idx[i] = idx[j]
                idx[j] = t
                c += flags[idx[i]]
            counts[p] = c
    return counts_arr

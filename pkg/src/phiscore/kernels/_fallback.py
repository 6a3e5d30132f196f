"""Pure numpy/Python versions of the compiled kernels.

Same contracts as ``_ckernels``; results agree to floating-point
round-off (summation order differs), not bit for bit.
"""

import numpy as np

LOG_2PI = np.log(2.0 * np.pi)
EPS10 = 10.0 * np.finfo(np.float64).eps


def _e_step(x, w, mu, var):
    log_prob = -0.5 * (LOG_2PI + np.log(var) + (x[:, None] - mu) ** 2 / var) + np.log(w)
    mx = log_prob.max(axis=1, keepdims=True)
    norm = mx[:, 0] + np.log(np.exp(log_prob - mx).sum(axis=1))
    resp = np.exp(log_prob - norm[:, None])
    return norm.mean(), resp


def _m_step(x, w, mu, var, resp, reg):
    nk = resp.sum(axis=0) + EPS10
    mu[:] = resp.T @ x / nk
    var[:] = (resp * (x[:, None] - mu) ** 2).sum(axis=0) / nk + reg
    w[:] = nk / nk.sum()


def em_loop(x, w, mu, var, tol, max_iter, reg):
    lower = -np.inf
    trace = []
    converged = False
    bad = 0
    for it in range(1, max_iter + 1):
        prev = lower
        with np.errstate(all="ignore"):
            lower, resp = _e_step(x, w, mu, var)
        if not np.isfinite(lower):
            bad = it
            break
        _m_step(x, w, mu, var, resp, reg)
        trace.append(lower)
        if abs(lower - prev) < tol:
            converged = True
            break
    with np.errstate(all="ignore"):
        final, _ = _e_step(x, w, mu, var)
    return np.asarray(trace, dtype=np.float64), len(trace), converged, float(final), bad


def _assign(x, centers):
    # argmin returns the first index on ties, matching the compiled loop
    return np.abs(x[:, None] - centers[None, :]).argmin(axis=1)


def lloyd_1d(x, centers, max_iter):
    k = centers.shape[0]
    labels = _assign(x, centers)
    n_iter = 0
    for it in range(max_iter):
        n_iter = it + 1
        counts = np.bincount(labels, minlength=k)
        sums = np.bincount(labels, weights=x, minlength=k)
        dist = np.abs(x - centers[labels])
        occupied = counts > 0
        centers[occupied] = sums[occupied] / counts[occupied]
        for j in np.flatnonzero(~occupied):
            far = int(np.argmax(dist))
            centers[j] = x[far]
            dist[far] = -1.0
        new = _assign(x, centers)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels.astype(np.intp), n_iter


def indel_distance(a, b):
    # bit-parallel LCS (Allison-Dix / Hyyro); python ints act as bit vectors
    if not a or not b:
        return len(a) + len(b)
    masks = {}
    for i, ch in enumerate(a):
        masks[ch] = masks.get(ch, 0) | (1 << i)
    full = (1 << len(a)) - 1
    v = full
    for ch in b:
        m = masks.get(ch, 0)
        u = v & m
        v = ((v + u) | (v - u)) & full
    lcs = len(a) - bin(v).count("1")
    return len(a) + len(b) - 2 * lcs


def permutation_counts(flags, swaps):
    n_perm, m = swaps.shape
    n = flags.shape[0]
    idx = np.tile(np.arange(n, dtype=np.intp), (n_perm, 1))
    rows = np.arange(n_perm)
    for i in range(m):
        j = swaps[:, i]
        tmp = idx[rows, i].copy()
        idx[rows, i] = idx[rows, j]
        idx[rows, j] = tmp
    return flags[idx[:, :m]].sum(axis=1, dtype=np.int64)

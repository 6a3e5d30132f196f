"""Hot-loop kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it was built; setting the
environment variable ``PHISCORE_PURE_PYTHON=1`` forces the fallback.
Both backends expose:

em_loop(x, w, mu, var, tol, max_iter, reg)
    EM iterations for a univariate Gaussian mixture, updating the
    parameter arrays in place.
lloyd_1d(x, centers, max_iter)
    Lloyd k-means iterations in one dimension.
indel_distance(a, b)
    Insert/delete edit distance between two strings.
permutation_counts(flags, swaps)
    Flagged counts in partial Fisher-Yates samples.
"""

import os

from . import _fallback

BACKEND = "python"

if os.environ.get("PHISCORE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

em_loop = _impl.em_loop
lloyd_1d = _impl.lloyd_1d
indel_distance = _impl.indel_distance
permutation_counts = _impl.permutation_counts


def compiled():
    """Return the compiled module, or None if it is unavailable."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


__all__ = [
    "BACKEND",
    "compiled",
    "em_loop",
    "indel_distance",
    "lloyd_1d",
    "permutation_counts",
]

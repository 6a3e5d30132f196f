"""Quantile machinery and non-parametric statistics.

Everything here is a pure function of its inputs. Quantiles use linear
interpolation on (n - 1) p, the usual "type 7" estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

QUANTILE_LEVELS = (0.05, 0.25, 0.50, 0.75, 0.95)
KS_SERIES_TERMS = 100


class DegenerateScaleError(ValueError):
    """Raised when the global IQR is zero and standardisation is undefined."""


@dataclass(frozen=True)
class QuantileSet:
    q05: float
    q25: float
    q50: float
    q75: float
    q95: float
    n: int

    @classmethod
    def from_sample(cls, sample) -> "QuantileSet":
        xs = np.sort(np.asarray(sample, dtype=np.float64))
        q = quantiles(xs, QUANTILE_LEVELS, presorted=True)
        return cls(*(float(v) for v in q), n=int(xs.size))


@dataclass(frozen=True)
class GlobalScale:
    """Global median and IQR of all cleaned payments, in GBP."""

    median: float
    iqr: float

    @classmethod
    def from_amounts(cls, amounts) -> "GlobalScale":
        q25, q50, q75 = quantiles(amounts, (0.25, 0.5, 0.75))
        return cls(median=float(q50), iqr=float(q75 - q25))

    def to_gbp(self, standardised):
        return np.asarray(standardised) * self.iqr + self.median


def quantile(sample, p: float) -> float:
    """Linear-interpolation quantile of ``sample`` at level ``p``.

    ``sample`` does not need to be sorted.

    >>> quantile([1, 2, 3, 4], 0.5)
    2.5
    """
    return float(quantiles(sample, (p,))[0])


def quantiles(sample, ps, presorted: bool = False) -> np.ndarray:
    xs = np.asarray(sample, dtype=np.float64)
    if xs.size == 0:
        raise ValueError("quantile of an empty sample")
    if not presorted:
        xs = np.sort(xs)
    ps = np.asarray(ps, dtype=np.float64)
    if np.any((ps < 0) | (ps > 1)):
        raise ValueError("quantile level outside [0, 1]")
    h = (xs.size - 1) * ps
    lo = np.floor(h).astype(np.intp)
    hi = np.minimum(lo + 1, xs.size - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def robust_standardise(amount, scale: GlobalScale):
    """(amount - global median) / global IQR. Works on scalars and arrays."""
    if not scale.iqr > 0:
        raise DegenerateScaleError(f"global IQR is {scale.iqr}; cannot standardise")
    return (np.asarray(amount, dtype=np.float64) - scale.median) / scale.iqr


def bowley_skewness(q: QuantileSet) -> float:
    spread = q.q75 - q.q25
    if spread == 0:
        return 0.0
    return (q.q75 + q.q25 - 2.0 * q.q50) / spread


def tail_ratio(q: QuantileSet, eps: float = 1e-6) -> float:
    return ((q.q95 - q.q05) + eps) / ((q.q75 - q.q25) + eps)


def coefficient_of_variation(sample, ddof: int = 0) -> float:
    xs = np.asarray(sample, dtype=np.float64)
    mean = xs.mean()
    if mean == 0:
        raise ZeroDivisionError("coefficient of variation undefined for zero mean")
    return float(xs.std(ddof=ddof) / mean)


def rankdata(values) -> np.ndarray:
    """Ranks starting at 1, ties receive the average of their positions."""
    xs = np.asarray(values, dtype=np.float64)
    order = np.argsort(xs, kind="mergesort")
    sorted_x = xs[order]
    # boundaries of runs of equal values
    starts = np.r_[True, sorted_x[1:] != sorted_x[:-1]]
    run_id = np.cumsum(starts) - 1
    first = np.flatnonzero(starts)
    last = np.r_[first[1:], xs.size] - 1
    avg = (first + last) / 2.0 + 1.0
    ranks = np.empty(xs.size, dtype=np.float64)
    ranks[order] = avg[run_id]
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0:
        raise ValueError("correlation undefined: constant input")
    return float(da @ db) / denom


def spearman_rho(x, y) -> tuple[float, float]:
    """Spearman correlation with a two-sided t-approximation p-value."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("spearman_rho needs equal-length inputs")
    n = x.size
    if n < 3:
        raise ValueError("spearman_rho needs at least 3 pairs")
    rho = _pearson(rankdata(x), rankdata(y))
    rho = max(-1.0, min(1.0, rho))
    df = n - 2
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt(df / ((1.0 - rho) * (1.0 + rho)))
    p = 2.0 * special.stdtr(df, -abs(t))
    return rho, float(p)


def ecdf(sample):
    """Return (sorted values, cumulative proportions) step points."""
    xs = np.sort(np.asarray(sample, dtype=np.float64))
    return xs, np.arange(1, xs.size + 1) / xs.size


def ks_statistic(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample needs non-empty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def kolmogorov_sf(lam: float, terms: int = KS_SERIES_TERMS) -> float:
    """Survival function of the Kolmogorov distribution, series form."""
    if lam <= 0:
        return 1.0
    j = np.arange(1, terms + 1)
    s = 2.0 * np.sum((-1.0) ** (j - 1) * np.exp(-2.0 * j * j * lam * lam))
    return float(min(1.0, max(0.0, s)))


def ks_two_sample(a, b, method: str = "asymptotic") -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and two-sided p-value.

    ``method="asymptotic"`` evaluates the Kolmogorov series at
    sqrt(n_eff) * D with n_eff = n_a n_b / (n_a + n_b). ``method="finite"``
    uses the exact one-sample distribution at round(n_eff), which is what
    several statistics packages report for large samples.
    """
    d = ks_statistic(a, b)
    na, nb = len(a), len(b)
    en = na * nb / (na + nb)
    if method == "asymptotic":
        p = kolmogorov_sf(math.sqrt(en) * d)
    elif method == "finite":
        from scipy.stats import kstwo

        p = float(kstwo.sf(d, max(1, round(en))))
    else:
        raise ValueError(f"unknown K-S p-value method {method!r}")
    return d, p


def lorenz_points(spend_by_supplier) -> list[tuple[float, float]]:
    spend = np.sort(np.asarray(spend_by_supplier, dtype=np.float64))
    if np.any(spend < 0):
        raise ValueError("negative spend in Lorenz input")
    total = spend.sum()
    if total <= 0:
        raise ValueError("Lorenz curve undefined for zero total spend")
    n = spend.size
    xs = np.arange(n + 1) / n
    ys = np.r_[0.0, np.cumsum(spend) / total]
    ys[-1] = 1.0
    return list(zip(xs.tolist(), ys.tolist()))


def top_share(points, supplier_share: float) -> float:
    """Spend share of the top ``supplier_share`` fraction on a Lorenz curve."""
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    return float(1.0 - np.interp(1.0 - supplier_share, xs, ys))

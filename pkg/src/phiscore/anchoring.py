"""Threshold anchoring: recurring payment levels among mixture centres.

Peaks are found in a Gaussian-smoothed histogram of High-tier centres
(in GBP). Every centre is then assigned its nearest peak, flagged as
proximate inside a percentage window, and the High-tier excess of
proximate centres is tested by permuting tier labels.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .robust_stats import ecdf, ks_two_sample

logger = logging.getLogger(__name__)

PERM_CHUNK = 1000


@dataclass(frozen=True)
class AnchoringConfig:
    bin_width: float = 100.0
    range_min: float = 0.0
    range_max: float = 30000.0
    sigma_bins: float = 4.0
    truncate: float = 4.0
    prominence_frac: float = 0.04
    min_position: float = 300.0
    windows: tuple = (5.0, 10.0)
    n_perm: int = 5000
    seed: int = 0
    plus_one_p: bool = False
    target_tier: str = "High"
    peak_tier: str = "High"
    # exogenous peak list; replaces endogenous detection when given
    peaks: tuple | None = None


@dataclass(frozen=True)
class CentreObservation:
    supplier: str
    centre_gbp: float
    tier: str
    weight: float
    phi: float = float("nan")


@dataclass
class PermutationResult:
    window: float
    observed: int
    n_target: int
    perm_mean: float
    p_value: float
    n_perm: int
    seed: int
    plus_one: bool
    null_counts: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0, dtype=np.int64))

    def to_dict(self) -> dict:
        return {
            "window_pct": self.window,
            "observed": self.observed,
            "n_target": self.n_target,
            "perm_mean": self.perm_mean,
            "p_value": self.p_value,
            "p_value_kind": "(1+count)/(1+N)" if self.plus_one else "count/N",
            "n_perm": self.n_perm,
            "seed": self.seed,
        }


def bin_edges(cfg: AnchoringConfig) -> np.ndarray:
    n_bins = int(round((cfg.range_max - cfg.range_min) / cfg.bin_width))
    return cfg.range_min + cfg.bin_width * np.arange(n_bins + 1)


def gaussian_kernel(sigma: float, truncate: float = 4.0) -> np.ndarray:
    radius = int(truncate * sigma + 0.5)
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def histogram_counts(values, cfg: AnchoringConfig) -> np.ndarray:
    """Counts in left-closed bins; the top edge belongs to the last bin."""
    if cfg.bin_width <= 0:
        raise ValueError("bin_width must be positive")
    v = np.asarray(values, dtype=np.float64)
    v = v[(v >= cfg.range_min) & (v <= cfg.range_max)]
    edges = bin_edges(cfg)
    n_bins = edges.size - 1
    idx = np.floor((v - cfg.range_min) / cfg.bin_width).astype(np.intp)
    idx = np.minimum(idx, n_bins - 1)
    return np.bincount(idx, minlength=n_bins).astype(np.float64)


def smoothed_histogram(values, cfg: AnchoringConfig = AnchoringConfig()) -> np.ndarray:
    counts = histogram_counts(values, cfg)
    if counts.sum() == 0:
        raise ValueError("no values inside the histogram range")
    return np.convolve(counts, gaussian_kernel(cfg.sigma_bins, cfg.truncate), mode="same")


def local_maxima(x: np.ndarray) -> np.ndarray:
    """Indices of strict local maxima; flat tops report their middle sample."""
    peaks = []
    i, n = 1, x.size
    while i < n - 1:
        if x[i - 1] < x[i]:
            ahead = i + 1
            while ahead < n - 1 and x[ahead] == x[i]:
                ahead += 1
            if x[ahead] < x[i]:
                peaks.append((i + ahead - 1) // 2)
                i = ahead
        i += 1
    return np.asarray(peaks, dtype=np.intp)


def prominences(x: np.ndarray, peaks: np.ndarray) -> np.ndarray:
    """Topographic prominence of each peak.

    Walk outwards until strictly higher terrain or the array edge; the
    base is the higher of the two minima found on either side.
    """
    out = np.empty(peaks.size, dtype=np.float64)
    for k, p in enumerate(peaks):
        h = x[p]
        i = p
        left_min = h
        while i > 0 and x[i - 1] <= h:
            i -= 1
            left_min = min(left_min, x[i])
        i = p
        right_min = h
        while i < x.size - 1 and x[i + 1] <= h:
            i += 1
            right_min = min(right_min, x[i])
        out[k] = h - max(left_min, right_min)
    return out


def detect_peaks(density, cfg: AnchoringConfig = AnchoringConfig()) -> np.ndarray:
    """Peak positions (bin centres, GBP) passing prominence and position filters."""
    density = np.asarray(density, dtype=np.float64)
    idx = local_maxima(density)
    if idx.size == 0:
        return np.empty(0)
    prom = prominences(density, idx)
    centres = cfg.range_min + (idx + 0.5) * cfg.bin_width
    keep = (prom >= cfg.prominence_frac * density.max()) & (centres > cfg.min_position)
    if not keep.any():
        logger.warning("no histogram peaks passed the prominence/position filters")
    return np.sort(centres[keep])


def nearest_peak(centre: float, peaks) -> tuple[float, float]:
    """(nearest peak, distance as percent of that peak); ties go to the smaller peak."""
    peaks = np.sort(np.asarray(peaks, dtype=np.float64))
    if peaks.size == 0:
        raise ValueError("no peaks to compare against")
    d = np.abs(centre - peaks)
    # argmin picks the first, i.e. smaller, peak on equal distances
    i = int(np.argmin(d))
    return float(peaks[i]), float(100.0 * d[i] / peaks[i])


def nearest_peaks(centres, peaks) -> tuple[np.ndarray, np.ndarray]:
    peaks = np.sort(np.asarray(peaks, dtype=np.float64))
    if peaks.size == 0:
        raise ValueError("no peaks to compare against")
    c = np.asarray(centres, dtype=np.float64)
    d = np.abs(c[:, None] - peaks[None, :])
    i = d.argmin(axis=1)
    near = peaks[i]
    return near, 100.0 * d[np.arange(c.size), i] / near


def proximity_flags(pct_distance, window: float) -> np.ndarray:
    return np.asarray(pct_distance) <= window * (1 + 1e-12)


def _perm_chunk(flags: np.ndarray, n_target: int, n: int, seed: int, chunk: int, size: int) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chunk,))
    rng = np.random.Generator(np.random.Philox(ss))
    swaps = rng.integers(np.arange(n_target), n, size=(size, n_target), dtype=np.int64)
    return kernels.permutation_counts(flags, swaps)


def permutation_null(flags, n_target: int, n_perm: int = 5000, seed: int = 0, workers: int = 1) -> np.ndarray:
    """Proximate counts among ``n_target`` randomly relabelled observations.

    Each chunk of permutations draws from its own seeded substream, so the
    result does not depend on ``workers``.
    """
    # counts depend only on the multiset of flags; a canonical order makes
    # the null independent of how observations were listed
    flags = np.ascontiguousarray(np.sort(np.asarray(flags, dtype=np.uint8))[::-1])
    n = flags.size
    sizes = [min(PERM_CHUNK, n_perm - s) for s in range(0, n_perm, PERM_CHUNK)]
    jobs = [(flags, n_target, n, seed, c, size) for c, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda a: _perm_chunk(*a), jobs))
    else:
        parts = [_perm_chunk(*a) for a in jobs]
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def permutation_test(
    flags,
    tiers,
    target_tier: str = "High",
    n_perm: int = 5000,
    seed: int = 0,
    plus_one: bool = False,
    workers: int = 1,
    window: float = float("nan"),
) -> PermutationResult:
    """One-sided test of excess proximate observations in ``target_tier``.

    Proximity flags stay attached to their observations; only the tier
    labels are shuffled. p is the share of permutations whose count is at
    least the observed one.
    """
    flags = np.asarray(flags, dtype=bool)
    target = np.asarray(tiers) == target_tier
    n_target = int(target.sum())
    if n_target == 0:
        raise ValueError(f"no observations in tier {target_tier!r}")
    observed = int((flags & target).sum())
    null = permutation_null(flags, n_target, n_perm, seed, workers)
    ge = int((null >= observed).sum())
    p = (1 + ge) / (1 + n_perm) if plus_one else ge / n_perm
    return PermutationResult(
        window=window,
        observed=observed,
        n_target=n_target,
        perm_mean=float(null.mean()),
        p_value=float(p),
        n_perm=n_perm,
        seed=seed,
        plus_one=plus_one,
        null_counts=null,
    )


def tier_proximity_table(tiers, near, pct_distance, peaks, windows=(5.0, 10.0)) -> dict:
    """Proportion of centres within each window, per tier and per peak."""
    tiers = np.asarray(tiers)
    near = np.asarray(near, dtype=np.float64)
    pct = np.asarray(pct_distance, dtype=np.float64)
    overall, per_peak = {}, []
    for tier in ("Low", "Moderate", "High"):
        in_tier = tiers == tier
        n = int(in_tier.sum())
        overall[tier] = {"n": n}
        for w in windows:
            hits = proximity_flags(pct, w) & in_tier
            overall[tier][f"within_{w:g}pct"] = float(hits.sum() / n) if n else 0.0
            overall[tier][f"count_{w:g}pct"] = int(hits.sum())
            for pk in peaks:
                at = hits & (near == pk)
                per_peak.append(
                    {
                        "peak": float(pk),
                        "tier": tier,
                        "window_pct": w,
                        "count": int(at.sum()),
                        "proportion": float(at.sum() / n) if n else 0.0,
                    }
                )
    return {"by_tier": overall, "by_peak": per_peak}


@dataclass
class AnchoringResult:
    peaks: np.ndarray
    density: np.ndarray | None
    observations: list[CentreObservation]
    nearest: np.ndarray
    pct_distance: np.ndarray
    table: dict
    permutation: list[PermutationResult]
    ks: dict

    def to_dict(self, cfg: AnchoringConfig) -> dict:
        return {
            "config": {
                k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.__dict__.items()
            },
            "peaks": self.peaks.tolist(),
            "peak_source": "exogenous" if cfg.peaks else f"endogenous ({cfg.peak_tier} tier centres)",
            "n_observations": len(self.observations),
            "proximity": self.table,
            "permutation": [r.to_dict() for r in self.permutation],
            "ks": self.ks,
        }


def analyse(observations: list[CentreObservation], cfg: AnchoringConfig = AnchoringConfig(), workers: int = 1) -> AnchoringResult:
    centres = np.array([o.centre_gbp for o in observations], dtype=np.float64)
    tiers = np.array([o.tier for o in observations])
    density = None
    if cfg.peaks:
        peaks = np.sort(np.asarray(cfg.peaks, dtype=np.float64))
    else:
        density = smoothed_histogram(centres[tiers == cfg.peak_tier], cfg)
        peaks = detect_peaks(density, cfg)
    if peaks.size == 0:
        raise ValueError("anchoring needs at least one peak")
    near, pct = nearest_peaks(centres, peaks)
    table = tier_proximity_table(tiers, near, pct, peaks, cfg.windows)
    perms = [
        permutation_test(
            proximity_flags(pct, w), tiers, cfg.target_tier, cfg.n_perm, cfg.seed, cfg.plus_one_p, workers, window=w
        )
        for w in cfg.windows
    ]
    high, low = pct[tiers == "High"], pct[tiers == "Low"]
    if high.size and low.size:
        d, p = ks_two_sample(high, low)
        _, p_finite = ks_two_sample(high, low, method="finite")
        ks = {
            "statistic": d,
            "p_value": p,
            "method": "asymptotic",
            "p_value_finite": p_finite,
            "n_high": int(high.size),
            "n_low": int(low.size),
        }
    else:
        ks = {"statistic": None, "p_value": None, "n_high": int(high.size), "n_low": int(low.size)}
    return AnchoringResult(peaks, density, observations, near, pct, table, perms, ks)


def ecdf_rows(pct, tiers) -> list[dict]:
    rows = []
    for tier in ("High", "Low"):
        xs, ys = ecdf(np.asarray(pct)[np.asarray(tiers) == tier]) if (np.asarray(tiers) == tier).any() else ([], [])
        rows.extend({"tier": tier, "distance_pct": float(x), "ecdf": float(y)} for x, y in zip(xs, ys))
    return rows

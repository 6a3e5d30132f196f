"""Univariate Gaussian mixtures fitted by EM with k-means initialisation.

Model selection is by BIC over k = 1..k_max(n). Negligible components of
the winning model are then pruned and the weights renormalised. Each
component carries its own scalar variance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

logger = logging.getLogger(__name__)

EPS10 = 10.0 * np.finfo(np.float64).eps


class NumericalError(RuntimeError):
    """EM produced a non-finite likelihood."""


@dataclass(frozen=True)
class EmConfig:
    tol: float = 1e-3
    max_iter: int = 100
    n_init: int = 1
    seed: int = 0
    reg: float = 1e-6
    kmeans_max_iter: int = 300
    k_cap: int = 4
    obs_per_component: int = 25

    def __post_init__(self):
        if self.n_init != 1:
            raise ValueError("only n_init=1 is supported")


@dataclass
class MixtureModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik: float
    bic: float
    n: int
    converged: bool = True
    n_iter: int = 0
    trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    # BIC of every candidate k tried during selection
    candidates: dict = field(default_factory=dict)
    pruned: int = 0

    @property
    def k(self) -> int:
        return int(self.weights.size)

    @property
    def sds(self) -> np.ndarray:
        return np.sqrt(self.variances)

    @property
    def dominant_index(self) -> int:
        return int(np.argmax(self.weights))

    def responsibilities(self, sample) -> np.ndarray:
        x = np.asarray(sample, dtype=np.float64)
        lp = (
            -0.5 * (np.log(2 * np.pi * self.variances) + (x[:, None] - self.means) ** 2 / self.variances)
            + np.log(self.weights)
        )
        lp -= lp.max(axis=1, keepdims=True)
        r = np.exp(lp)
        return r / r.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "sds": self.sds.tolist(),
            "loglik": self.loglik,
            "bic": self.bic,
            "n": self.n,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "pruned": self.pruned,
            "bic_by_k": {str(k): v for k, v in sorted(self.candidates.items())},
        }


def k_max(n: int, cap: int = 4, per_component: int = 25) -> int:
    """Component cap min(cap, n // per_component), never below 1."""
    return max(1, min(cap, n // per_component))


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.size
    centers = np.empty(k, dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    d2 = (x - centers[0]) ** 2
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            r = rng.random() * total
            idx = min(int(np.searchsorted(np.cumsum(d2), r, side="right")), n - 1)
        else:
            idx = int(rng.integers(n))
        centers[j] = x[idx]
        d2 = np.minimum(d2, (x - centers[j]) ** 2)
    return centers


def kmeans_init(sample, k: int, seed: int = 0, reg: float = 1e-6, max_iter: int = 300):
    """Initial (weights, means, variances) from seeded k-means++ and Lloyd.

    Empty clusters keep their k-means centre as mean, get weight of order
    machine epsilon and variance ``reg``.
    """
    x = np.ascontiguousarray(sample, dtype=np.float64)
    rng = np.random.Generator(np.random.Philox(seed))
    centers = _kmeans_pp(x, k, rng)
    labels, _ = kernels.lloyd_1d(x, centers, max_iter)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    sums = np.bincount(labels, weights=x, minlength=k)
    nk = counts + EPS10
    means = np.where(counts > 0, sums / np.maximum(counts, 1.0), centers)
    sq = np.bincount(labels, weights=(x - means[labels]) ** 2, minlength=k)
    variances = sq / nk + reg
    weights = nk / nk.sum()
    return weights, means, variances


def bic(loglik: float, k: int, n: int) -> float:
    """-2 loglik + (3k - 1) ln n for a univariate k-component mixture."""
    return -2.0 * loglik + (3 * k - 1) * math.log(n)


def em_fit(sample, k: int, cfg: EmConfig = EmConfig()) -> MixtureModel:
    x = np.ascontiguousarray(sample, dtype=np.float64)
    n = x.size
    if n < 2 * k:
        logger.warning("fitting k=%d components to only %d observations", k, n)
    w, mu, var = kmeans_init(x, k, cfg.seed, cfg.reg, cfg.kmeans_max_iter)
    trace, n_iter, converged, final, bad = kernels.em_loop(x, w, mu, var, cfg.tol, cfg.max_iter, cfg.reg)
    if bad or not math.isfinite(final):
        raise NumericalError(f"non-finite log-likelihood at EM iteration {bad or n_iter + 1} (k={k})")
    if not converged:
        logger.info("EM hit max_iter=%d without meeting tol (k=%d, n=%d)", cfg.max_iter, k, n)
    order = np.argsort(mu, kind="mergesort")
    loglik = final * n
    return MixtureModel(
        weights=w[order].copy(),
        means=mu[order].copy(),
        variances=var[order].copy(),
        loglik=loglik,
        bic=bic(loglik, k, n),
        n=n,
        converged=converged,
        n_iter=n_iter,
        trace=trace,
    )


def prune(model: MixtureModel, threshold: float = 0.05) -> MixtureModel:
    keep = model.weights >= threshold
    # the heaviest component always has weight >= 1/k >= threshold
    assert keep.any(), "pruning removed every component"
    w = model.weights[keep]
    return MixtureModel(
        weights=w / w.sum(),
        means=model.means[keep].copy(),
        variances=model.variances[keep].copy(),
        loglik=model.loglik,
        bic=model.bic,
        n=model.n,
        converged=model.converged,
        n_iter=model.n_iter,
        trace=model.trace,
        candidates=dict(model.candidates),
        pruned=int((~keep).sum()),
    )


def select_and_prune(sample, cfg: EmConfig = EmConfig(), prune_threshold: float = 0.05) -> MixtureModel:
    """Fit k = 1..k_max(n), keep the lowest-BIC model, prune small weights."""
    x = np.ascontiguousarray(sample, dtype=np.float64)
    best = None
    candidates = {}
    for k in range(1, k_max(x.size, cfg.k_cap, cfg.obs_per_component) + 1):
        m = em_fit(x, k, cfg)
        candidates[k] = m.bic
        if best is None or m.bic < best.bic:
            best = m
    best.candidates = candidates
    return prune(best, prune_threshold)

"""The four structural components, their product and its log decomposition.

All components are computed on a supplier's robustly standardised sample:
modality M from the pruned mixture, asymmetry A and tail behaviour T from
sample quantiles, structural dispersion D from the mixture parameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .gmm import EmConfig, MixtureModel, select_and_prune
from .robust_stats import GlobalScale, QuantileSet, bowley_skewness, rankdata, robust_standardise, tail_ratio

logger = logging.getLogger(__name__)

COMPONENTS = ("M", "A", "T", "D")
TIERS = ("Low", "Moderate", "High")
DEGENERATE_PHI = 1.0 + 1e-12
MIN_TIERED_COHORT = 10


@dataclass(frozen=True)
class PhiComponents:
    M: int
    A: float
    T: float
    D: float

    @property
    def phi(self) -> float:
        return self.M * self.A * self.T * self.D

    def values(self) -> dict:
        return {"M": float(self.M), "A": self.A, "T": self.T, "D": self.D}

    @property
    def contributions(self) -> dict:
        return log_contributions(self)[0]


@dataclass
class PhiScore:
    supplier: str
    components: PhiComponents
    percentile: float = float("nan")
    tier: str = "Low"
    extra: dict = field(default_factory=dict)

    @property
    def phi(self) -> float:
        return self.components.phi


def asymmetry_component(q: QuantileSet) -> float:
    return 1.0 + abs(bowley_skewness(q))


def tail_component(q: QuantileSet, eps: float = 1e-6) -> float:
    return 1.0 + abs(math.log(tail_ratio(q, eps)))


def dispersion_component(model: MixtureModel) -> float:
    w, mu, s = model.weights, model.means, model.sds
    star = model.dominant_index
    d = np.abs(mu - mu[star])
    others = np.arange(w.size) != star
    return float(1.0 + w[star] * s[star] + np.sum(w[others] * s[others] * np.log1p(d[others])))


def compute_phi(model: MixtureModel, q: QuantileSet, eps: float = 1e-6) -> PhiComponents:
    return PhiComponents(
        M=model.k,
        A=asymmetry_component(q),
        T=tail_component(q, eps),
        D=dispersion_component(model),
    )


def log_contributions(c: PhiComponents) -> tuple[dict, bool]:
    """Percent share of each component in ln(PHI).

    Returns (contributions, defined). When PHI is not above 1 the shares
    are undefined and reported as zeros with ``defined=False``.
    """
    phi = c.phi
    if phi <= DEGENERATE_PHI:
        return {k: 0.0 for k in COMPONENTS}, False
    lphi = math.log(phi)
    vals = c.values()
    return {k: 100.0 * math.log(vals[k]) / lphi for k in COMPONENTS}, True


def percentile_ranks(scores) -> np.ndarray:
    """100 * average rank / N; the unique maximum maps to 100."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("percentile_ranks needs at least one score")
    return 100.0 * rankdata(s) / s.size


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def tier_counts(n: int, p_low: float = 70.0, p_high: float = 90.0) -> tuple[int, int, int]:
    """Whole-supplier (High, Moderate, Low) counts for a cohort of ``n``."""
    if n < MIN_TIERED_COHORT:
        return 0, 0, n
    high = _round_half_up(n * (100.0 - p_high) / 100.0)
    upper = _round_half_up(n * (100.0 - p_low) / 100.0)
    high = min(high, n)
    moderate = max(0, min(upper, n) - high)
    return high, moderate, n - high - moderate


def assign_tiers(scores: list[PhiScore], p_low: float = 70.0, p_high: float = 90.0) -> list[PhiScore]:
    """Set percentile and tier on every score; returns them ranked by PHI.

    Ordering is PHI descending, then supplier id ascending, so boundary
    ties resolve deterministically.
    """
    n = len(scores)
    if n == 0:
        return []
    pct = percentile_ranks([s.phi for s in scores])
    for s, p in zip(scores, pct):
        s.percentile = float(p)
    ranked = sorted(scores, key=lambda s: (-s.phi, s.supplier))
    high, moderate, _ = tier_counts(n, p_low, p_high)
    if n < MIN_TIERED_COHORT:
        logger.warning("cohort of %d suppliers is too small for percentile tiers; all Low", n)
    for i, s in enumerate(ranked):
        s.tier = "High" if i < high else "Moderate" if i < high + moderate else "Low"
    return ranked


def score_sample(
    amounts_gbp,
    scale: GlobalScale,
    em: EmConfig = EmConfig(),
    prune_threshold: float = 0.05,
    eps: float = 1e-6,
) -> tuple[PhiComponents, MixtureModel, QuantileSet]:
    """Standardise one supplier's payments, fit the mixture and score it."""
    z = robust_standardise(np.asarray(amounts_gbp, dtype=np.float64), scale)
    model = select_and_prune(z, em, prune_threshold)
    q = QuantileSet.from_sample(z)
    return compute_phi(model, q, eps), model, q

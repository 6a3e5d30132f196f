"""Seeded synthetic payment cohorts with known mixture structure.

Archetype defaults echo the shapes of the worked supplier cases: a
unimodal supplier, two materially separated regimes, closely spaced
tiers, a dominant regime with a far high-value regime, and a heaped
supplier whose interquartile range collapses onto one price point.

Draws are inverse-CDF normals from a counter-based generator (Philox).
Component sizes are exact (largest-remainder rounding of n * pi), and
draws below 0.01 GBP are redrawn.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .ingest import DEFAULT_COLUMNS

ARCHETYPES = ("unimodal", "tiered-multimodal", "separated-bimodal", "heavy-tail", "heaped")
MIN_AMOUNT = 0.01
PENNY = Decimal("0.01")


@dataclass(frozen=True)
class Component:
    weight: float
    mean: float
    sd: float


@dataclass(frozen=True)
class SyntheticSpec:
    name: str
    archetype: str
    components: tuple[Component, ...]
    n_payments: int
    seed: int
    directorate: str = "Synthetic Directorate"
    subjective_detail: str = "Services"
    # raw-name variants that should harmonise to ``name``: (variant, share)
    variants: tuple[tuple[str, float], ...] = ()
    # extra non-positive rows (credit notes) appended for this supplier
    n_credits: int = 0
    # rows booked to a secondary directorate
    n_other_directorate: int = 0
    other_directorate: str = "Finance"
    # name of the separated spec this one is a compressed image of
    paired_with: str = ""

    def __post_init__(self):
        if self.archetype not in ARCHETYPES:
            raise ValueError(f"unknown archetype {self.archetype!r}")
        w = sum(c.weight for c in self.components)
        if abs(w - 1.0) > 1e-9:
            raise ValueError(f"{self.name}: component weights sum to {w}")


def component_counts(weights, n: int) -> np.ndarray:
    """Exact integer split of ``n`` by weights (largest remainder)."""
    w = np.asarray(weights, dtype=np.float64)
    raw = w * n
    base = np.floor(raw).astype(int)
    short = n - base.sum()
    order = np.argsort(-(raw - base), kind="mergesort")
    base[order[:short]] += 1
    return base


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def sample_amounts(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return (amounts, component label) for one supplier, shuffled."""
    rng = _rng(spec.seed)
    counts = component_counts([c.weight for c in spec.components], spec.n_payments)
    amounts, labels = [], []
    for j, (comp, m) in enumerate(zip(spec.components, counts)):
        x = comp.mean + comp.sd * ndtri(rng.random(m))
        bad = x < MIN_AMOUNT
        while bad.any():
            x[bad] = comp.mean + comp.sd * ndtri(rng.random(int(bad.sum())))
            bad = x < MIN_AMOUNT
        amounts.append(x)
        labels.append(np.full(m, j))
    amounts = np.concatenate(amounts)
    labels = np.concatenate(labels)
    order = rng.permutation(amounts.size)
    return amounts[order], labels[order]


def _gbp(x: float) -> str:
    return str(Decimal(repr(float(x))).quantize(PENNY, rounding=ROUND_HALF_UP))


def cohort_rows(specs: list[SyntheticSpec]) -> list[dict]:
    """Payment rows in the ingest CSV layout, in spec order."""
    rows = []
    tx = 0
    for spec in specs:
        amounts, _ = sample_amounts(spec)
        names = [spec.name] * amounts.size
        if spec.variants:
            pos = 0
            for variant, share in spec.variants:
                m = int(round(share * amounts.size))
                # the canonical name must stay modal
                names[pos : pos + m] = [variant] * m
                pos += m
        directorates = [spec.directorate] * amounts.size
        for i in range(min(spec.n_other_directorate, amounts.size)):
            directorates[amounts.size - 1 - i] = spec.other_directorate
        credit_rng = _rng(spec.seed + 7_919)
        credits = -np.round(credit_rng.uniform(5, 500, spec.n_credits), 2)
        for amount, name, directorate in zip(
            list(amounts) + list(credits),
            names + [spec.name] * spec.n_credits,
            directorates + [spec.directorate] * spec.n_credits,
        ):
            tx += 1
            rows.append(
                {
                    "organisation": "Synthetic Council",
                    "directorate": directorate,
                    "department": directorate,
                    "service_plan": "Synthetic",
                    "creditor_name": name,
                    "payment_date": "2025-06-01",
                    "transaction_no": f"T{tx:07d}",
                    "net_amount": _gbp(amount),
                    "subjective_group": "Supplies and Services",
                    "subjective_subgroup": "Services",
                    "subjective_detail": spec.subjective_detail,
                }
            )
    return rows


def ground_truth(specs: list[SyntheticSpec]) -> dict:
    return {
        "suppliers": [
            {
                "name": s.name,
                "archetype": s.archetype,
                "n_payments": s.n_payments,
                "seed": s.seed,
                "directorate": s.directorate,
                "components": [asdict(c) for c in s.components],
                "variants": [v for v, _ in s.variants],
                "paired_with": s.paired_with,
            }
            for s in specs
        ]
    }


def generate_cohort(specs: list[SyntheticSpec], out_csv, truth_json=None, columns=DEFAULT_COLUMNS) -> None:
    """Write the cohort CSV (ingest schema) and its ground-truth JSON."""
    rows = cohort_rows(specs)
    with Path(out_csv).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([columns[f] for f in DEFAULT_COLUMNS])
        for r in rows:
            w.writerow([r[f] for f in DEFAULT_COLUMNS])
    if truth_json is not None:
        Path(truth_json).write_text(json.dumps(ground_truth(specs), indent=2, sort_keys=True) + "\n")


class OrderingError(AssertionError):
    """A ground-truth ordering failed; ``report`` holds the decompositions."""

    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


def _decomposition(c) -> dict:
    from .phi import log_contributions

    contrib, defined = log_contributions(c)
    return {"phi": c.phi, "components": c.values(), "contributions": contrib, "defined": defined}


def oracle_rank_check(truth: dict, components: dict, raise_on_failure: bool = True) -> dict:
    """Check scored suppliers against the cohort's constructed orderings.

    ``components`` maps supplier name to its PhiComponents. Checks:
    every separated spec outranks its compressed tiered image; heaped
    suppliers are tail-dominated; unimodal suppliers fit one component.
    """
    checks = []
    for s in truth["suppliers"]:
        name = s["name"]
        if name not in components:
            continue
        c = components[name]
        if s.get("paired_with") and s["paired_with"] in components:
            sep = components[s["paired_with"]]
            checks.append(
                {
                    "check": "separated_outranks_tiered",
                    "suppliers": [s["paired_with"], name],
                    "ok": sep.phi > c.phi,
                    "decomposition": {s["paired_with"]: _decomposition(sep), name: _decomposition(c)},
                }
            )
        if s["archetype"] == "heaped":
            contrib = _decomposition(c)["contributions"]
            checks.append(
                {
                    "check": "heaped_tail_dominant",
                    "suppliers": [name],
                    "ok": max(contrib, key=contrib.get) == "T",
                    "decomposition": {name: _decomposition(c)},
                }
            )
        if s["archetype"] == "unimodal" and s["n_payments"] >= 50:
            checks.append(
                {
                    "check": "unimodal_single_component",
                    "suppliers": [name],
                    "ok": c.M == 1,
                    "decomposition": {name: _decomposition(c)},
                }
            )
    failed = [c for c in checks if not c["ok"]]
    report = {"n_checks": len(checks), "n_failed": len(failed), "checks": checks}
    if failed and raise_on_failure:
        names = "; ".join(f"{c['check']}: {', '.join(c['suppliers'])}" for c in failed)
        raise OrderingError(f"{len(failed)} oracle ordering check(s) failed: {names}", report)
    return report


# archetype factories; GBP parameters


def unimodal(name, seed, n=200, mean=487.0, sd=110.0, **kw) -> SyntheticSpec:
    return SyntheticSpec(name, "unimodal", (Component(1.0, mean, sd),), n, seed, **kw)


def separated_bimodal(
    name,
    seed,
    n=400,
    means=(1210.0, 8967.0),
    weights=(0.52, 0.48),
    sds=(300.0, 3000.0),
    outliers=(0.04, 22000.0, 7000.0),
    **kw,
):
    """Two separated regimes plus an optional sparse high-value group.

    ``outliers`` is (weight, mean, sd) or None; its weight is taken
    proportionally from the two regimes and sits below the prune threshold.
    """
    comps = [Component(w, m, s) for w, m, s in zip(weights, means, sds)]
    if outliers is not None:
        w0 = outliers[0]
        comps = [replace(c, weight=c.weight * (1.0 - w0)) for c in comps] + [Component(*outliers)]
    return SyntheticSpec(name, "separated-bimodal", tuple(comps), n, seed, **kw)


def tiered_multimodal(
    name,
    seed,
    n=400,
    means=(2187.0, 3105.0, 3208.0, 3720.0),
    weights=(0.23, 0.26, 0.25, 0.26),
    sds=(6.0, 6.0, 6.0, 6.0),
    **kw,
):
    comps = tuple(Component(w, m, s) for w, m, s in zip(weights, means, sds))
    return SyntheticSpec(name, "tiered-multimodal", comps, n, seed, **kw)


def heavy_tail(name, seed, n=300, **kw):
    comps = (Component(0.81, 3088.0, 900.0), Component(0.19, 154625.0, 60000.0))
    return SyntheticSpec(name, "heavy-tail", comps, n, seed, **kw)


def heaped(name, seed, n=200, heap=500.0, **kw):
    comps = (Component(0.10, 200.0, 40.0), Component(0.80, heap, 0.0), Component(0.10, 4000.0, 900.0))
    return SyntheticSpec(name, "heaped", comps, n, seed, **kw)


def compressed_copy(spec: SyntheticSpec, name: str, scale: float, shift: float) -> SyntheticSpec:
    """Affine image a -> shift + scale * a of ``spec`` drawn from the same seed.

    Quantile-based components are unchanged by the map, so the pair
    isolates the effect of regime separation on structural dispersion.
    """
    comps = tuple(Component(c.weight, shift + scale * c.mean, scale * c.sd) for c in spec.components)
    return replace(
        spec, name=name, archetype="tiered-multimodal", components=comps, variants=(), paired_with=spec.name
    )


_WORDS_A = (
    "ABBEY ACORN ALDER ASH BECK BIRCH BRAMBLE BRIDGE BROOK CASTLE CEDAR CLIFTON COPPER "
    "DALE DERWENT ELM FERN FOSS GRANGE HAZEL HEATH HOLLY IVY JUNIPER KESTREL LARCH LINDEN "
    "MAPLE MEADOW MINSTER NESS OAK OUSE PINE QUARRY RAVEN ROWAN SAXON SPRUCE THORN VALE "
    "WALNUT WHARF WILLOW WOLD YEW"
).split()
_WORDS_B = (
    "CARE CATERING CLEANING CONSULTING CONSTRUCTION ELECTRICAL ENERGY ENGINEERING FOODS "
    "FOSTERING GROUNDS HAULAGE HOMES INTERIORS JOINERY LEGAL LIGHTING MECHANICAL MEDICAL "
    "NURSERY PAVING PLUMBING PRINTING ROOFING SECURITY SIGNS STAFFING SURVEYING SYSTEMS "
    "TAXIS TRAINING TRANSPORT TREE WASTE"
).split()
_SUFFIX = ("LTD", "LIMITED", "SERVICES LTD", "GROUP", "PARTNERSHIP", "TRUST", "CIC")
DIRECTORATES = (
    "Adult Social Care and Integration",
    "Children and Education",
    "Finance",
    "Housing and Communities",
    "Place Directorate",
    "Transport Environment and Planning",
)


def supplier_names(count: int, seed: int) -> list[str]:
    """Distinct two-word-stem company names with a random legal suffix."""
    rng = _rng(seed)
    names, stems = [], set()
    while len(names) < count:
        i, j = rng.choice(len(_WORDS_A), size=2, replace=False)
        stem = (_WORDS_A[i], _WORDS_A[j], _WORDS_B[rng.integers(len(_WORDS_B))])
        if stem in stems:
            continue
        stems.add(stem)
        names.append(" ".join(stem) + " " + _SUFFIX[rng.integers(len(_SUFFIX))])
    return names


def default_cohort(n_suppliers: int = 119, seed: int = 2025, n_low_volume: int = 40) -> list[SyntheticSpec]:
    """A mixed cohort: named archetypes plus randomised background suppliers.

    ``n_suppliers`` suppliers have at least 50 payments; ``n_low_volume``
    extra suppliers fall below the volume filter.
    """
    rng = _rng(seed)
    seeds = np.random.SeedSequence(seed).generate_state(n_suppliers + n_low_volume + 8)
    names = supplier_names(n_suppliers + n_low_volume, int(seeds[-1]))
    d = list(DIRECTORATES)
    specs = [
        unimodal(names[0], int(seeds[0]), directorate=d[0], variants=((names[0].rsplit(" ", 1)[0], 0.1),)),
        separated_bimodal(names[1], int(seeds[1]), directorate=d[5], n_credits=4),
        tiered_multimodal(names[2], int(seeds[2]), directorate=d[0], subjective_detail="Residential Care"),
        tiered_multimodal(
            names[3], int(seeds[3]), n=300, means=(426.0, 911.0, 1966.0), weights=(0.34, 0.31, 0.35),
            sds=(35.0, 60.0, 120.0), directorate=d[0], subjective_detail="External Temporary Staff",
        ),
        heavy_tail(names[4], int(seeds[4]), directorate=d[5], n_other_directorate=20, other_directorate=d[2]),
        heaped(names[5], int(seeds[5]), directorate=d[2]),
    ]
    specs.append(compressed_copy(specs[1], names[6], scale=0.08, shift=900.0))
    for i in range(len(specs), n_suppliers + n_low_volume):
        low = i >= n_suppliers
        n = int(rng.integers(10, 45)) if low else int(rng.integers(50, 400))
        kind = int(rng.integers(4))
        directorate = d[int(rng.integers(len(d)))]
        base = float(np.exp(rng.uniform(np.log(60), np.log(3000))))
        if kind == 0 or n < 100:
            spec = unimodal(names[i], int(seeds[i]), n=n, mean=base, sd=base * rng.uniform(0.05, 0.4), directorate=directorate)
        elif kind == 1:
            gap = rng.uniform(1.5, 8.0)
            w = rng.uniform(0.2, 0.8)
            spec = separated_bimodal(
                names[i], int(seeds[i]), n=n, means=(base, base * gap), weights=(w, 1 - w),
                sds=(base * 0.1, base * gap * 0.12), outliers=None, directorate=directorate,
            )
        elif kind == 2:
            k = int(rng.integers(2, 5))
            means = tuple(base * (1 + 0.3 * j) for j in range(k))
            spec = tiered_multimodal(
                names[i], int(seeds[i]), n=n, means=means, weights=tuple([1.0 / k] * k),
                sds=tuple(m * 0.02 for m in means), directorate=directorate,
            )
        else:
            spec = heaped(names[i], int(seeds[i]), n=n, heap=round(base, -1), directorate=directorate)
        specs.append(replace(spec, n_credits=int(rng.integers(0, 3))))
    return specs

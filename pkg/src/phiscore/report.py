"""End-to-end pipeline and report bundle.

Stages run in order: ingest, harmonise, scale, score, tier, aggregate,
anchoring, write. Machine-readable outputs carry the config hash and no
timestamps, so identical inputs and settings give identical bytes
whatever the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import statistics
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

import numpy as np

from . import __version__, anchoring
from .config import RunConfig
from .gmm import MixtureModel, NumericalError
from .harmonise import CanonicalMap, build_canonical_map
from .ingest import (
    ConfigError,
    CorpusStats,
    IngestError,
    PaymentRecord,
    RawRow,
    Reject,
    corpus_stats,
    filter_positive,
    group_by_supplier,
    parse_csv,
    select_high_volume,
    write_rejects,
)
from .phi import COMPONENTS, TIERS, PhiScore, assign_tiers, log_contributions, score_sample, tier_counts
from .robust_stats import (
    DegenerateScaleError,
    GlobalScale,
    coefficient_of_variation,
    lorenz_points,
    quantile,
    spearman_rho,
    top_share,
)

logger = logging.getLogger(__name__)

LORENZ_SHARES = (0.01, 0.05, 0.10, 0.20)
MATRIX_LABELS = ("PHI",) + COMPONENTS


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``cause`` is the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class SupplierResult:
    score: PhiScore
    model: MixtureModel
    amounts: np.ndarray
    directorate: str
    canonical: str


@dataclass
class PipelineResult:
    config: RunConfig
    stats: CorpusStats
    rejects: list[Reject]
    canonical_map: CanonicalMap
    scale: GlobalScale
    suppliers: list[SupplierResult]
    spend_by_supplier: dict
    tables: dict = field(default_factory=dict)
    anchoring: anchoring.AnchoringResult | None = None

    @property
    def ranked(self) -> list[SupplierResult]:
        return self.suppliers

    def components_by_canonical(self) -> dict:
        return {s.canonical: s.score.components for s in self.suppliers}


# ---------------------------------------------------------------- stages


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except (ConfigError, StageError):
                raise
            except Exception as exc:  # noqa: BLE001
                raise StageError(name, exc) from exc

        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner

    return wrap


@_stage("ingest")
def ingest(cfg: RunConfig, paths) -> tuple[list[RawRow], list[Reject]]:
    if not paths:
        raise IngestError("no input paths given")
    rows, rejects = [], []
    for p in paths:
        r, rej = parse_csv(p, cfg.input.columns, cfg.input.delimiter, cfg.input.encoding)
        rows.extend(r)
        rejects.extend(rej)
    if not rows:
        raise IngestError("no parseable payment rows in input")
    return rows, rejects


@_stage("harmonise")
def harmonise(cfg: RunConfig, rows: list[RawRow]) -> CanonicalMap:
    counts = Counter(r.creditor_name for r in rows)
    h = cfg.harmonise
    cmap = build_canonical_map(counts, h.thresholds(), h.suffixes, h.salt)
    logger.info("harmonised %d raw names into %d suppliers", len(counts), cmap.n_canonical)
    return cmap


def _modal(values) -> str:
    c = Counter(values)
    return min(c, key=lambda v: (-c[v], v))


def _score_one(args):
    sid, amounts, scale, cfg = args
    try:
        comps, model, _ = score_sample(amounts, scale, cfg.gmm.em(), cfg.gmm.prune_threshold, cfg.scoring.eps)
    except NumericalError as exc:
        raise NumericalError(f"supplier {sid}: {exc}") from exc
    return PhiScore(supplier=sid, components=comps), model


@_stage("score")
def score_suppliers(cfg: RunConfig, groups: dict, scale: GlobalScale, workers: int = 1):
    ids = sorted(select_high_volume(groups, cfg.scoring.min_n))
    if not ids:
        raise IngestError(f"no supplier has at least {cfg.scoring.min_n} positive payments")
    amounts = {sid: np.array([float(r.amount) for r in groups[sid]]) for sid in ids}
    jobs = [(sid, amounts[sid], scale, cfg) for sid in ids]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_score_one, jobs))
    else:
        results = [_score_one(j) for j in jobs]
    out = []
    for sid, (score, model) in zip(ids, results):
        recs = groups[sid]
        out.append(
            SupplierResult(
                score=score,
                model=model,
                amounts=amounts[sid],
                directorate=_modal(r.directorate for r in recs),
                canonical=recs[0].supplier_raw,
            )
        )
    return out


def run_pipeline(cfg: RunConfig, paths=None, out_dir=None, workers: int | None = None, write: bool = True) -> PipelineResult:
    """Run every stage and, if ``write``, emit the bundle into ``out_dir``."""
    paths = list(paths if paths is not None else cfg.input.paths)
    workers = workers or cfg.output.workers
    raw, rejects = ingest(cfg, paths)
    clean, _ = filter_positive(raw)
    if not clean:
        raise StageError("ingest", IngestError("no positive-amount rows after cleaning"))
    cmap = harmonise(cfg, clean)
    records = [
        PaymentRecord(
            supplier_raw=cmap.canonical_of(r.creditor_name),
            supplier_id=cmap.pseudonym_of(r.creditor_name),
            amount=r.net_amount,
            directorate=r.directorate,
            subjective_detail=r.subjective_detail,
        )
        for r in clean
        if r.creditor_name in cmap
    ]
    groups = group_by_supplier(records)
    try:
        scale = GlobalScale.from_amounts(np.array([float(r.amount) for r in records]))
        if not scale.iqr > 0:
            raise DegenerateScaleError("global IQR is zero; robust standardisation undefined")
    except DegenerateScaleError as exc:
        raise StageError("scale", exc) from exc
    stats = corpus_stats(raw, clean, len(rejects))

    suppliers = score_suppliers(cfg, groups, scale, workers)
    scores = assign_tiers([s.score for s in suppliers], cfg.scoring.p_low, cfg.scoring.p_high)
    by_id = {s.score.supplier: s for s in suppliers}
    ranked = [by_id[s.supplier] for s in scores]

    analytic_amounts = np.concatenate([s.amounts for s in ranked])
    stats.extra.update(
        {
            "n_canonical_suppliers": cmap.n_canonical,
            "n_names_rejected": len(cmap.rejected),
            "n_analytic_suppliers": len(ranked),
            "n_analytic_records": int(analytic_amounts.size),
            "median_amount_analytic": _money(quantile(analytic_amounts, 0.5)),
            "global_median": scale.median,
            "global_iqr": scale.iqr,
            "min_n": cfg.scoring.min_n,
        }
    )
    spend = {}
    for sid, recs in groups.items():
        spend[sid] = sum((r.amount for r in recs), Decimal(0))
    result = PipelineResult(cfg, stats, rejects, cmap, scale, ranked, spend)
    result.tables = build_tables(result)

    if cfg.anchoring.enabled:
        try:
            result.anchoring = anchoring.analyse(centre_observations(result), cfg.anchoring.anchoring(), workers)
        except ValueError as exc:
            logger.warning("anchoring skipped: %s", exc)
    if write:
        write_bundle(result, Path(out_dir or cfg.output.directory))
    return result


def _money(x: float) -> str:
    return str(Decimal(repr(float(x))).quantize(Decimal("0.01")))


# ---------------------------------------------------------------- tables


def centre_observations(result: PipelineResult) -> list[anchoring.CentreObservation]:
    obs = []
    for s in result.suppliers:
        centres = result.scale.to_gbp(s.model.means)
        for mu, w in zip(centres.tolist(), s.model.weights.tolist()):
            obs.append(anchoring.CentreObservation(s.score.supplier, mu, s.score.tier, w, s.score.phi))
    return obs


def sectoral_aggregate(rows) -> list[dict]:
    """Tier counts per directorate from (directorate, tier) pairs, plus a total row."""
    table: dict[str, Counter] = {}
    for directorate, tier in rows:
        table.setdefault(directorate, Counter())[tier] += 1
    out = []
    for d in sorted(table):
        c = table[d]
        out.append({"directorate": d, **{t: c[t] for t in TIERS}, "total": sum(c.values())})
    total = {t: sum(r[t] for r in out) for t in TIERS}
    out.append({"directorate": "Total", **total, "total": sum(total.values())})
    return out


def cohort_contribution_stats(components) -> dict:
    """Mean and median of ln(X) and of the percentage contribution, per component."""
    components = list(components)
    out = {}
    contribs = [log_contributions(c)[0] for c in components]
    for k in COMPONENTS:
        logs = [math.log(c.values()[k]) for c in components]
        pct = [c[k] for c in contribs]
        out[k] = {
            "mean_log": statistics.fmean(logs),
            "median_log": statistics.median(logs),
            "mean_contribution_pct": statistics.fmean(pct),
            "median_contribution_pct": statistics.median(pct),
        }
    return out


def _rank_desc(values, ids) -> dict:
    order = sorted(range(len(ids)), key=lambda i: (-values[i], ids[i]))
    return {ids[i]: pos + 1 for pos, i in enumerate(order)}


def cv_comparison(scores, amounts_by_id: dict, top_k: int = 12) -> tuple[list[dict], dict]:
    """Top-k suppliers by PHI with PHI rank and CV rank (1 = largest)."""
    ids = [s.supplier for s in scores]
    phi = [s.phi for s in scores]
    cv = [coefficient_of_variation(amounts_by_id[i]) for i in ids]
    phi_rank = _rank_desc(phi, ids)
    cv_rank = _rank_desc(cv, ids)
    rows = []
    for s, c in zip(scores, cv):
        if phi_rank[s.supplier] > top_k:
            continue
        contrib, _ = log_contributions(s.components)
        rows.append(
            {
                "supplier": s.supplier,
                "phi": s.phi,
                **{k: s.components.values()[k] for k in COMPONENTS},
                **{f"{k}_pct": contrib[k] for k in COMPONENTS},
                "cv": c,
                "cv_rank": cv_rank[s.supplier],
                "phi_rank": phi_rank[s.supplier],
            }
        )
    rows.sort(key=lambda r: r["phi_rank"])
    summary = {"n": len(ids)}
    if len(ids) >= 3:
        rho, p = spearman_rho(cv, phi)
        summary.update({"spearman_rho": rho, "p_value": p})
    return rows, summary


def spearman_matrix(components, use_contributions: bool = False) -> dict:
    """Pairwise Spearman correlations among PHI and the four components."""
    components = list(components)
    cols = {"PHI": [c.phi for c in components]}
    for k in COMPONENTS:
        if use_contributions:
            cols[k] = [log_contributions(c)[0][k] for c in components]
        else:
            cols[k] = [c.values()[k] for c in components]
    rho, pval = {}, {}
    for a in MATRIX_LABELS:
        rho[a], pval[a] = {}, {}
        for b in MATRIX_LABELS:
            try:
                r, p = spearman_rho(cols[a], cols[b])
            except ValueError:
                r, p = None, None
            rho[a][b], pval[a][b] = r, p
    return {"labels": list(MATRIX_LABELS), "rho": rho, "p_value": pval}


def build_tables(result: PipelineResult) -> dict:
    scores = [s.score for s in result.suppliers]
    comps = [s.components for s in scores]
    sc = result.config.scoring
    cv_rows, cv_summary = cv_comparison(scores, {s.score.supplier: s.amounts for s in result.suppliers}, sc.top_k)
    lorenz = lorenz_points([float(v) for _, v in sorted(result.spend_by_supplier.items())])
    high, moderate, low = tier_counts(len(scores), sc.p_low, sc.p_high)
    return {
        "tier_counts": {"High": high, "Moderate": moderate, "Low": low},
        "sectoral": sectoral_aggregate((s.directorate, s.score.tier) for s in result.suppliers),
        "contribution_stats": cohort_contribution_stats(comps),
        "spearman_values": spearman_matrix(comps),
        "spearman_contributions": spearman_matrix(comps, use_contributions=True),
        "cv_comparison": cv_rows,
        "cv_summary": cv_summary,
        "lorenz": lorenz,
        "lorenz_top_shares": {f"top_{int(round(p * 100))}pct": top_share(lorenz, p) for p in LORENZ_SHARES},
    }


# ---------------------------------------------------------------- writers


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_default) + "\n"


def _default(o):
    if isinstance(o, Decimal):
        return str(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _write_csv(path: Path, rows: list[dict], fieldnames=None) -> None:
    fieldnames = fieldnames or (list(rows[0]) if rows else [])
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def score_rows(result: PipelineResult) -> list[dict]:
    rows = []
    for rank, s in enumerate(result.suppliers, start=1):
        sc = s.score
        contrib, defined = log_contributions(sc.components)
        rows.append(
            {
                "rank": rank,
                "supplier": sc.supplier,
                "phi": sc.phi,
                **{k: sc.components.values()[k] for k in COMPONENTS},
                **{f"{k}_pct": contrib[k] for k in COMPONENTS},
                "contributions_defined": defined,
                "percentile": sc.percentile,
                "tier": sc.tier,
                "n_payments": int(s.amounts.size),
                "total_spend": str(result.spend_by_supplier[sc.supplier]),
                "directorate": s.directorate,
            }
        )
    return rows


def fit_rows(result: PipelineResult) -> list[dict]:
    rows = []
    for s in result.suppliers:
        d = s.model.to_dict()
        d["supplier"] = s.score.supplier
        d["means_gbp"] = result.scale.to_gbp(s.model.means).tolist()
        d["sds_gbp"] = (s.model.sds * result.scale.iqr).tolist()
        rows.append(d)
    return rows


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_anchoring(res: anchoring.AnchoringResult, cfg: anchoring.AnchoringConfig, out: Path, config_hash: str) -> None:
    doc = res.to_dict(cfg)
    doc["config_hash"] = config_hash
    (out / "anchoring.json").write_text(_json(doc))
    _write_csv(
        out / "anchoring_centres.csv",
        [
            {
                "supplier": o.supplier,
                "centre_gbp": o.centre_gbp,
                "weight": o.weight,
                "tier": o.tier,
                "phi": o.phi,
                "nearest_peak": float(n),
                "distance_pct": float(p),
            }
            for o, n, p in zip(res.observations, res.nearest, res.pct_distance)
        ],
        ["supplier", "centre_gbp", "weight", "tier", "phi", "nearest_peak", "distance_pct"],
    )
    _write_csv(out / "plot_peak_proportions.csv", res.table["by_peak"], ["peak", "tier", "window_pct", "count", "proportion"])
    null_rows = []
    for r in res.permutation:
        values, freq = np.unique(r.null_counts, return_counts=True)
        null_rows += [
            {"window_pct": r.window, "count": int(v), "frequency": int(f), "observed": r.observed}
            for v, f in zip(values, freq)
        ]
    _write_csv(out / "plot_permutation_null.csv", null_rows, ["window_pct", "count", "frequency", "observed"])
    _write_csv(out / "plot_anchoring_ecdf.csv", anchoring.ecdf_rows(res.pct_distance, [o.tier for o in res.observations]), ["tier", "distance_pct", "ecdf"])
    if res.density is not None:
        edges = anchoring.bin_edges(cfg)
        centres = (edges[:-1] + edges[1:]) / 2.0
        _write_csv(
            out / "plot_peak_density.csv",
            [{"bin_centre": float(c), "density": float(d)} for c, d in zip(centres, res.density)],
            ["bin_centre", "density"],
        )


def write_bundle(result: PipelineResult, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    h = cfg.hash()
    t = result.tables

    (out / "corpus_stats.json").write_text(_json({"config_hash": h, **result.stats.to_dict()}))
    write_rejects(result.rejects, out / "rejects.csv")
    result.canonical_map.write_audit(out / "harmonisation_audit.csv")

    rows = score_rows(result)
    _write_csv(out / "scores.csv", rows)
    (out / "scores.json").write_text(_json({"config_hash": h, "suppliers": rows}))
    with (out / "gmm_fits.jsonl").open("w", encoding="utf-8") as fh:
        for r in fit_rows(result):
            fh.write(json.dumps(r, sort_keys=True, allow_nan=False) + "\n")

    decomposition = {
        "config_hash": h,
        "contribution_stats": t["contribution_stats"],
        "spearman_values": t["spearman_values"],
        "spearman_contributions": t["spearman_contributions"],
        "tier_counts": t["tier_counts"],
    }
    (out / "decomposition.json").write_text(_json(decomposition))
    _write_csv(out / "sectoral.csv", t["sectoral"], ["directorate", *TIERS, "total"])
    _write_csv(out / "cv_comparison.csv", t["cv_comparison"])
    (out / "cv_summary.json").write_text(_json({"config_hash": h, **t["cv_summary"]}))
    _write_csv(out / "lorenz.csv", [{"supplier_share": x, "spend_share": y} for x, y in t["lorenz"]], ["supplier_share", "spend_share"])
    (out / "lorenz_summary.json").write_text(_json({"config_hash": h, **t["lorenz_top_shares"]}))

    # plot-data series
    _write_csv(
        out / "plot_phi_distribution.csv",
        [{"supplier": r["supplier"], "phi": r["phi"], "log_phi": math.log(r["phi"]), "percentile": r["percentile"], "tier": r["tier"]} for r in rows],
        ["supplier", "phi", "log_phi", "percentile", "tier"],
    )
    _write_csv(
        out / "plot_contributions_top.csv",
        [{"supplier": r["supplier"], **{f"{k}_pct": r[f"{k}_pct"] for k in COMPONENTS}} for r in rows[: cfg.scoring.top_k]],
        ["supplier", *[f"{k}_pct" for k in COMPONENTS]],
    )
    _write_csv(
        out / "plot_component_logs.csv",
        [{"supplier": r["supplier"], **{f"ln_{k}": math.log(r[k]) for k in COMPONENTS}} for r in rows],
        ["supplier", *[f"ln_{k}" for k in COMPONENTS]],
    )

    if result.anchoring is not None:
        write_anchoring(result.anchoring, cfg.anchoring.anchoring(), out, h)

    # output location and worker count do not affect results; keep them out
    settings = cfg.to_dict()
    settings.pop("output")
    (out / "config.json").write_text(_json({"config_hash": h, "version": __version__, "config": settings}))
    (out / "report.md").write_text(render_markdown(result))
    files = sorted(p for p in out.iterdir() if p.is_file() and p.name != "manifest.json")
    (out / "manifest.json").write_text(_json({"config_hash": h, "files": {p.name: _sha(p) for p in files}}))
    return files


# ---------------------------------------------------------------- human report


def _fmt(x, nd=3) -> str:
    return "n/a" if x is None else f"{x:.{nd}f}"


def _table(headers, rows) -> list[str]:
    out = ["| " + " | ".join(headers) + " |", "|" + "---|" * len(headers)]
    out += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return out


def render_markdown(result: PipelineResult) -> str:
    cfg = result.config
    t = result.tables
    st = result.stats.to_dict()
    lines = [
        "# Payment heterogeneity report",
        "",
        f"Config hash `{cfg.hash()}`, phiscore {__version__}.",
        "",
        "## Settings",
        "",
    ]
    for sec, values in cfg.to_dict().items():
        if sec in ("input", "output"):
            continue
        flat = ", ".join(f"{k}={v}" for k, v in values.items() if not isinstance(v, dict))
        lines.append(f"- **{sec}**: {flat}")
    lines += [
        f"- **input**: min_n={cfg.scoring.min_n}, columns mapped={len(cfg.input.columns)}",
        "",
        "## Corpus (corpus_stats.json)",
        "",
        f"- rows read: {st['n_rows_raw']}, rejected: {st['n_rows_rejected']}, non-positive dropped: {st['n_rows_dropped_nonpositive']}",
        f"- clean rows: {st['n_rows_clean']}, total spend: {st['total_spend']}, median payment: {st['median_amount']}",
        f"- raw names: {st['n_raw_names']}, canonical suppliers: {st['n_canonical_suppliers']}",
        f"- analytic suppliers: {st['n_analytic_suppliers']} with {st['n_analytic_records']} records",
        f"- global median {_fmt(st['global_median'], 2)}, global IQR {_fmt(st['global_iqr'], 2)}",
        "",
        "## Tiers (decomposition.json)",
        "",
        *_table(["High", "Moderate", "Low"], [[t["tier_counts"][k] for k in ("High", "Moderate", "Low")]]),
        "",
        f"## Top {cfg.scoring.top_k} by PHI (cv_comparison.csv)",
        "",
    ]
    lines += _table(
        ["rank", "supplier", "PHI", "M", "A", "T", "D", "CV rank"],
        [
            [r["phi_rank"], r["supplier"], _fmt(r["phi"]), int(r["M"]), _fmt(r["A"], 2), _fmt(r["T"], 2), _fmt(r["D"], 2), r["cv_rank"]]
            for r in t["cv_comparison"]
        ],
    )
    cs = t["cv_summary"]
    if "spearman_rho" in cs:
        lines += ["", f"Spearman(CV, PHI) = {_fmt(cs['spearman_rho'])} (p = {cs['p_value']:.3g}, n = {cs['n']})."]
    lines += ["", "## Component contributions (decomposition.json)", ""]
    lines += _table(
        ["component", "mean ln", "median ln", "mean %", "median %"],
        [
            [k, _fmt(v["mean_log"]), _fmt(v["median_log"]), _fmt(v["mean_contribution_pct"], 1), _fmt(v["median_contribution_pct"], 1)]
            for k, v in t["contribution_stats"].items()
        ],
    )
    rho = t["spearman_values"]["rho"]["PHI"]
    lines += ["", "Spearman with PHI: " + ", ".join(f"{k} {_fmt(rho[k], 2)}" for k in COMPONENTS) + "."]
    lines += ["", "## Tiers by directorate (sectoral.csv)", ""]
    lines += _table(["directorate", *TIERS, "total"], [[r["directorate"], *[r[k] for k in TIERS], r["total"]] for r in t["sectoral"]])
    lines += ["", "## Spend concentration (lorenz_summary.json)", ""]
    lines += [f"- {k.replace('_', ' ')} of suppliers: {_fmt(v * 100, 1)}% of spend" for k, v in t["lorenz_top_shares"].items()]
    a = result.anchoring
    lines += ["", "## Threshold anchoring (anchoring.json)", ""]
    if a is None:
        lines.append("Not run.")
    else:
        lines.append("Peaks (GBP): " + ", ".join(f"{p:,.0f}" for p in a.peaks) + ".")
        lines.append("")
        lines += _table(
            ["window", "observed", "perm mean", "p"],
            [[f"±{r.window:g}%", r.observed, _fmt(r.perm_mean, 2), f"{r.p_value:.4g}"] for r in a.permutation],
        )
        if a.ks["statistic"] is not None:
            lines += [
                "",
                f"K-S High vs Low distance: D = {_fmt(a.ks['statistic'])}, p = {a.ks['p_value']:.4g} "
                f"(n = {a.ks['n_high']} / {a.ks['n_low']}).",
            ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- anchoring from prior output


def load_centres(out_dir) -> list[anchoring.CentreObservation]:
    """Centre observations rebuilt from a previous ``score`` bundle."""
    out = Path(out_dir)
    scores_path, fits_path = out / "scores.json", out / "gmm_fits.jsonl"
    if not scores_path.exists() or not fits_path.exists():
        raise IngestError(f"{out}: no prior score output (scores.json, gmm_fits.jsonl)")
    scores = {r["supplier"]: r for r in json.loads(scores_path.read_text())["suppliers"]}
    obs = []
    for line in fits_path.read_text().splitlines():
        fit = json.loads(line)
        s = scores[fit["supplier"]]
        for mu, w in zip(fit["means_gbp"], fit["weights"]):
            obs.append(anchoring.CentreObservation(fit["supplier"], mu, s["tier"], w, s["phi"]))
    return obs


def run_anchoring(cfg: RunConfig, out_dir, workers: int | None = None) -> anchoring.AnchoringResult:
    acfg = cfg.anchoring.anchoring()
    res = anchoring.analyse(load_centres(out_dir), acfg, workers or cfg.output.workers)
    write_anchoring(res, acfg, Path(out_dir), cfg.hash())
    return res

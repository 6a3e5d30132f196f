"""Optional static figures rendered from the plot-data CSVs of a bundle."""

from __future__ import annotations

import csv
from pathlib import Path


def _read(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def render_all(out_dir) -> list[Path]:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise RuntimeError("plots need matplotlib: pip install 'artifact[plots]'") from exc

    out = Path(out_dir)
    made = []

    rows = _read(out / "plot_phi_distribution.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    for tier in ("Low", "Moderate", "High"):
        ax.hist([float(r["log_phi"]) for r in rows if r["tier"] == tier], bins=20, alpha=0.6, label=tier)
    ax.set_xlabel("ln PHI")
    ax.set_ylabel("suppliers")
    ax.legend()
    made.append(out / "phi_distribution.png")
    fig.savefig(made[-1], dpi=120, bbox_inches="tight")
    plt.close(fig)

    rows = _read(out / "plot_contributions_top.csv")
    fig, ax = plt.subplots(figsize=(7, 4))
    left = [0.0] * len(rows)
    for k in ("M", "A", "T", "D"):
        vals = [float(r[f"{k}_pct"]) for r in rows]
        ax.barh([r["supplier"] for r in rows], vals, left=left, label=k)
        left = [a + b for a, b in zip(left, vals)]
    ax.invert_yaxis()
    ax.set_xlabel("contribution to ln PHI (%)")
    ax.legend(ncol=4)
    made.append(out / "contributions_top.png")
    fig.savefig(made[-1], dpi=120, bbox_inches="tight")
    plt.close(fig)

    if (out / "plot_peak_density.csv").exists():
        rows = _read(out / "plot_peak_density.csv")
        fig, ax = plt.subplots(figsize=(7, 3))
        ax.plot([float(r["bin_centre"]) for r in rows], [float(r["density"]) for r in rows])
        ax.set_xlabel("centre (GBP)")
        ax.set_ylabel("smoothed count")
        made.append(out / "peak_density.png")
        fig.savefig(made[-1], dpi=120, bbox_inches="tight")
        plt.close(fig)

    if (out / "plot_anchoring_ecdf.csv").exists():
        rows = _read(out / "plot_anchoring_ecdf.csv")
        fig, ax = plt.subplots(figsize=(5, 4))
        for tier in ("High", "Low"):
            pts = [(float(r["distance_pct"]), float(r["ecdf"])) for r in rows if r["tier"] == tier]
            if pts:
                ax.step([p[0] for p in pts], [p[1] for p in pts], where="post", label=tier)
        ax.set_xscale("symlog")
        ax.set_xlabel("distance to nearest peak (%)")
        ax.set_ylabel("ECDF")
        ax.legend()
        made.append(out / "anchoring_ecdf.png")
        fig.savefig(made[-1], dpi=120, bbox_inches="tight")
        plt.close(fig)
    return made

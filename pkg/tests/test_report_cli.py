import csv
import json
import math

import numpy as np
import pytest

from phiscore import cli
from phiscore.config import load_config
from phiscore.phi import PhiComponents
from phiscore.report import (
    StageError,
    cohort_contribution_stats,
    cv_comparison,
    run_pipeline,
    sectoral_aggregate,
    spearman_matrix,
)
from phiscore.phi import PhiScore
from phiscore import synthbench

BUNDLE = [
    "corpus_stats.json", "rejects.csv", "harmonisation_audit.csv", "scores.csv", "scores.json",
    "gmm_fits.jsonl", "decomposition.json", "sectoral.csv", "cv_comparison.csv", "cv_summary.json",
    "lorenz.csv", "lorenz_summary.json", "anchoring.json", "anchoring_centres.csv", "report.md",
    "config.json", "manifest.json", "plot_phi_distribution.csv", "plot_contributions_top.csv",
    "plot_component_logs.csv", "plot_peak_density.csv", "plot_anchoring_ecdf.csv",
    "plot_peak_proportions.csv", "plot_permutation_null.csv",
]


def read_csv(p):
    with open(p, newline="") as fh:
        return list(csv.DictReader(fh))


class TestTables:
    def test_sectoral_single_directorate(self):
        rows = sectoral_aggregate([("Finance", "High"), ("Finance", "Low"), ("Finance", "Low")])
        assert rows[0] == {"directorate": "Finance", "Low": 2, "Moderate": 0, "High": 1, "total": 3}
        assert rows[-1]["total"] == 3

    def test_contribution_stats_unimodal(self):
        comps = [PhiComponents(1, 1.1, 1.5, 1.2), PhiComponents(1, 1.2, 2.5, 1.3)]
        st = cohort_contribution_stats(comps)
        assert st["M"]["mean_log"] == 0.0
        assert st["T"]["mean_log"] == pytest.approx((math.log(1.5) + math.log(2.5)) / 2)

    def test_cv_rank_columns_equal_when_orders_coincide(self):
        base = np.linspace(-1.0, 1.0, 200)
        scores, amounts = [], {}
        for i in range(15):
            sid = f"S-{i:02d}"
            amounts[sid] = 100.0 + (1 + i) * 5.0 * base
            scores.append(PhiScore(sid, PhiComponents(1, 1.0, 1.0 + i, 1.0)))
        rows, summary = cv_comparison(scores, amounts, top_k=5)
        assert [r["cv_rank"] for r in rows] == [r["phi_rank"] for r in rows] == [1, 2, 3, 4, 5]
        assert summary["spearman_rho"] == pytest.approx(1.0)

    def test_spearman_matrix(self):
        comps = [PhiComponents(1 + i % 2, 1 + i / 20, 1 + i / 5, 1 + (i * 7 % 5) / 5) for i in range(12)]
        m = spearman_matrix(comps)
        assert m["rho"]["PHI"]["PHI"] == pytest.approx(1.0)
        assert m["rho"]["A"]["T"] == pytest.approx(1.0)
        assert m["rho"]["M"]["D"] == m["rho"]["D"]["M"]


class TestPipeline:
    def test_bundle_files(self, pipeline_result):
        res, out = pipeline_result
        for name in BUNDLE:
            assert (out / name).exists(), name

    def test_counts_and_invariants(self, pipeline_result):
        res, out = pipeline_result
        st = json.loads((out / "corpus_stats.json").read_text())
        assert st["n_analytic_suppliers"] == 119
        assert st["n_rows_clean"] == st["n_rows_raw"] - st["n_rows_dropped_nonpositive"]
        scores = read_csv(out / "scores.csv")
        assert sum(int(r["n_payments"]) for r in scores) == st["n_analytic_records"]
        assert [r["tier"] for r in scores].count("High") == 12
        sect = read_csv(out / "sectoral.csv")
        assert int(sect[-1]["total"]) == 119
        for r in sect:
            assert int(r["Low"]) + int(r["Moderate"]) + int(r["High"]) == int(r["total"])
        phis = [float(r["phi"]) for r in scores]
        assert phis == sorted(phis, reverse=True)
        assert all(r["supplier"].startswith("S-") for r in scores)

    def test_fits_have_both_units(self, pipeline_result):
        res, out = pipeline_result
        lines = (out / "gmm_fits.jsonl").read_text().splitlines()
        fit = json.loads(lines[0])
        assert {"bic_by_k", "means", "means_gbp", "sds_gbp", "weights", "supplier"} <= set(fit)
        scale = res.scale
        assert fit["means_gbp"] == pytest.approx([m * scale.iqr + scale.median for m in fit["means"]])

    def test_oracle_checks_on_pipeline(self, pipeline_result, cohort_csv):
        res, _ = pipeline_result
        truth = json.loads(cohort_csv[1].read_text())
        report = synthbench.oracle_rank_check(truth, res.components_by_canonical())
        assert report["n_failed"] == 0 and report["n_checks"] > 3

    def test_variants_harmonised(self, pipeline_result, cohort_csv):
        res, _ = pipeline_result
        truth = json.loads(cohort_csv[1].read_text())
        cmap = res.canonical_map
        for s in truth["suppliers"]:
            for v in s["variants"]:
                assert cmap.canonical_of(v) == s["name"]
        assert cmap.n_canonical == len(truth["suppliers"])

    def test_report_traceable(self, pipeline_result):
        res, out = pipeline_result
        md = (out / "report.md").read_text()
        assert res.config.hash() in md
        top = read_csv(out / "cv_comparison.csv")[0]
        assert f"{float(top['phi']):.3f}" in md
        for key in ("cosine=0.76", "token_set=77", "prominence_frac=0.04", "n_perm=1000", "tol=0.001"):
            assert key in md

    def test_manifest(self, pipeline_result):
        import hashlib

        _, out = pipeline_result
        man = json.loads((out / "manifest.json").read_text())
        for name, digest in man["files"].items():
            assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest

    def test_empty_input(self, tmp_path, fast_config):
        p = tmp_path / "e.csv"
        p.write_text("")
        with pytest.raises(StageError) as err:
            run_pipeline(fast_config, [p], tmp_path / "o")
        assert err.value.stage == "ingest"


class TestCli:
    def test_synth_score_anchoring(self, tmp_path, capsys):
        csv_path = tmp_path / "c.csv"
        assert cli.main(["synth", str(csv_path), "--suppliers", "30", "--low-volume", "5"]) == 0
        assert (tmp_path / "c.truth.json").exists()
        out = tmp_path / "out"
        assert cli.main(["score", str(csv_path), "-o", str(out), "--set", "anchoring.n_perm=200"]) == 0
        before = (out / "anchoring.json").read_bytes()
        assert cli.main(["anchoring", "-o", str(out), "--set", "anchoring.n_perm=200"]) == 0
        assert (out / "anchoring.json").read_bytes() == before
        assert "scored 30 suppliers" in capsys.readouterr().out

    def test_harmonise_only(self, tmp_path, cohort_csv):
        assert cli.main(["harmonise", str(cohort_csv[0]), "-o", str(tmp_path)]) == 0
        assert (tmp_path / "harmonisation_audit.csv").exists()
        assert not (tmp_path / "scores.csv").exists()

    def test_validate_config(self, tmp_path, capsys):
        assert cli.main(["validate-config", "--dump"]) == 0
        text = capsys.readouterr().out
        assert "[gmm]" in text and "config ok" in text
        cfg = tmp_path / "c.toml"
        cfg.write_text(text.rsplit("config ok", 1)[0])
        assert cli.main(["validate-config", "-c", str(cfg)]) == 0

    @pytest.mark.parametrize(
        "argv,code",
        [
            (["validate-config", "--set", "gmm.tol=-1"], 2),
            (["score", "/nonexistent/file.csv"], 3),
            (["anchoring", "-o", "/nonexistent/dir"], 3),
        ],
    )
    def test_exit_codes(self, argv, code, tmp_path):
        assert cli.main(argv) == code

    def test_empty_input_exit(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        assert cli.main(["score", str(p), "-o", str(tmp_path / "o")]) == 3

    def test_degenerate_scale_exit(self, tmp_path):
        p = tmp_path / "flat.csv"
        header = "Creditor Name,Net Amount\n"
        p.write_text(header + "".join(f"A{i % 2},10.00\n" for i in range(120)))
        cfg = tmp_path / "c.toml"
        cfg.write_text('[input.columns]\ncreditor_name = "Creditor Name"\nnet_amount = "Net Amount"\n')
        assert cli.main(["score", str(p), "-c", str(cfg), "-o", str(tmp_path / "o")]) == 4

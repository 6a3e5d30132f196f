"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 ingest error,
4 numerical failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .config import RunConfig, dump_toml, load_config
from .gmm import NumericalError
from .ingest import ConfigError, IngestError
from .robust_stats import DegenerateScaleError

logger = logging.getLogger("phiscore")

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_INGEST, EXIT_NUMERICAL = 0, 1, 2, 3, 4


def _exit_code(exc: BaseException) -> int:
    from .report import StageError

    stage = None
    if isinstance(exc, StageError):
        stage, exc = exc.stage, exc.cause
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (IngestError, FileNotFoundError, UnicodeDecodeError)):
        return EXIT_INGEST
    if isinstance(exc, (NumericalError, DegenerateScaleError, FloatingPointError)):
        return EXIT_NUMERICAL
    return EXIT_INGEST if stage == "ingest" else EXIT_OTHER


def _config(args) -> RunConfig:
    overrides = list(args.set or [])
    if getattr(args, "workers", None):
        overrides.append(f"output.workers={args.workers}")
    if getattr(args, "out", None):
        overrides.append(f"output.directory={args.out!r}".replace("'", '"'))
    return load_config(args.config, overrides)


def cmd_score(args) -> int:
    from .report import run_pipeline

    cfg = _config(args)
    paths = args.inputs or list(cfg.input.paths)
    result = run_pipeline(cfg, paths)
    out = Path(cfg.output.directory)
    tc = result.tables["tier_counts"]
    print(
        f"scored {len(result.suppliers)} suppliers "
        f"(High {tc['High']}, Moderate {tc['Moderate']}, Low {tc['Low']}); bundle in {out}"
    )
    if args.plots or cfg.output.plots:
        from .plots import render_all

        render_all(out)
    return EXIT_OK


def cmd_harmonise(args) -> int:
    from .report import harmonise, ingest
    from .ingest import filter_positive

    cfg = _config(args)
    rows, rejects = ingest(cfg, args.inputs or list(cfg.input.paths))
    clean, _ = filter_positive(rows)
    cmap = harmonise(cfg, clean)
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    cmap.write_audit(out / "harmonisation_audit.csv")
    merged = sum(1 for c in cmap.clusters if len(c) > 1)
    names = Counter(r.creditor_name for r in clean)
    print(f"{len(names)} raw names -> {cmap.n_canonical} suppliers ({merged} merged clusters); audit in {out}")
    return EXIT_OK


def cmd_anchoring(args) -> int:
    from .report import run_anchoring

    cfg = _config(args)
    res = run_anchoring(cfg, cfg.output.directory)
    for r in res.permutation:
        print(f"window ±{r.window:g}%: observed {r.observed}, perm mean {r.perm_mean:.2f}, p = {r.p_value:.4g}")
    return EXIT_OK


def cmd_synth(args) -> int:
    from . import synthbench

    specs = synthbench.default_cohort(args.suppliers, args.seed, args.low_volume)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    truth = Path(args.truth) if args.truth else out.with_suffix(".truth.json")
    synthbench.generate_cohort(specs, out, truth)
    print(f"wrote {len(specs)} synthetic suppliers to {out} (ground truth {truth})")
    return EXIT_OK


def cmd_validate_config(args) -> int:
    cfg = _config(args)
    if args.dump:
        sys.stdout.write(dump_toml(cfg))
    print(f"config ok, hash {cfg.hash()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phiscore", description="Payment heterogeneity scoring for supplier payments.")
    p.add_argument("--version", action="version", version=f"phiscore {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, inputs=True, out=True):
        sp.add_argument("-c", "--config", help="TOML config file")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config key")
        if inputs:
            sp.add_argument("inputs", nargs="*", help="payment CSV files (default: input.paths)")
        if out:
            sp.add_argument("-o", "--out", help="output directory (output.directory)")

    sp = sub.add_parser("score", help="run the full pipeline")
    common(sp)
    sp.add_argument("-j", "--workers", type=int, help="worker threads (output.workers)")
    sp.add_argument("--plots", action="store_true", help="also render PNG figures (needs matplotlib)")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("harmonise", help="write the supplier-name harmonisation audit only")
    common(sp)
    sp.set_defaults(func=cmd_harmonise)

    sp = sub.add_parser("anchoring", help="rerun threshold anchoring on a previous score bundle")
    common(sp, inputs=False)
    sp.add_argument("-j", "--workers", type=int, help="worker threads (output.workers)")
    sp.set_defaults(func=cmd_anchoring)

    sp = sub.add_parser("synth", help="generate the synthetic benchmark cohort")
    sp.add_argument("output", help="CSV path to write")
    sp.add_argument("--truth", help="ground-truth JSON path (default: <output>.truth.json)")
    sp.add_argument("--suppliers", type=int, default=119, help="suppliers above the volume filter")
    sp.add_argument("--low-volume", type=int, default=40, help="extra suppliers below the volume filter")
    sp.add_argument("--seed", type=int, default=2025)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("validate-config", help="check a config file and print its hash")
    common(sp, inputs=False, out=False)
    sp.add_argument("--dump", action="store_true", help="print the resolved config as TOML")
    sp.set_defaults(func=cmd_validate_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001
        code = _exit_code(exc)
        print(f"phiscore: error: {exc}", file=sys.stderr)
        if args.verbose > 1:
            logger.exception("traceback")
        return code


if __name__ == "__main__":
    sys.exit(main())

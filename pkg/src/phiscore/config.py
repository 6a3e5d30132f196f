"""Run configuration: defaults, TOML loading, dotted-key overrides and hashing.

Every tunable is a named key in one of the sections below. A config file
only needs the keys it changes; ``--set section.key=value`` overrides are
parsed as TOML values, so ``--set gmm.tol=1e-4`` yields a float and
``--set anchoring.windows=[5,10]`` a list.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .anchoring import AnchoringConfig
from .gmm import EmConfig
from .harmonise import DEFAULT_SUFFIXES, MatchThresholds
from .ingest import DEFAULT_COLUMNS, ConfigError


@dataclass(frozen=True)
class InputConfig:
    paths: tuple = ()
    delimiter: str = ","
    encoding: str = "utf-8-sig"
    columns: dict = field(default_factory=lambda: dict(DEFAULT_COLUMNS))


@dataclass(frozen=True)
class HarmoniseConfig:
    cosine: float | None = 0.76
    token_set: float | None = 77
    jaccard: float | None = 0.36
    ensemble: float | None = 0.66
    suffixes: dict = field(default_factory=lambda: dict(DEFAULT_SUFFIXES))
    salt: str = "phiscore"

    def thresholds(self) -> MatchThresholds:
        return MatchThresholds(self.cosine, self.token_set, self.jaccard, self.ensemble)


@dataclass(frozen=True)
class GmmConfig:
    tol: float = 1e-3
    max_iter: int = 100
    seed: int = 0
    reg: float = 1e-6
    kmeans_max_iter: int = 300
    k_cap: int = 4
    obs_per_component: int = 25
    prune_threshold: float = 0.05

    def em(self) -> EmConfig:
        return EmConfig(
            tol=self.tol,
            max_iter=self.max_iter,
            seed=self.seed,
            reg=self.reg,
            kmeans_max_iter=self.kmeans_max_iter,
            k_cap=self.k_cap,
            obs_per_component=self.obs_per_component,
        )


@dataclass(frozen=True)
class ScoringConfig:
    min_n: int = 50
    eps: float = 1e-6
    p_low: float = 70.0
    p_high: float = 90.0
    top_k: int = 12


@dataclass(frozen=True)
class AnchoringSection:
    enabled: bool = True
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
    peaks: tuple = ()

    def anchoring(self) -> AnchoringConfig:
        return AnchoringConfig(
            bin_width=self.bin_width,
            range_min=self.range_min,
            range_max=self.range_max,
            sigma_bins=self.sigma_bins,
            truncate=self.truncate,
            prominence_frac=self.prominence_frac,
            min_position=self.min_position,
            windows=tuple(float(w) for w in self.windows),
            n_perm=self.n_perm,
            seed=self.seed,
            plus_one_p=self.plus_one_p,
            peaks=tuple(float(p) for p in self.peaks) or None,
        )


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "phiscore_out"
    plots: bool = False
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    input: InputConfig = field(default_factory=InputConfig)
    harmonise: HarmoniseConfig = field(default_factory=HarmoniseConfig)
    gmm: GmmConfig = field(default_factory=GmmConfig)
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    anchoring: AnchoringSection = field(default_factory=AnchoringSection)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def hash(self) -> str:
        """Short digest of the analysis settings (input paths and output excluded)."""
        d = self.to_dict()
        d.pop("output")
        d["input"].pop("paths")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def validate(self) -> "RunConfig":
        problems = []
        h, g, s, a = self.harmonise, self.gmm, self.scoring, self.anchoring
        for name in ("cosine", "jaccard", "ensemble"):
            v = getattr(h, name)
            if v is not None and not 0.0 <= v <= 1.0:
                problems.append(f"harmonise.{name} must lie in [0, 1]")
        if h.token_set is not None and not 0 <= h.token_set <= 100:
            problems.append("harmonise.token_set must lie in [0, 100]")
        if g.tol <= 0 or g.max_iter < 1 or g.reg < 0 or g.k_cap < 1 or g.obs_per_component < 1:
            problems.append("gmm: tol > 0, max_iter >= 1, reg >= 0, k_cap >= 1, obs_per_component >= 1")
        if not 0.0 <= g.prune_threshold < 1.0:
            problems.append("gmm.prune_threshold must lie in [0, 1)")
        if s.min_n < 2:
            problems.append("scoring.min_n must be at least 2")
        if s.eps <= 0:
            problems.append("scoring.eps must be positive")
        if not 0.0 < s.p_low < s.p_high < 100.0:
            problems.append("scoring: need 0 < p_low < p_high < 100")
        if a.bin_width <= 0 or a.range_max <= a.range_min:
            problems.append("anchoring: bin_width > 0 and range_max > range_min required")
        if a.sigma_bins <= 0 or a.truncate <= 0:
            problems.append("anchoring: sigma_bins and truncate must be positive")
        if not a.windows or any(w <= 0 for w in a.windows):
            problems.append("anchoring.windows must be positive percentages")
        if a.n_perm < 1:
            problems.append("anchoring.n_perm must be at least 1")
        if self.output.workers < 1:
            problems.append("output.workers must be at least 1")
        for f in ("creditor_name", "net_amount"):
            if f not in self.input.columns:
                problems.append(f"input.columns must map {f!r}")
        if problems:
            raise ConfigError("; ".join(problems))
        return self


_SECTION_TYPES = {
    "input": InputConfig,
    "harmonise": HarmoniseConfig,
    "gmm": GmmConfig,
    "scoring": ScoringConfig,
    "anchoring": AnchoringSection,
    "output": OutputConfig,
}
_TUPLE_KEYS = {("input", "paths"), ("anchoring", "windows"), ("anchoring", "peaks")}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _apply(cfg: RunConfig, data: dict, origin: str) -> RunConfig:
    sections = {}
    for sec, values in data.items():
        if sec not in _SECTION_TYPES:
            raise ConfigError(f"{origin}: unknown section [{sec}]")
        if not isinstance(values, dict):
            raise ConfigError(f"{origin}: [{sec}] must be a table")
        current = getattr(cfg, sec)
        known = {f.name for f in fields(current)}
        changes = {}
        for key, value in values.items():
            if key not in known:
                raise ConfigError(f"{origin}: unknown key {sec}.{key}")
            if (sec, key) in _TUPLE_KEYS:
                value = tuple(value) if isinstance(value, (list, tuple)) else (value,)
                if sec == "anchoring":
                    try:
                        value = tuple(float(v) for v in value)
                    except (TypeError, ValueError):
                        raise ConfigError(f"{origin}: {sec}.{key} must be numbers") from None
            elif isinstance(getattr(current, key), dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"{origin}: {sec}.{key} must be a table")
                value = dict(value)
            elif value == "none" and key in {"cosine", "token_set", "jaccard", "ensemble"}:
                value = None
            changes[key] = value
        sections[sec] = replace(current, **changes)
    return replace(cfg, **sections)


def parse_override(text: str) -> dict:
    """Turn ``section.key=value`` into a nested dict; the value is read as TOML."""
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    lhs, rhs = text.split("=", 1)
    sec, key = lhs.strip().split(".", 1)
    try:
        value = tomllib.loads(f"v = {rhs.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = rhs.strip()
    return {sec: {key: value}}


def load_config(path=None, overrides=()) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        p = Path(path)
        try:
            data = tomllib.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {p}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{p}: {exc}") from None
        cfg = _apply(cfg, data, str(p))
    for ov in overrides:
        cfg = _apply(cfg, parse_override(ov), "--set")
    try:
        return cfg.validate()
    except TypeError as exc:
        raise ConfigError(f"bad value type: {exc}") from None


def dump_toml(cfg: RunConfig) -> str:
    """Render a config as TOML (None thresholds become the string "none")."""

    def fmt(v):
        if v is None:
            return '"none"'
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            return repr(v)
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, list):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        raise TypeError(type(v))

    lines = []
    for sec, values in cfg.to_dict().items():
        lines.append(f"[{sec}]")
        tables = []
        for k, v in values.items():
            if isinstance(v, dict):
                tables.append((k, v))
            else:
                lines.append(f"{k} = {fmt(v)}")
        for k, v in tables:
            lines.append(f"\n[{sec}.{k}]")
            lines.extend(f"{json.dumps(kk)} = {fmt(vv)}" for kk, vv in v.items())
        lines.append("")
    return "\n".join(lines)

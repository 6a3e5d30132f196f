"""Supplier identity harmonisation.

Raw creditor names are normalised, compared pairwise with a conjunctive
ensemble (TF-IDF cosine, token set ratio, token Jaccard and their mean),
and merged into the connected components of the resulting match graph.
Each component is named by its most frequent raw string and given a
keyed-hash pseudonym.

Only pairs sharing at least one token are scored: a Jaccard threshold
above zero cannot be met otherwise, so this blocking loses no matches
while the Jaccard or cosine condition is active.
"""

from __future__ import annotations

import csv
import hashlib
import hmac
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from . import kernels

DEFAULT_SUFFIXES = {"LTD": "LIMITED", "CO": "COMPANY"}
# available but off by default: schools are merged by the fuzzy scores
OPTIONAL_SUFFIXES = {"ACADEMY": "SCHOOL"}

_APOSTROPHES = re.compile(r"['’`]")
_NON_ALNUM = re.compile(r"[^0-9A-Z]+")
_TOL = 1e-12


class EmptyNameError(ValueError):
    """A name normalised to the empty string."""


@dataclass(frozen=True)
class NameKey:
    raw: str
    normalised: str

    @property
    def tokens(self) -> list[str]:
        return self.normalised.split(" ")


@dataclass(frozen=True)
class MatchScores:
    tfidf_cosine: float
    token_set_ratio: int
    jaccard: float

    @property
    def ensemble(self) -> float:
        return (self.tfidf_cosine + self.token_set_ratio / 100.0 + self.jaccard) / 3.0


@dataclass(frozen=True)
class MatchThresholds:
    """Conjunctive match rule. A threshold of None disables that test."""

    cosine: float | None = 0.76
    token_set: float | None = 77
    jaccard: float | None = 0.36
    ensemble: float | None = 0.66

    def matches(self, s: MatchScores) -> bool:
        if self.cosine is not None and s.tfidf_cosine < self.cosine - _TOL:
            return False
        if self.token_set is not None and s.token_set_ratio < self.token_set:
            return False
        if self.jaccard is not None and s.jaccard < self.jaccard - _TOL:
            return False
        if self.ensemble is not None and not s.ensemble > self.ensemble:
            return False
        return True


def normalise_name(raw: str, suffix_table: Mapping[str, str] = DEFAULT_SUFFIXES) -> NameKey:
    """Uppercase, strip punctuation, collapse spaces, standardise suffixes."""
    text = _APOSTROPHES.sub("", raw.upper())
    tokens = [suffix_table.get(t, t) for t in _NON_ALNUM.sub(" ", text).split()]
    if not tokens:
        raise EmptyNameError(f"name {raw!r} is empty after normalisation")
    return NameKey(raw=raw, normalised=" ".join(tokens))


def indel_ratio(a: str, b: str) -> float:
    """Similarity 100 * (1 - indel(a, b) / (len(a) + len(b)))."""
    total = len(a) + len(b)
    if total == 0:
        return 100.0
    return 100.0 * (total - kernels.indel_distance(a, b)) / total


def token_set_ratio(a_tokens, b_tokens) -> int:
    sa, sb = set(a_tokens), set(b_tokens)
    t0 = " ".join(sorted(sa & sb))
    t1 = (t0 + " " + " ".join(sorted(sa - sb))).strip()
    t2 = (t0 + " " + " ".join(sorted(sb - sa))).strip()
    best = max(indel_ratio(t0, t1), indel_ratio(t0, t2), indel_ratio(t1, t2))
    return int(math.floor(best + 0.5 + 1e-9))


def jaccard(a_tokens, b_tokens) -> float:
    sa, sb = set(a_tokens), set(b_tokens)
    union = sa | sb
    return len(sa & sb) / len(union) if union else 1.0


def build_idf(keys) -> dict[str, float]:
    """Smoothed IDF ln((1 + N) / (1 + df)) + 1 over distinct normalised names."""
    docs = sorted({k.normalised if isinstance(k, NameKey) else k for k in keys})
    df = Counter(t for d in docs for t in set(d.split(" ")))
    n = len(docs)
    return {t: math.log((1 + n) / (1 + c)) + 1.0 for t, c in df.items()}


def tfidf_cosine(a_tokens, b_tokens, idf: Mapping[str, float]) -> float:
    ca, cb = Counter(a_tokens), Counter(b_tokens)
    default = max(idf.values(), default=1.0)
    va = {t: c * idf.get(t, default) for t, c in ca.items()}
    vb = {t: c * idf.get(t, default) for t, c in cb.items()}
    na = math.sqrt(sum(v * v for v in va.values()))
    nb = math.sqrt(sum(v * v for v in vb.values()))
    if na == 0 or nb == 0:
        return 0.0
    return min(1.0, sum(v * vb.get(t, 0.0) for t, v in va.items()) / (na * nb))


def score_pair(a: NameKey, b: NameKey, idf: Mapping[str, float]) -> MatchScores:
    return MatchScores(
        tfidf_cosine=tfidf_cosine(a.tokens, b.tokens, idf),
        token_set_ratio=token_set_ratio(a.tokens, b.tokens),
        jaccard=jaccard(a.tokens, b.tokens),
    )


@dataclass
class CanonicalMap:
    clusters: list[list[str]]
    canonical: list[str]
    pseudonyms: list[str]
    counts: dict[str, int]
    rejected: list[str] = field(default_factory=list)
    edges: list[tuple[str, str, MatchScores]] = field(default_factory=list)

    def __post_init__(self):
        self._index = {raw: i for i, members in enumerate(self.clusters) for raw in members}

    def cluster_of(self, raw: str) -> int:
        return self._index[raw]

    def canonical_of(self, raw: str) -> str:
        return self.canonical[self._index[raw]]

    def pseudonym_of(self, raw: str) -> str:
        return self.pseudonyms[self._index[raw]]

    def __contains__(self, raw: str) -> bool:
        return raw in self._index

    @property
    def n_canonical(self) -> int:
        return len(self.clusters)

    def audit_rows(self) -> list[dict]:
        rows = []
        for members, canon, pseudo in zip(self.clusters, self.canonical, self.pseudonyms):
            for raw in members:
                rows.append(
                    {
                        "raw_name": raw,
                        "canonical_name": canon,
                        "pseudonym": pseudo,
                        "cluster_size": len(members),
                        "row_count": self.counts.get(raw, 0),
                    }
                )
        return rows

    def write_audit(self, path) -> None:
        rows = self.audit_rows()
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(
                fh, fieldnames=["raw_name", "canonical_name", "pseudonym", "cluster_size", "row_count"]
            )
            w.writeheader()
            w.writerows(rows)


def pseudonymise(canonical: str, salt: str) -> str:
    digest = hmac.new(salt.encode("utf-8"), canonical.encode("utf-8"), hashlib.sha256).hexdigest()
    return "S-" + digest[:8]


def candidate_pairs(keys: list[str], idf: Mapping[str, float]):
    """Return arrays (i, j, cosine, jaccard) over pairs i < j sharing a token."""
    vocab = {t: i for i, t in enumerate(sorted(idf))}
    rows, cols, vals = [], [], []
    for r, key in enumerate(keys):
        for t, c in Counter(key.split(" ")).items():
            rows.append(r)
            cols.append(vocab[t])
            vals.append(c * idf[t])
    x = sparse.csr_matrix((vals, (rows, cols)), shape=(len(keys), len(vocab)))
    sizes = np.diff(x.indptr).astype(np.float64)
    norms = np.sqrt(np.asarray(x.multiply(x).sum(axis=1)).ravel())
    x = (sparse.diags(1.0 / norms) @ x).tocsr()
    b = x.copy()
    b.data[:] = 1.0
    cos = sparse.triu(x @ x.T, k=1).tocsr()
    inter = sparse.triu(b @ b.T, k=1).tocsr()
    cos.sort_indices()
    inter.sort_indices()
    # both products share one sparsity pattern: all entries are positive
    assert np.array_equal(cos.indptr, inter.indptr) and np.array_equal(cos.indices, inter.indices)
    i = np.repeat(np.arange(len(keys)), np.diff(cos.indptr))
    j = cos.indices
    jac = inter.data / (sizes[i] + sizes[j] - inter.data)
    return i, j, np.minimum(cos.data, 1.0), jac


def build_canonical_map(
    name_counts: Mapping[str, int],
    thresholds: MatchThresholds = MatchThresholds(),
    suffix_table: Mapping[str, str] = DEFAULT_SUFFIXES,
    salt: str = "phiscore",
    keep_edges: bool = False,
) -> CanonicalMap:
    """Cluster raw names into canonical suppliers.

    ``name_counts`` maps each raw name to its row count, which decides the
    canonical (modal) string of a cluster; ties go to the smallest string.
    """
    keys_by_raw = {}
    rejected = []
    for raw in sorted(name_counts):
        try:
            keys_by_raw[raw] = normalise_name(raw, suffix_table).normalised
        except EmptyNameError:
            rejected.append(raw)
    keys = sorted(set(keys_by_raw.values()))
    key_index = {k: i for i, k in enumerate(keys)}
    idf = build_idf(keys)

    edges_i, edges_j, kept = [], [], []
    if len(keys) > 1:
        ii, jj, cos, jac = candidate_pairs(keys, idf)
        # cheap conjunctive tests first; the string ratio only for survivors
        ok = np.ones(ii.size, dtype=bool)
        if thresholds.cosine is not None:
            ok &= cos >= thresholds.cosine - _TOL
        if thresholds.jaccard is not None:
            ok &= jac >= thresholds.jaccard - _TOL
        for i, j, c, jc in zip(ii[ok].tolist(), jj[ok].tolist(), cos[ok].tolist(), jac[ok].tolist()):
            ta, tb = keys[i].split(" "), keys[j].split(" ")
            s = MatchScores(c, token_set_ratio(ta, tb), jc)
            if thresholds.matches(s):
                edges_i.append(i)
                edges_j.append(j)
                if keep_edges:
                    kept.append((keys[i], keys[j], s))

    n = len(keys)
    graph = sparse.coo_matrix((np.ones(len(edges_i)), (edges_i, edges_j)), shape=(n, n))
    _, comp = connected_components(graph, directed=False) if n else (0, np.empty(0, dtype=int))

    members: dict[int, list[str]] = {}
    for raw, key in keys_by_raw.items():
        members.setdefault(int(comp[key_index[key]]), []).append(raw)

    groups = []
    for raws in members.values():
        raws.sort()
        canon = min(raws, key=lambda r: (-name_counts[r], r))
        groups.append((canon, raws))
    groups.sort()

    pseudonyms = [pseudonymise(c, salt) for c, _ in groups]
    if len(set(pseudonyms)) != len(pseudonyms):
        raise RuntimeError("pseudonym collision; choose a different salt")
    return CanonicalMap(
        clusters=[r for _, r in groups],
        canonical=[c for c, _ in groups],
        pseudonyms=pseudonyms,
        counts=dict(name_counts),
        rejected=rejected,
        edges=kept,
    )

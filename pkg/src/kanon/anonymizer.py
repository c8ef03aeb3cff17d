"""Release a k-anonymous matrix from a clustering, and the end-to-end pipeline."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .clustering import CannotAnonymize, Clustering, FacilityConfig, lower_bounded_clustering
from .matrix import (
    SparseBinaryMatrix,
    diff_stats,
    jaccard,
    suppressed_created_fractions,
    verify_k_anonymous,
    verify_smooth_k_anonymous,
)

MODES = ("smooth", "suppress")


@dataclass
class AnonymizationReport:
    output: SparseBinaryMatrix
    k: int
    mode: str
    jaccard: float
    suppressed_frac: float
    created_frac: float
    verified: bool
    cluster_count: int
    wall_time: float


def _round(m: SparseBinaryMatrix, groups, keep) -> SparseBinaryMatrix:
    # keep(counts, size) -> bool mask over the group's observed features
    rows: list = [None] * m.n_users
    for g in groups:
        g = np.asarray(g, dtype=np.int64)
        feats = np.concatenate([m.row(u) for u in g]) if len(g) else np.zeros(0, dtype=np.int64)
        vals, counts = np.unique(feats, return_counts=True)
        common = vals[keep(counts, len(g))]
        for u in g:
            rows[u] = common
    if any(r is None for r in rows):
        raise ValueError("clusters must cover every user")
    indptr = np.zeros(m.n_users + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    return SparseBinaryMatrix(m.n_users, m.n_features, indptr, indices)


def _groups(c) -> list:
    if isinstance(c, Clustering):
        return c.members()
    return [np.asarray(g, dtype=np.int64) for g in c]


def smooth_round(m: SparseBinaryMatrix, c) -> SparseBinaryMatrix:
    """Give every member of a cluster the features held by at least half of it.

    ``c`` is a :class:`Clustering` or an iterable of user-id groups.
    """
    return _round(m, _groups(c), lambda counts, size: 2 * counts >= size)


def suppress_round(m: SparseBinaryMatrix, c) -> SparseBinaryMatrix:
    """Give every member of a cluster the intersection of the members' rows."""
    return _round(m, _groups(c), lambda counts, size: counts == size)


def smooth_round_with_given_clusters(m: SparseBinaryMatrix, blocks) -> SparseBinaryMatrix:
    blocks = [np.asarray(b, dtype=np.int64) for b in blocks]
    allu = np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)
    if len(allu) != m.n_users or not np.array_equal(np.sort(allu), np.arange(m.n_users)):
        raise ValueError("blocks must partition the users")
    if any(len(b) == 0 for b in blocks):
        raise ValueError("blocks must be non-empty")
    return smooth_round(m, blocks)


def report_for(original: SparseBinaryMatrix, output: SparseBinaryMatrix, k: int, mode: str,
               cluster_count: int, wall_time: float) -> AnonymizationReport:
    st = diff_stats(original, output)
    if original.nnz:
        sup, cre = suppressed_created_fractions(st, original.nnz)
    else:
        sup, cre = 0.0, float(st.created)
    if mode == "smooth":
        ok = verify_smooth_k_anonymous(output, original, k)
    else:
        ok = verify_k_anonymous(output, k) and st.created == 0
    return AnonymizationReport(output, k, mode, jaccard(st), sup, cre, ok, cluster_count, wall_time)


def anonymize(m: SparseBinaryMatrix, k: int, mode: str = "smooth", cfg: FacilityConfig | None = None) -> AnonymizationReport:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if m.n_users < k:
        raise CannotAnonymize(f"n={m.n_users} < k={k}")
    cfg = FacilityConfig(k) if cfg is None else cfg
    if cfg.k != k:
        cfg = replace(cfg, k=k)
    start = time.perf_counter()
    if k == 1:
        # every release is 1-anonymous; the input itself is optimal
        return report_for(m, m, k, mode, m.n_users, time.perf_counter() - start)
    clusters = lower_bounded_clustering(m, cfg, mode)
    out = smooth_round(m, clusters) if mode == "smooth" else suppress_round(m, clusters)
    return report_for(m, out, k, mode, clusters.n_clusters, time.perf_counter() - start)

"""Minhash ordering and chunked anonymization for inputs too large for one pass."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._rng import MASK64, derive_seed, mix64_array
from .anonymizer import AnonymizationReport, anonymize, report_for
from .clustering import CannotAnonymize, FacilityConfig
from .matrix import SparseBinaryMatrix

SENTINEL = MASK64


@dataclass(frozen=True)
class ShardConfig:
    num_hashes: int = 8
    chunk_size: int = 1000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.num_hashes < 1:
            raise ValueError("num_hashes must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")


def minhash_signature(row, cfg: ShardConfig) -> tuple[int, ...]:
    """Per-hash minimum of mix64(seed, j, f) over the row's features."""
    row = np.asarray(row, dtype=np.int64)
    if len(row) == 0:
        return (SENTINEL,) * cfg.num_hashes
    return tuple(int(mix64_array(cfg.seed, j, row).min()) for j in range(cfg.num_hashes))


def minhash_signatures(m: SparseBinaryMatrix, cfg: ShardConfig) -> np.ndarray:
    """n_users x num_hashes array of signatures (uint64)."""
    sig = np.full((m.n_users, cfg.num_hashes), SENTINEL, dtype=np.uint64)
    lens = m.row_lengths()
    nonempty = np.flatnonzero(lens > 0)
    if len(nonempty) == 0:
        return sig
    starts = m.indptr[:-1][nonempty]
    for j in range(cfg.num_hashes):
        h = mix64_array(cfg.seed, j, m.indices)
        sig[nonempty, j] = np.minimum.reduceat(h, starts)
    return sig


def shard_order(m: SparseBinaryMatrix, cfg: ShardConfig) -> np.ndarray:
    """Users sorted lexicographically by signature; ties keep user-id order."""
    sig = minhash_signatures(m, cfg)
    keys = [np.arange(m.n_users)] + [sig[:, j] for j in reversed(range(cfg.num_hashes))]
    return np.lexsort(keys)


def chunk_bounds(n: int, chunk_size: int, k: int) -> list[tuple[int, int]]:
    bounds = [(s, min(n, s + chunk_size)) for s in range(0, n, chunk_size)]
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] < k:
        last = bounds.pop()
        bounds[-1] = (bounds[-1][0], last[1])
    return bounds


def _run_chunk(args):
    sub, k, mode, fcfg = args
    rep = anonymize(sub, k, mode, fcfg)
    return rep.output, rep.cluster_count


def sharded_anonymize(m: SparseBinaryMatrix, k: int, mode: str, fcfg: FacilityConfig,
                      scfg: ShardConfig) -> AnonymizationReport:
    """Anonymize consecutive chunks of the minhash order independently and stitch them back.

    Chunk ``i`` runs with seed ``mix64(fcfg.seed, i)``; with a single chunk
    that derivation still applies, so results do not depend on worker count.
    """
    if scfg.chunk_size < k:
        raise ValueError(f"chunk_size={scfg.chunk_size} < k={k}")
    if m.n_users < k:
        raise CannotAnonymize(f"n={m.n_users} < k={k}")
    start = time.perf_counter()
    order = shard_order(m, scfg)
    bounds = chunk_bounds(m.n_users, scfg.chunk_size, k)
    jobs = []
    for i, (a, b) in enumerate(bounds):
        cfg = replace(fcfg, k=k, seed=derive_seed(fcfg.seed, i))
        jobs.append((m.take_rows(order[a:b]), k, mode, cfg))
    if scfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=scfg.workers) as ex:
            outputs = list(ex.map(_run_chunk, jobs))
    else:
        outputs = [_run_chunk(j) for j in jobs]

    rows: list = [None] * m.n_users
    for (a, b), (out, _) in zip(bounds, outputs):
        for local, u in enumerate(order[a:b]):
            rows[u] = out.row(local)
    merged = SparseBinaryMatrix.from_rows(rows, m.n_features)
    return report_for(m, merged, k, mode, sum(c for _, c in outputs),
                      time.perf_counter() - start)

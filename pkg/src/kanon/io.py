"""Edge-list files and CSV sweep reports."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .matrix import SparseBinaryMatrix

REPORT_COLUMNS = ["dataset", "algorithm", "param", "jaccard_mean", "jaccard_std",
                  "suppressed_frac", "created_frac", "runtime_ms"]


class MalformedInput(ValueError):
    pass


@dataclass
class SweepRow:
    dataset: str
    algorithm: str
    param: float
    jaccard_mean: float
    jaccard_std: float
    suppressed_frac: float
    created_frac: float
    runtime_ms: float


def read_edge_list(path) -> SparseBinaryMatrix:
    """Parse ``n m`` followed by ``u<TAB>f`` lines (0-based, any order, no duplicates)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise MalformedInput("empty file")
    try:
        n, m = (int(x) for x in lines[0].split())
    except ValueError as e:
        raise MalformedInput(f"bad header {lines[0]!r}") from e
    if n < 0 or m < 0:
        raise MalformedInput("negative dimensions")
    body = [ln for ln in lines[1:] if ln.strip()]
    users = np.empty(len(body), dtype=np.int64)
    feats = np.empty(len(body), dtype=np.int64)
    for i, ln in enumerate(body):
        parts = ln.split("\t")
        if len(parts) != 2:
            raise MalformedInput(f"line {i + 2}: expected 'u<TAB>f'")
        try:
            users[i], feats[i] = int(parts[0]), int(parts[1])
        except ValueError as e:
            raise MalformedInput(f"line {i + 2}: non-integer id") from e
    try:
        return SparseBinaryMatrix.from_edges(n, m, users, feats)
    except ValueError as e:
        raise MalformedInput(str(e)) from e


def write_edge_list(m: SparseBinaryMatrix, path) -> None:
    users = m.user_ids()
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{m.n_users} {m.n_features}\n")
        fh.writelines(f"{u}\t{f}\n" for u, f in zip(users.tolist(), m.indices.tolist()))


def write_report(rows, path, extra_columns=()) -> None:
    cols = REPORT_COLUMNS + list(extra_columns)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow(asdict(r) if isinstance(r, SweepRow) else r)

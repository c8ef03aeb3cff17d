"""Sparse binary matrices (user x feature edge sets), set algebra, and verifiers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseBinaryMatrix:
    """Users x features matrix with 1-entries stored row-wise (CSR layout).

    Row ``u`` is ``indices[indptr[u]:indptr[u+1]]``, strictly increasing.
    The dense matrix is never built.
    """

    n_users: int
    n_features: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if indptr.shape != (self.n_users + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise ValueError("malformed indptr")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("malformed indptr")
        if len(indices):
            if indices.min() < 0 or indices.max() >= self.n_features:
                raise ValueError("feature index out of range")
            # strictly increasing inside each row
            steps = np.diff(indices)
            row_starts = np.zeros(len(indices), dtype=bool)
            row_starts[indptr[1:-1][indptr[1:-1] < len(indices)]] = True
            if np.any((steps <= 0) & ~row_starts[1:]):
                raise ValueError("rows must be sorted and duplicate-free")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    # construction -----------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Sequence[Iterable[int]], n_features: int) -> "SparseBinaryMatrix":
        clean = [np.unique(np.asarray(list(r), dtype=np.int64)) for r in rows]
        indptr = np.zeros(len(clean) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(r) for r in clean])
        indices = np.concatenate(clean) if clean else np.zeros(0, dtype=np.int64)
        return cls(len(clean), n_features, indptr, indices)

    @classmethod
    def from_edges(cls, n_users: int, n_features: int, users, features) -> "SparseBinaryMatrix":
        """Build from (user, feature) pairs; duplicates raise."""
        users = np.asarray(users, dtype=np.int64)
        features = np.asarray(features, dtype=np.int64)
        if users.shape != features.shape:
            raise ValueError("users and features must have equal length")
        if len(users) and (users.min() < 0 or users.max() >= n_users):
            raise ValueError("user index out of range")
        if len(features) and (features.min() < 0 or features.max() >= n_features):
            raise ValueError("feature index out of range")
        keys = users * n_features + features
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        if len(keys) > 1 and np.any(keys[1:] == keys[:-1]):
            raise ValueError("duplicate entries")
        return cls.from_linear(n_users, n_features, keys)

    @classmethod
    def from_linear(cls, n_users: int, n_features: int, keys: np.ndarray) -> "SparseBinaryMatrix":
        """Build from sorted, unique linear indices ``u * n_features + f``."""
        keys = np.asarray(keys, dtype=np.int64)
        if n_features == 0:
            return cls(n_users, 0, np.zeros(n_users + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))
        users, features = np.divmod(keys, n_features)
        indptr = np.zeros(n_users + 1, dtype=np.int64)
        np.cumsum(np.bincount(users, minlength=n_users), out=indptr[1:])
        return cls(n_users, n_features, indptr, features)

    @classmethod
    def from_csr(cls, a: sp.spmatrix) -> "SparseBinaryMatrix":
        a = sp.csr_matrix(a)
        a.sum_duplicates()
        a.sort_indices()
        a.eliminate_zeros()
        return cls(a.shape[0], a.shape[1], a.indptr, a.indices)

    # access -----------------------------------------------------------

    @property
    def nnz(self) -> int:
        return len(self.indices)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_users, self.n_features

    @property
    def density(self) -> float:
        cells = self.n_users * self.n_features
        return self.nnz / cells if cells else 0.0

    def row(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def rows(self) -> list[np.ndarray]:
        return [self.row(u) for u in range(self.n_users)]

    def row_lengths(self) -> np.ndarray:
        return np.diff(self.indptr)

    def user_ids(self) -> np.ndarray:
        """User id of every stored entry, aligned with ``indices``."""
        return np.repeat(np.arange(self.n_users, dtype=np.int64), self.row_lengths())

    def linear(self) -> np.ndarray:
        """Sorted linear indices ``u * n_features + f`` of all entries."""
        return self.user_ids() * self.n_features + self.indices

    def to_csr(self) -> sp.csr_matrix:
        data = np.ones(self.nnz, dtype=np.int32)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)

    def take_rows(self, users: Sequence[int]) -> "SparseBinaryMatrix":
        users = np.asarray(users, dtype=np.int64)
        return SparseBinaryMatrix.from_rows([self.row(u) for u in users], self.n_features)

    def __eq__(self, other):
        if not isinstance(other, SparseBinaryMatrix):
            return NotImplemented
        return (self.shape == other.shape and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash((self.shape, self.indptr.tobytes(), self.indices.tobytes()))

    def __repr__(self):
        return f"SparseBinaryMatrix(n_users={self.n_users}, n_features={self.n_features}, nnz={self.nnz})"


@dataclass(frozen=True)
class EquivalenceClasses:
    class_of: np.ndarray
    class_sizes: np.ndarray

    @property
    def n_classes(self) -> int:
        return len(self.class_sizes)


@dataclass(frozen=True)
class DiffStats:
    intersection: int
    union_: int
    removed: int
    created: int

    @property
    def symmetric_difference(self) -> int:
        return self.removed + self.created


def hamming_distance(a, b) -> int:
    """Size of the symmetric difference of two sorted, duplicate-free rows."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    common = len(np.intersect1d(a, b, assume_unique=True))
    return len(a) + len(b) - 2 * common


def pairwise_hamming(m: SparseBinaryMatrix, users_a=None, users_b=None) -> np.ndarray:
    """Dense |A| x |B| block of Hamming distances between user rows.

    Uses |a| + |b| - 2|a & b| with a sparse product for the intersections.
    """
    a = m.to_csr()
    lens = m.row_lengths()
    if users_a is not None:
        a_rows, lens_a = a[np.asarray(users_a)], lens[np.asarray(users_a)]
    else:
        a_rows, lens_a = a, lens
    if users_b is not None:
        b_rows, lens_b = a[np.asarray(users_b)], lens[np.asarray(users_b)]
    else:
        b_rows, lens_b = a, lens
    common = (a_rows @ b_rows.T).toarray()
    return lens_a[:, None] + lens_b[None, :] - 2 * common


def distances_to_row(m: SparseBinaryMatrix, row, csr: sp.csr_matrix | None = None) -> np.ndarray:
    """Hamming distance from ``row`` (feature indices) to every user."""
    row = np.asarray(row, dtype=np.int64)
    csr = m.to_csr() if csr is None else csr
    indicator = np.zeros(m.n_features, dtype=np.int32)
    indicator[row] = 1
    common = csr @ indicator
    return m.row_lengths() + len(row) - 2 * common


def diff_stats(original: SparseBinaryMatrix, other: SparseBinaryMatrix) -> DiffStats:
    if original.shape != other.shape:
        raise DimensionMismatch(f"{original.shape} != {other.shape}")
    e, e2 = original.linear(), other.linear()
    inter = len(np.intersect1d(e, e2, assume_unique=True))
    removed = len(e) - inter
    created = len(e2) - inter
    return DiffStats(inter, inter + removed + created, removed, created)


def jaccard(stats: DiffStats) -> float:
    if stats.union_ == 0:
        return 1.0
    return stats.intersection / stats.union_


def suppressed_created_fractions(stats: DiffStats, original_entries: int) -> tuple[float, float]:
    if original_entries <= 0:
        raise ValueError("original matrix has no entries")
    return stats.removed / original_entries, stats.created / original_entries


def equivalence_classes(m: SparseBinaryMatrix) -> EquivalenceClasses:
    ids: dict[bytes, int] = {}
    class_of = np.empty(m.n_users, dtype=np.int64)
    for u in range(m.n_users):
        class_of[u] = ids.setdefault(m.row(u).tobytes(), len(ids))
    sizes = np.bincount(class_of, minlength=len(ids))
    return EquivalenceClasses(class_of, sizes)


def verify_k_anonymous(m: SparseBinaryMatrix, k: int) -> bool:
    if k < 1:
        raise ValueError("k must be >= 1")
    if m.n_users == 0:
        return True
    return bool(equivalence_classes(m).class_sizes.min() >= k)


def verify_smooth_k_anonymous(output: SparseBinaryMatrix, original: SparseBinaryMatrix, k: int) -> bool:
    """k-anonymity of ``output`` plus the majority condition against ``original``.

    Every feature released for a class must have been held, in the original
    matrix, by at least half of the class (ties count as a majority).
    """
    if output.shape != original.shape:
        raise DimensionMismatch(f"{output.shape} != {original.shape}")
    if not verify_k_anonymous(output, k):
        return False
    classes = equivalence_classes(output)
    counts: dict[tuple[int, int], int] = {}
    orig_users = original.user_ids()
    for u, f in zip(orig_users, original.indices):
        key = (int(classes.class_of[u]), int(f))
        counts[key] = counts.get(key, 0) + 1
    # one representative per class suffices: rows within a class are identical
    seen = set()
    for u in range(output.n_users):
        c = int(classes.class_of[u])
        if c in seen:
            continue
        seen.add(c)
        size = int(classes.class_sizes[c])
        for f in output.row(u):
            if 2 * counts.get((c, int(f)), 0) < size:
                return False
    return True


def majority_row(m: SparseBinaryMatrix, members) -> np.ndarray:
    """Features held by at least half of ``members`` (ties included)."""
    members = np.asarray(members, dtype=np.int64)
    if len(members) == 0:
        return np.zeros(0, dtype=np.int64)
    feats = np.concatenate([m.row(u) for u in members])
    if len(feats) == 0:
        return feats
    vals, counts = np.unique(feats, return_counts=True)
    return vals[2 * counts >= len(members)]


def lemma_bounds_hold(original: SparseBinaryMatrix, other: SparseBinaryMatrix, phi: float) -> tuple[bool, bool]:
    """Check both Jaccard / symmetric-difference inequalities for one pair.

    Returns (count_to_jaccard, jaccard_to_count):
      * if 2|E xor E'| <= phi |E| then J >= 1 - phi/2
      * if J >= 1 - phi (phi < 1) then 2|E xor E'| <= 2 phi / (1 - phi) |E|
    Vacuous premises count as holding.
    """
    st = diff_stats(original, other)
    j = jaccard(st)
    e = original.nnz
    sym = st.symmetric_difference
    eps = 1e-12
    first = True
    if 2 * sym <= phi * e:
        first = j >= 1 - phi / 2 - eps
    second = True
    if phi < 1 and j >= 1 - phi:
        second = 2 * sym <= 2 * phi / (1 - phi) * e + eps
    return first, second


__all__ = [
    "SparseBinaryMatrix", "EquivalenceClasses", "DiffStats", "DimensionMismatch",
    "hamming_distance", "pairwise_hamming", "distances_to_row", "diff_stats", "jaccard",
    "suppressed_created_fractions", "equivalence_classes", "verify_k_anonymous",
    "verify_smooth_k_anonymous", "majority_row", "lemma_bounds_hold",
]

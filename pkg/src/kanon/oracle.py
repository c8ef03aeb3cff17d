"""Exhaustive optima on tiny instances, used as ground truth in tests."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .matrix import SparseBinaryMatrix, hamming_distance

MAX_USERS = 10
MAX_POINTS = 12


class InstanceTooLarge(ValueError):
    pass


@dataclass
class OracleResult:
    best_jaccard: float
    best_partition: list
    enumerated: int


def set_partitions(n: int, min_part: int = 1):
    """Yield partitions of range(n) as lists of lists, every part >= ``min_part``.

    Restricted-growth strings, pruned when the unassigned users cannot lift
    every undersized part to ``min_part``.
    """
    labels = [0] * n
    sizes: list[int] = []

    def rec(i):
        if i == n:
            if all(s >= min_part for s in sizes):
                parts = [[] for _ in sizes]
                for u, l in enumerate(labels):
                    parts[l].append(u)
                yield parts
            return
        remaining = n - i
        deficit = sum(max(0, min_part - s) for s in sizes)
        if deficit > remaining:
            return
        for l in range(len(sizes) + 1):
            if l == len(sizes):
                if deficit + min_part > remaining:
                    continue
                sizes.append(0)
            labels[i] = l
            sizes[l] += 1
            yield from rec(i + 1)
            sizes[l] -= 1
            if sizes[l] == 0:
                sizes.pop()

    yield from rec(0)


def _part_options(m: SparseBinaryMatrix, part):
    """Fixed (intersection, union) contribution and tie features of one part.

    A feature with count c in a part of size s contributes, if kept,
    intersection c and union s; if dropped, intersection 0 and union c.
    Strict majorities are kept, strict minorities dropped; ties are free.
    """
    s = len(part)
    counts: dict[int, int] = {}
    for u in part:
        for f in m.row(u):
            counts[int(f)] = counts.get(int(f), 0) + 1
    inter = union = 0
    ties = []
    for f, c in counts.items():
        if 2 * c > s:
            inter += c
            union += s
        elif 2 * c < s:
            union += c
        else:
            ties.append(c)
    return inter, union, ties


def brute_force_smooth_opt(m: SparseBinaryMatrix, k: int) -> OracleResult:
    """Best Jaccard of any smooth-k-anonymization built from a partition into parts >= k."""
    n = m.n_users
    if n > MAX_USERS:
        raise InstanceTooLarge(f"n={n} > {MAX_USERS}")
    if n < k:
        raise ValueError(f"n={n} < k={k}")
    best = None
    best_part = None
    count = 0
    for parts in set_partitions(n, k):
        count += 1
        inter = union = 0
        ties = []
        for part in parts:
            i, u, t = _part_options(m, part)
            inter += i
            union += u
            ties.extend(t)
        # a tie with count c adds (c, 2c) to (intersection, union) when kept
        # and (0, c) when dropped
        for keep in itertools.product((True, False), repeat=len(ties)):
            ii = inter + sum(c for c, kp in zip(ties, keep) if kp)
            uu = union + sum(2 * c if kp else c for c, kp in zip(ties, keep))
            j = Fraction(1) if uu == 0 else Fraction(ii, uu)
            if best is None or j > best:
                best, best_part = j, parts
    return OracleResult(float(best), best_part, count)


def brute_force_facility_location(points, costs) -> tuple[float, list[int]]:
    """Exact facility location optimum over all non-empty facility subsets.

    ``points`` are feature-index rows (Hamming metric) or a SparseBinaryMatrix.
    """
    if isinstance(points, SparseBinaryMatrix):
        points = points.rows()
    n = len(points)
    if n == 0:
        raise ValueError("no points")
    if n > MAX_POINTS:
        raise InstanceTooLarge(f"{n} points > {MAX_POINTS}")
    d = np.array([[hamming_distance(a, b) for b in points] for a in points], dtype=float)
    costs = np.asarray(costs, dtype=float)
    best, best_set = np.inf, None
    for r in range(1, n + 1):
        for subset in itertools.combinations(range(n), r):
            s = list(subset)
            obj = costs[s].sum() + d[:, s].min(axis=1).sum()
            if obj < best:
                best, best_set = obj, s
    return float(best), best_set

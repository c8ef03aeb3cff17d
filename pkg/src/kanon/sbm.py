"""Bipartite stochastic block model instances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import rng_for
from .matrix import SparseBinaryMatrix


@dataclass(frozen=True)
class SbmParams:
    """r blocks of s users and s features; in-block probability q, cross-block p."""

    r: int
    s: int
    q: float
    p: float
    seed: int = 0

    def __post_init__(self):
        if self.r < 1 or self.s < 1:
            raise ValueError("r and s must be positive")
        if not (0.0 <= self.p <= self.q <= 1.0):
            raise ValueError("need 0 <= p <= q <= 1")

    @property
    def n(self) -> int:
        return self.r * self.s

    @property
    def alpha_sbm(self) -> float:
        """Expected in-block degree q*s."""
        return self.q * self.s

    @property
    def beta_sbm(self) -> float:
        """Expected cross-block degree p*(n - s)."""
        return self.p * (self.n - self.s)

    @property
    def expected_edges(self) -> float:
        return self.n * (self.alpha_sbm + self.beta_sbm)

    def blocks(self) -> list[np.ndarray]:
        return [np.arange(b * self.s, (b + 1) * self.s) for b in range(self.r)]


def sbm_generate(params: SbmParams) -> SparseBinaryMatrix:
    # Each user row draws from its own stream keyed by (seed, user); cell f is
    # the f-th uniform of that stream, so output is independent of row order.
    n, s = params.n, params.s
    rows = []
    cols = np.arange(n)
    for u in range(n):
        draws = rng_for(params.seed, u).random(n)
        thresh = np.where(cols // s == u // s, params.q, params.p)
        rows.append(np.flatnonzero(draws < thresh))
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    return SparseBinaryMatrix(n, n, indptr, np.concatenate(rows))


def theorem_threshold_k(n: int, q: float) -> float:
    """Smallest k for which the SBM edge bound applies: 2 ln n / ln(1/q)."""
    return 2.0 * math.log(n) / math.log(1.0 / q)


def sbm_theorem_edge_bound(n: float, q: float, k: int | None = None) -> int:
    """ceil(t * n) with t = (2 ln n + 10) / ln(1/q).

    With high probability no k-anonymous subgraph of an SBM graph has more
    edges. ``k`` (if given) must meet :func:`theorem_threshold_k`.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if k is not None and k < theorem_threshold_k(n, q):
        raise ValueError(f"bound inapplicable: k={k} < {theorem_threshold_k(n, q):.3f}")
    t = (2.0 * math.log(n) + 10.0) / math.log(1.0 / q)
    return math.ceil(t * n)

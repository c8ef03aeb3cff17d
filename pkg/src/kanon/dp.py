"""Randomized response on sparse binary matrices, plus closed-form DP utility bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matrix import SparseBinaryMatrix

EPS_MAX = 100.0


class BoundNotApplicable(ValueError):
    """The concentration condition p/4 >= sqrt(C(delta)/Q) fails."""


def edge_dp_flip_p(epsilon: float) -> float:
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    # 2 / (1 + e^eps), written to avoid overflow for large eps
    return 2.0 * math.exp(-epsilon) / (1.0 + math.exp(-epsilon)) if epsilon > 0 else 1.0


def node_dp_flip_p(epsilon: float, m: int) -> float:
    if m < 1:
        raise ValueError("need at least one feature")
    return edge_dp_flip_p(epsilon / m)


@dataclass(frozen=True)
class DpParams:
    epsilon: float
    mode: str = "edge"
    n_features: int | None = None
    seed: int = 0
    flip_p: float = field(init=False)

    def __post_init__(self):
        if self.mode == "edge":
            p = edge_dp_flip_p(self.epsilon)
        elif self.mode == "node":
            if self.n_features is None:
                raise ValueError("node mode needs n_features")
            p = node_dp_flip_p(self.epsilon, self.n_features)
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "flip_p", p)

    @classmethod
    def for_matrix(cls, m: SparseBinaryMatrix, epsilon: float, mode: str = "edge", seed: int = 0) -> "DpParams":
        return cls(epsilon, mode, m.n_features, seed)


def _absent_cells(present: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    """Map ranks among absent cells to linear cell indices.

    ``present`` is sorted; the r-th absent cell is r plus the number of
    present cells that precede it.
    """
    gaps = present - np.arange(len(present))
    return ranks + np.searchsorted(gaps, ranks, side="right")


def randomized_response(m: SparseBinaryMatrix, params: DpParams) -> SparseBinaryMatrix:
    """Per cell: with probability p resample uniformly from {0,1}, else keep.

    Entries survive with probability 1 - p/2; absent cells appear with
    probability p/2. Created cells are drawn as a binomial count followed by
    distinct uniform positions among absent cells, so work is proportional
    to |E| plus the number of created entries.
    """
    p = params.flip_p
    rng = np.random.default_rng(params.seed)
    present = m.linear()
    keep = rng.random(len(present)) >= p / 2.0
    survivors = present[keep]
    n_absent = m.n_users * m.n_features - len(present)
    n_created = int(rng.binomial(n_absent, p / 2.0)) if n_absent > 0 else 0
    if n_created:
        ranks = np.sort(rng.choice(n_absent, size=n_created, replace=False))
        created = _absent_cells(present, ranks)
        out = np.union1d(survivors, created)
    else:
        out = survivors
    return SparseBinaryMatrix.from_linear(m.n_users, m.n_features, out)


def concentration_term(Q: float, delta: float) -> float:
    """sqrt(C(delta) / Q) with C(delta) = ln(2/delta) / 2."""
    return math.sqrt(math.log(2.0 / delta) / 2.0 / Q)


def jaccard_upper_bound(epsilon: float, lam: float, Q: float, delta: float, check: bool = True) -> float:
    """High-probability upper bound on the Jaccard similarity of edge-DP randomized response.

    ``lam`` is the density |E|/Q and ``Q`` the number of cells. With
    ``check`` the applicability condition on the flip probability is
    enforced; pass ``check=False`` to evaluate the closed form regardless
    (as when plotting the epsilon-vs-density curve).
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("density must be in (0, 1]")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    if Q < 1:
        raise ValueError("Q must be >= 1")
    slack = concentration_term(Q, delta)
    if check and edge_dp_flip_p(epsilon) / 4.0 < slack:
        raise BoundNotApplicable(f"p/4 < sqrt(C/Q) at epsilon={epsilon}")
    a = 1.0 / (math.exp(min(epsilon, 700.0)) + 1.0)
    return (1.0 - a) / (1.0 + a * (1.0 - lam) / lam) + 2.0 * slack


def min_epsilon_for_jaccard(target_j: float, lam: float, Q: float, delta: float, tol: float = 1e-4) -> float:
    """Smallest epsilon whose Jaccard upper bound reaches ``target_j``.

    Returns ``math.inf`` when the target is out of reach for epsilon <= 100.
    """
    if not 0.0 < target_j < 1.0:
        raise ValueError("target must lie in (0, 1)")

    def f(eps):
        return jaccard_upper_bound(eps, lam, Q, delta, check=False)

    lo, hi = 0.0, EPS_MAX
    if f(lo) >= target_j:
        return 0.0
    if f(hi) < target_j:
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= target_j:
            hi = mid
        else:
            lo = mid
    return hi


def hardness_epsilon_lower_bound(alpha_util: float, n: int, m: int) -> float:
    """ln(alpha^2 n m / (4 (floor((nm)^0.9) + 1))); negative values are vacuous."""
    if not 0.0 < alpha_util <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    nm = n * m
    l = math.floor(nm ** 0.9)
    return math.log(alpha_util ** 2 * nm / (4.0 * (l + 1)))

"""Lower-bounded clustering of users in Hamming space via facility location.

Every user is a candidate facility whose opening cost is proportional to
the distance mass of its ~beta*k nearest neighbours. Facility location is
solved with best-of-N Meyerson passes; clusters are then forced up to size
k, either by closing undersized facilities (``appendix_simple``) or by the
close-then-merge procedure (``paper_merge``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_seed, rng_for
from .matrix import SparseBinaryMatrix, distances_to_row, majority_row, pairwise_hamming

STRATEGIES = ("appendix_simple", "paper_merge")
_BLOCK = 2048


class CannotAnonymize(ValueError):
    """Fewer users than the requested anonymity level."""


@dataclass(frozen=True)
class FacilityConfig:
    k: int
    beta_mult: float = 2.0
    n_runs: int = 10
    seed: int = 0
    strategy: str = "appendix_simple"
    refine: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.beta_mult > 1.0:
            raise ValueError("beta_mult must exceed 1 (alpha = 1/beta_mult < 1)")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")

    @property
    def alpha_param(self) -> float:
        return 1.0 / self.beta_mult

    @property
    def cost_multiplier(self) -> float:
        a = self.alpha_param
        return 2.0 * a / (1.0 - a)

    @property
    def neighbourhood(self) -> int:
        return max(1, math.floor(self.beta_mult * self.k))


@dataclass
class Clustering:
    assignment: np.ndarray
    centers: list
    total_cost: int
    facilities: np.ndarray = field(default=None)
    objective: float = math.nan

    @property
    def n_clusters(self) -> int:
        return len(self.centers)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_clusters)

    def members(self) -> list[np.ndarray]:
        order = np.argsort(self.assignment, kind="stable")
        bounds = np.cumsum(self.sizes())[:-1]
        return np.split(order, bounds)


def _check_size(m: SparseBinaryMatrix, k: int):
    if m.n_users == 0:
        raise ValueError("empty input")
    if m.n_users < k:
        raise CannotAnonymize(f"n={m.n_users} < k={k}")


def opening_costs(m: SparseBinaryMatrix, cfg: FacilityConfig) -> np.ndarray:
    """Opening cost of a facility at every user."""
    n = m.n_users
    nb = min(cfg.neighbourhood, n)
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, _BLOCK):
        users = np.arange(start, min(n, start + _BLOCK))
        d = pairwise_hamming(m, users)
        if nb < n:
            d = np.partition(d, nb - 1, axis=1)[:, :nb]
        out[users] = d.sum(axis=1)
    return cfg.cost_multiplier * out


def opening_cost(i: int, m: SparseBinaryMatrix, cfg: FacilityConfig) -> float:
    d = distances_to_row(m, m.row(i))
    nb = min(cfg.neighbourhood, m.n_users)
    return cfg.cost_multiplier * float(np.sort(d)[:nb].sum())


def meyerson_run(m: SparseBinaryMatrix, costs, order, seed: int) -> Clustering:
    """One online pass of Meyerson's facility location algorithm.

    Points arrive in ``order``; a point at distance d from the nearest open
    facility opens a new one with probability min(1, d / cost). Returned
    assignment is the one made at arrival time.
    """
    n = m.n_users
    if n == 0:
        raise ValueError("empty input")
    costs = np.asarray(costs, dtype=np.float64)
    if np.any(costs < 0):
        raise ValueError("costs must be non-negative")
    rng = np.random.default_rng(seed)
    csr = m.to_csr()
    nearest = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    nearest_fac = np.full(n, -1, dtype=np.int64)
    assignment = np.empty(n, dtype=np.int64)
    assigned_dist = np.zeros(n, dtype=np.int64)
    facilities: list[int] = []
    opened_cost = 0.0
    coins = rng.random(n)
    for step, u in enumerate(np.asarray(order)):
        d = nearest[u]
        if nearest_fac[u] < 0:
            open_it = True
        elif d == 0:
            open_it = False
        elif costs[u] == 0:
            open_it = True
        else:
            open_it = coins[step] < d / costs[u]
        if open_it:
            c = len(facilities)
            facilities.append(int(u))
            opened_cost += costs[u]
            dist = distances_to_row(m, m.row(u), csr)
            better = dist < nearest
            nearest[better] = dist[better]
            nearest_fac[better] = c
            assignment[u] = c
        else:
            assignment[u] = nearest_fac[u]
            assigned_dist[u] = d
    facilities = np.asarray(facilities, dtype=np.int64)
    total = int(assigned_dist.sum())
    return Clustering(assignment, [m.row(f) for f in facilities], total, facilities, opened_cost + total)


def _nearest_facility(m: SparseBinaryMatrix, users, facilities) -> tuple[np.ndarray, np.ndarray]:
    """Index into ``facilities`` of each user's nearest one (ties: lowest index)."""
    users = np.asarray(users, dtype=np.int64)
    idx = np.empty(len(users), dtype=np.int64)
    dist = np.empty(len(users), dtype=np.int64)
    for start in range(0, len(users), _BLOCK):
        d = pairwise_hamming(m, users[start:start + _BLOCK], facilities)
        j = d.argmin(axis=1)
        idx[start:start + _BLOCK] = j
        dist[start:start + _BLOCK] = d[np.arange(len(j)), j]
    return idx, dist


def reassign_to_nearest(c: Clustering, m: SparseBinaryMatrix) -> Clustering:
    """Cleanup pass: every user moves to its nearest open facility."""
    idx, dist = _nearest_facility(m, np.arange(m.n_users), c.facilities)
    used = np.unique(idx)
    relabel = np.full(len(c.facilities), -1, dtype=np.int64)
    relabel[used] = np.arange(len(used))
    fac = c.facilities[used]
    return Clustering(relabel[idx], [m.row(f) for f in fac], int(dist.sum()), fac, c.objective)


def solve_facility_location(m: SparseBinaryMatrix, cfg: FacilityConfig, costs=None) -> Clustering:
    """Best of ``cfg.n_runs`` Meyerson passes over seeded random orders, then cleanup."""
    n = m.n_users
    if n == 0:
        raise ValueError("empty input")
    if costs is None:
        costs = opening_costs(m, cfg)
    best = None
    for r in range(cfg.n_runs):
        order = rng_for(cfg.seed, r).permutation(n)
        run = meyerson_run(m, costs, order, derive_seed(cfg.seed, r))
        if best is None or run.objective < best.objective:
            best = run
    return reassign_to_nearest(best, m)


def finalize(assignment, m: SparseBinaryMatrix, facilities=None) -> Clustering:
    """Compact cluster ids (by first appearance order of old ids) and set majority centers."""
    assignment = np.asarray(assignment, dtype=np.int64)
    old = np.unique(assignment)
    remap = {int(o): i for i, o in enumerate(old)}
    new = np.array([remap[int(a)] for a in assignment], dtype=np.int64)
    order = np.argsort(new, kind="stable")
    groups = np.split(order, np.cumsum(np.bincount(new, minlength=len(old)))[:-1])
    centers = [majority_row(m, g) for g in groups]
    cost = 0
    for g, center in zip(groups, centers):
        cost += int(distances_to_row(m.take_rows(g), center).sum())
    fac = None
    if facilities is not None:
        fac = np.asarray([facilities[int(o)] for o in old], dtype=np.int64)
    return Clustering(new, centers, cost, fac)


def _labels_and_facilities(c: Clustering) -> tuple[np.ndarray, dict[int, int]]:
    return c.assignment.copy(), {i: int(f) for i, f in enumerate(c.facilities)}


def _close(labels: np.ndarray, fac: dict[int, int], victim: int, m: SparseBinaryMatrix):
    members = np.flatnonzero(labels == victim)
    del fac[victim]
    ids = sorted(fac)
    idx, _ = _nearest_facility(m, members, [fac[i] for i in ids])
    labels[members] = np.asarray(ids)[idx]


def enforce_min_size_simple(c: Clustering, m: SparseBinaryMatrix, k: int) -> Clustering:
    """Close undersized clusters (smallest first, then lowest id) until all have >= k members."""
    _check_size(m, k)
    labels, fac = _labels_and_facilities(c)
    while len(fac) > 1:
        sizes = {i: int(np.count_nonzero(labels == i)) for i in fac}
        small = [i for i in sorted(fac) if sizes[i] < k]
        if not small:
            break
        victim = min(small, key=lambda i: (sizes[i], i))
        _close(labels, fac, victim, m)
    return finalize(labels, m, c.facilities)


def enforce_min_size_paper(c: Clustering, m: SparseBinaryMatrix, k: int, cfg: FacilityConfig) -> Clustering:
    """Close clusters below alpha*k, then merge clusters below k up to at most 2k.

    When one undersized cluster is left and its nearest neighbour is too big
    to absorb it within 2k, the neighbour's members closest to the small
    cluster's center are moved over until the small cluster reaches k.
    """
    _check_size(m, k)
    labels, fac = _labels_and_facilities(c)
    floor = cfg.alpha_param * k

    while len(fac) > 1:
        sizes = {i: int(np.count_nonzero(labels == i)) for i in fac}
        tiny = [i for i in sorted(fac) if sizes[i] < floor]
        if not tiny:
            break
        _close(labels, fac, min(tiny, key=lambda i: (sizes[i], i)), m)

    while len(fac) > 1:
        sizes = {i: int(np.count_nonzero(labels == i)) for i in fac}
        small = [i for i in sorted(fac) if sizes[i] < k]
        if not small:
            break
        c_id = min(small, key=lambda i: (sizes[i], i))
        others_small = [i for i in small if i != c_id]
        pool = others_small if others_small else [i for i in sorted(fac) if i != c_id]
        d = pairwise_hamming(m, [fac[c_id]], [fac[i] for i in pool])[0]
        partner = pool[int(d.argmin())]
        if others_small or sizes[partner] + sizes[c_id] <= 2 * k:
            labels[labels == c_id] = partner
            del fac[c_id]
        else:
            need = k - sizes[c_id]
            donors = np.flatnonzero(labels == partner)
            dd = distances_to_row(m.take_rows(donors), m.row(fac[c_id]))
            moved = donors[np.lexsort((donors, dd))[:need]]
            labels[moved] = c_id
    return finalize(labels, m, c.facilities)


def enforce_min_size(c: Clustering, m: SparseBinaryMatrix, cfg: FacilityConfig) -> Clustering:
    if cfg.strategy == "paper_merge":
        return enforce_min_size_paper(c, m, cfg.k, cfg)
    return enforce_min_size_simple(c, m, cfg.k)


def _score(counts: np.ndarray, size, mode: str):
    """(intersection, union) contributed by a cluster under the given rounding.

    Broadcasts over leading axes of ``counts`` with ``size`` aligned to them.
    """
    size = np.asarray(size)[..., None]
    if mode == "smooth":
        keep = 2 * counts >= size
        inter = np.where(keep, counts, 0).sum(axis=-1)
        union = counts.sum(axis=-1) + np.where(keep & (counts > 0), size - counts, 0).sum(axis=-1)
    else:
        keep = (counts == size) & (counts > 0)
        inter = np.where(keep, counts, 0).sum(axis=-1)
        union = counts.sum(axis=-1)
    return inter, union


def _best_split(x, k: int, mode: str, max_candidates: int):
    """Best balanced holder/non-holder split of one cluster.

    ``x`` is the cluster's members x used-features 0/1 matrix. Returns
    (gain_inter, gain_union, side_mask) for the candidate with the highest
    resulting ratio, or None.
    """
    s = x.shape[0]
    counts = x.sum(axis=0)
    base_i, base_u = _score(counts, s, mode)
    order = np.lexsort((np.arange(len(counts)), np.abs(2 * counts - s)))[:max_candidates]
    best = None
    for j in order:
        holders = x[:, j] > 0
        hmaj = x[holders].sum(axis=0) * 2 >= max(1, holders.sum())
        dist = np.abs(x - hmaj).sum(axis=1)
        # holders first, each side by closeness to the holders' majority row
        rank = np.lexsort((np.arange(s), dist, ~holders))
        cut = int(np.clip(holders.sum(), k, s - k))
        side = np.zeros(s, dtype=bool)
        side[rank[:cut]] = True
        ca, cb = x[side].sum(axis=0), x[~side].sum(axis=0)
        ia, ua = _score(ca, cut, mode)
        ib, ub = _score(cb, s - cut, mode)
        cand = (int(ia + ib - base_i), int(ua + ub - base_u), side)
        if best is None or (cand[0], -cand[1]) > (best[0], -best[1]):
            best = cand
    return best


def refine_by_splitting(c: Clustering, m: SparseBinaryMatrix, k: int, mode: str = "smooth",
                        max_candidates: int = 32) -> Clustering:
    """Split clusters of size >= 2k in two (both >= k) while global Jaccard improves.

    Candidate splits separate holders from non-holders of a feature held by
    about half the cluster, padded or trimmed to respect the size floor.
    """
    groups = [g for g in c.members()]
    csr = m.to_csr()
    tot_i = tot_u = 0
    for g in groups:
        counts = np.asarray(csr[g].sum(axis=0)).ravel()
        i, u = _score(counts, len(g), mode)
        tot_i += int(i)
        tot_u += int(u)
    queue = [i for i, g in enumerate(groups) if len(g) >= 2 * k]
    while queue:
        gi = queue.pop(0)
        g = groups[gi]
        sub = csr[g]
        used = np.unique(sub.indices)
        if len(used) == 0:
            continue
        x = sub[:, used].toarray().astype(np.int64)
        best = _best_split(x, k, mode, max_candidates)
        if best is None:
            continue
        di, du, side = best
        new_i, new_u = tot_i + di, tot_u + du
        # accept only strict improvement of I/U (cross-multiplied, exact ints)
        if tot_u == 0 or new_u == 0 or new_i * tot_u <= tot_i * new_u:
            continue
        tot_i, tot_u = new_i, new_u
        groups[gi] = g[side]
        groups.append(g[~side])
        for idx in (gi, len(groups) - 1):
            if len(groups[idx]) >= 2 * k:
                queue.append(idx)
    labels = np.empty(m.n_users, dtype=np.int64)
    for i, g in enumerate(groups):
        labels[g] = i
    return finalize(labels, m)


def lower_bounded_clustering(m: SparseBinaryMatrix, cfg: FacilityConfig, mode: str = "smooth") -> Clustering:
    _check_size(m, cfg.k)
    c = enforce_min_size(solve_facility_location(m, cfg), m, cfg)
    if cfg.refine:
        c = refine_by_splitting(c, m, cfg.k, mode)
    return c

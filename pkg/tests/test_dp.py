import math

import numpy as np
import pytest

from conftest import as_set, random_matrix
from kanon.dp import (BoundNotApplicable, DpParams, _absent_cells, edge_dp_flip_p, hardness_epsilon_lower_bound,
                      jaccard_upper_bound, min_epsilon_for_jaccard, node_dp_flip_p, randomized_response)
from kanon.matrix import SparseBinaryMatrix, diff_stats, jaccard


def test_flip_probabilities():
    assert edge_dp_flip_p(0) == 1.0
    assert edge_dp_flip_p(math.log(3)) == pytest.approx(0.5, rel=1e-12)
    assert edge_dp_flip_p(800) == pytest.approx(0.0, abs=1e-300)
    assert node_dp_flip_p(10, 100) == pytest.approx(0.950042, abs=1e-6)
    for eps in (0.1, 1.0, 5.0, 30.0):
        assert node_dp_flip_p(eps, 1) == edge_dp_flip_p(eps)
        assert node_dp_flip_p(eps, 7) == edge_dp_flip_p(eps / 7)
    # grows toward 1 with the number of features
    ps = [node_dp_flip_p(5.0, m) for m in (1, 10, 100, 1000)]
    assert ps == sorted(ps) and 1 - ps[-1] < 0.003
    with pytest.raises(ValueError):
        edge_dp_flip_p(-1)
    with pytest.raises(ValueError):
        node_dp_flip_p(1, 0)


def test_params():
    assert DpParams(math.log(3)).flip_p == pytest.approx(0.5)
    assert DpParams(10, "node", 100).flip_p == pytest.approx(node_dp_flip_p(10, 100))
    with pytest.raises(ValueError):
        DpParams(1, "node")
    with pytest.raises(ValueError):
        DpParams(1, "vertex")


def test_absent_rank_mapping_brute_force():
    present = np.array([0, 3, 4, 9])
    absent = [c for c in range(12) if c not in set(present)]
    got = _absent_cells(present, np.arange(len(absent)))
    assert list(got) == absent


def test_identity_at_zero_flip(rng):
    m = random_matrix(rng, 30, 40, 0.2)
    out = randomized_response(m, DpParams(800.0, seed=4))
    assert out == m


def test_full_noise_on_empty_matrix():
    m = SparseBinaryMatrix.from_rows([[]] * 200, 200)
    out = randomized_response(m, DpParams(0.0, seed=11))
    sd = math.sqrt(40000 * 0.25)
    assert abs(out.nnz - 20000) < 4 * sd


def test_deterministic_and_non_degenerate(rng):
    m = random_matrix(rng, 50, 50, 0.1)
    a = randomized_response(m, DpParams(1.0, seed=1))
    assert a == randomized_response(m, DpParams(1.0, seed=1))
    assert a != randomized_response(m, DpParams(1.0, seed=2))


def test_survival_and_creation_rates(rng):
    m = random_matrix(rng, 100, 100, 0.1)
    params = DpParams(1.0)
    p = params.flip_p
    orig = as_set(m)
    kept = created = 0
    trials = 50
    for s in range(trials):
        out = as_set(randomized_response(m, DpParams(1.0, seed=s)))
        kept += len(out & orig)
        created += len(out - orig)
    n_e, n_a = trials * len(orig), trials * (10000 - len(orig))
    assert abs(kept / n_e - (1 - p / 2)) < 4 * math.sqrt((p / 2) * (1 - p / 2) / n_e)
    assert abs(created / n_a - p / 2) < 4 * math.sqrt((p / 2) * (1 - p / 2) / n_a)


def test_jaccard_tends_to_one(rng):
    m = random_matrix(rng, 40, 40, 0.1)
    js = [jaccard(diff_stats(m, randomized_response(m, DpParams(e, seed=3)))) for e in (0.5, 3, 8, 30)]
    assert js[-1] == 1.0
    assert js == sorted(js)


def test_large_sparse_input_is_fast():
    m = SparseBinaryMatrix.from_rows([[u % 997, (7 * u) % 997 + 1000] for u in range(2000)], 10 ** 6)
    out = randomized_response(m, DpParams(10.0, seed=0))
    # expected created ~ 2e9 * 2/(1+e^10) / 2 ~ 9e4
    assert out.nnz < 2e5


def test_upper_bound_forms():
    c = math.sqrt(math.log(2 / 0.05) / 2 / 1e6)
    assert jaccard_upper_bound(800, 0.3, 1e6, 0.05, check=False) == pytest.approx(1 + 2 * c)
    eps = 2.0
    a = 1 / (math.exp(eps) + 1)
    assert jaccard_upper_bound(eps, 1.0, 1e6, 0.05) == pytest.approx(1 - a + 2 * c)


def test_upper_bound_paper_density_crossing():
    lo = jaccard_upper_bound(9, 1e-4, 1e10, 0.01, check=False)
    hi = jaccard_upper_bound(10, 1e-4, 1e10, 0.01, check=False)
    assert lo == pytest.approx(0.44764, abs=1e-4)
    assert hi == pytest.approx(0.68779, abs=1e-4)
    assert lo < 0.5 < hi


def test_upper_bound_applicability():
    with pytest.raises(BoundNotApplicable):
        jaccard_upper_bound(20, 0.1, 1e4, 0.05)
    with pytest.raises(ValueError):
        jaccard_upper_bound(1, 0.0, 1e4, 0.05)
    with pytest.raises(ValueError):
        jaccard_upper_bound(1, 0.1, 1e4, 1.0)


def test_min_epsilon():
    e = min_epsilon_for_jaccard(0.5, 1e-4, 1e10, 0.01)
    assert 9 < e < 10
    # independent check: bound straddles the target around the returned value
    assert jaccard_upper_bound(e, 1e-4, 1e10, 0.01, check=False) >= 0.5
    assert jaccard_upper_bound(e - 2e-4, 1e-4, 1e10, 0.01, check=False) < 0.5
    # dense data with a target just above the additive slack needs almost nothing
    slack = 2 * math.sqrt(math.log(2 / 0.01) / 2 / 1e10)
    assert min_epsilon_for_jaccard(0.5 + slack, 1.0, 1e10, 0.01) < 1e-3
    with pytest.raises(ValueError):
        min_epsilon_for_jaccard(1.0, 0.1, 1e6, 0.1)


def test_min_epsilon_unreachable():
    # the additive slack alone pushes the bound above any target < 1 here, so
    # use a target above what the bound can reach at eps=100 with tiny Q
    assert min_epsilon_for_jaccard(0.999, 1e-60, 1e300, 0.5) == math.inf


def test_min_epsilon_monotone_in_density():
    eps = [min_epsilon_for_jaccard(0.5, lam, 1e10, 0.01) for lam in (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)]
    assert all(a >= b for a, b in zip(eps, eps[1:]))


def test_hardness_bound():
    assert hardness_epsilon_lower_bound(1.0, 10 ** 5, 10 ** 5) == pytest.approx(math.log(1e10 / (4 * (1e9 + 1))))
    assert hardness_epsilon_lower_bound(1.0, 10 ** 5, 10 ** 5) == pytest.approx(0.9163, abs=1e-4)
    assert hardness_epsilon_lower_bound(1e-12, 100, 100) < -40
    # grows like log(nm): each factor 10^10 adds ~ 0.1 * ln(10^10)
    a = hardness_epsilon_lower_bound(1.0, 10 ** 10, 10 ** 10)
    b = hardness_epsilon_lower_bound(1.0, 10 ** 15, 10 ** 15)
    assert b - a == pytest.approx(0.1 * math.log(1e10), rel=1e-6)
    with pytest.raises(ValueError):
        hardness_epsilon_lower_bound(0.0, 10, 10)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import as_set, matrices, random_matrix
from kanon.anonymizer import (anonymize, smooth_round, smooth_round_with_given_clusters, suppress_round)
from kanon.clustering import CannotAnonymize, FacilityConfig, lower_bounded_clustering
from kanon.matrix import (SparseBinaryMatrix, diff_stats, jaccard, verify_k_anonymous,
                          verify_smooth_k_anonymous)
from kanon.sbm import SbmParams, sbm_generate


def M(rows, m):
    return SparseBinaryMatrix.from_rows(rows, m)


def test_smooth_round_examples():
    same = M([[1, 2]] * 3, 4)
    assert smooth_round(same, [[0, 1, 2]]) == same
    fig = M([[0, 1], [0], [0, 2], [0]], 3)
    assert smooth_round(fig, [[0, 1, 2, 3]]) == M([[0]] * 4, 3)
    tie = M([[0], [1]], 2)
    assert smooth_round(tie, [[0, 1]]) == M([[0, 1], [0, 1]], 2)
    with pytest.raises(ValueError):
        smooth_round(tie, [[0]])


def test_suppress_round_examples():
    same = M([[1, 2]] * 3, 4)
    assert suppress_round(same, [[0, 1, 2]]) == same
    m = M([[0, 1], [1, 2]], 3)
    assert suppress_round(m, [[0, 1]]) == M([[1], [1]], 3)


@settings(max_examples=100)
@given(matrices(max_users=9, max_features=6), st.data())
def test_suppress_never_creates(m, data):
    labels = data.draw(st.lists(st.integers(0, 2), min_size=m.n_users, max_size=m.n_users))
    groups = [np.flatnonzero(np.array(labels) == g) for g in range(3)]
    groups = [g for g in groups if len(g)]
    out = suppress_round(m, groups)
    assert as_set(out) <= as_set(m)
    assert diff_stats(m, out).created == 0


@settings(max_examples=100)
@given(matrices(max_users=8, max_features=5), st.data())
def test_majority_rounding_locally_optimal(m, data):
    labels = np.array(data.draw(st.lists(st.integers(0, 2), min_size=m.n_users, max_size=m.n_users)))
    groups = [np.flatnonzero(labels == g) for g in range(3) if np.any(labels == g)]
    out = smooth_round(m, groups)
    base = diff_stats(m, out).symmetric_difference
    rows = [set(out.row(u).tolist()) for u in range(m.n_users)]
    for g in groups:
        for f in range(m.n_features):
            flipped = [set(r) for r in rows]
            for u in g:
                flipped[u] ^= {f}
            alt = M([sorted(r) for r in flipped], m.n_features)
            assert diff_stats(m, alt).symmetric_difference >= base


def test_given_clusters_validation():
    m = M([[0], [1], [0]], 2)
    with pytest.raises(ValueError):
        smooth_round_with_given_clusters(m, [[0, 1]])
    with pytest.raises(ValueError):
        smooth_round_with_given_clusters(m, [[0, 1], [1, 2]])


def test_given_clusters_complete_blocks():
    p = SbmParams(4, 8, 1.0, 0.0, seed=1)
    m = sbm_generate(p)
    assert smooth_round_with_given_clusters(m, p.blocks()) == m


def _binomial_pmf(s, q):
    return [math.comb(s, c) * q ** c * (1 - q) ** (s - c) for c in range(s + 1)]


def expected_block_jaccard(p: SbmParams) -> float:
    """Ratio of expected intersection to expected union under ground-truth blocks.

    Per (block, feature) the holder count is Binomial(s, q) in-block and
    Binomial(s, p) otherwise; features with 2c >= s are kept for all s users.
    """
    s, r = p.s, p.r
    inter = union = 0.0
    for prob, mult in ((p.q, 1), (p.p, r - 1)):
        for c, w in enumerate(_binomial_pmf(s, prob)):
            kept = 2 * c >= s
            inter += mult * w * (c if kept else 0)
            union += mult * w * (s if kept else c)
    return inter / union


def test_expected_jaccard_formula_matches_paper_accounting():
    # no ties possible to matter at s=64, q=0.8, p=0.01: equals 51.2 / 73.6
    assert expected_block_jaccard(SbmParams(16, 64, 0.8, 0.01)) == pytest.approx(51.2 / 73.6, abs=2e-3)


def test_tie_aware_expectation_at_half():
    p = SbmParams(8, 4, 0.5, 0.0)
    want = expected_block_jaccard(p)
    got = []
    for seed in range(300):
        pp = SbmParams(8, 4, 0.5, 0.0, seed=seed)
        m = sbm_generate(pp)
        out = smooth_round_with_given_clusters(m, pp.blocks())
        st_ = diff_stats(m, out)
        got.append((st_.intersection, st_.union_))
    i, u = np.mean(got, axis=0)
    assert i / u == pytest.approx(want, abs=0.02)


def test_anonymize_k1_identity(rng):
    m = random_matrix(rng, 20, 10, 0.3)
    for mode in ("smooth", "suppress"):
        rep = anonymize(m, 1, mode)
        assert rep.output == m and rep.jaccard == 1.0 and rep.verified


def test_anonymize_errors(rng):
    m = random_matrix(rng, 3, 4, 0.5)
    with pytest.raises(CannotAnonymize):
        anonymize(m, 4)
    with pytest.raises(ValueError):
        anonymize(m, 2, mode="other")


@settings(max_examples=60, deadline=None)
@given(matrices(max_users=12, max_features=8), st.integers(1, 4), st.sampled_from(["smooth", "suppress"]),
       st.sampled_from(["appendix_simple", "paper_merge"]), st.booleans())
def test_outputs_always_valid(m, k, mode, strategy, refine):
    if m.n_users < k:
        return
    rep = anonymize(m, k, mode, FacilityConfig(k, seed=1, strategy=strategy, refine=refine))
    assert rep.verified
    assert verify_k_anonymous(rep.output, k)
    if mode == "smooth":
        assert verify_smooth_k_anonymous(rep.output, m, k)
    else:
        assert rep.created_frac == 0


def test_report_fields(rng):
    m = random_matrix(rng, 30, 12, 0.3)
    rep = anonymize(m, 3, "smooth", FacilityConfig(3, seed=2))
    st_ = diff_stats(m, rep.output)
    assert rep.jaccard == jaccard(st_)
    assert rep.suppressed_frac == st_.removed / m.nnz
    assert rep.created_frac == st_.created / m.nnz
    assert rep.wall_time >= 0 and rep.cluster_count >= 1


def test_smooth_dominates_suppress_on_same_clustering():
    wins = 0
    trials = 40
    for seed in range(trials):
        p = SbmParams(4, 16, 0.7, 0.05, seed=seed)
        m = sbm_generate(p)
        c = lower_bounded_clustering(m, FacilityConfig(4, seed=seed))
        js = jaccard(diff_stats(m, smooth_round(m, c)))
        jp = jaccard(diff_stats(m, suppress_round(m, c)))
        wins += js >= jp
    assert wins >= 0.95 * trials

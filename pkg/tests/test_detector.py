import logging
import math

import numpy as np
import pytest

from ccp import detector, esn
from ccp.detector import (
    ChangePointProposal,
    SimilaritySeries,
    StatisticSeries,
    aggregate,
    cosine_similarity,
    featurize_similarities,
    ks_distance,
    propose,
    q_weight,
    statistic_series,
)
from ccp.errors import InputError
from ccp.rand import derived_seed
from ccp.series import MultiSeries


def _sims(values, t0=10):
    values = np.asarray(values, dtype=np.float64)
    return SimilaritySeries(values, t0, t0 + values.size)


def _small_ensemble(y, t_wash, t_train, n=8, size=3, seed=5):
    d = y.dim
    cfg = esn.ScalingConfig(c_input=1.0, c_bias=0.3, rho=0.8)
    out = []
    for r in range(size):
        w = esn.init_weights(derived_seed(seed, r), n, d, cfg)
        states = esn.propagate(w, y, t_end=t_wash + t_train).states
        c = esn.compute_conceptor(states[t_wash:], alpha=float(n))
        out.append((w, c))
    return out


# --------------------------------------------------------------------------
# cosine_similarity


def test_cosine_identity_conceptor_scores_one():
    h = np.array([0.3, -0.7, 1.1])
    assert cosine_similarity(np.eye(3), h) == pytest.approx(1.0, abs=1e-12)


def test_cosine_matches_formula():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = rng.standard_normal((4, 4))
        c = a @ a.T
        c /= np.linalg.eigvalsh(c).max() + 1.0  # spectrum inside [0, 1)
        h = rng.standard_normal(4)
        ch = c @ h
        want = (ch @ h) / (np.linalg.norm(ch) * np.linalg.norm(h))
        assert cosine_similarity(c, h) == pytest.approx(want, abs=1e-12)


def test_cosine_degenerate_state_scores_zero(caplog):
    c = np.diag([1.0, 0.0])
    h = np.array([0.0, 1.0])  # C h = 0
    with caplog.at_level(logging.WARNING, logger="ccp.detector"):
        assert cosine_similarity(c, h) == 0.0
    assert any("degenerate" in r.message for r in caplog.records)
    assert cosine_similarity(c, np.zeros(2)) == 0.0


def test_cosine_accepts_conceptor_objects_and_stays_in_unit_interval():
    rng = np.random.default_rng(4)
    for _ in range(200):
        states = rng.standard_normal((rng.integers(3, 30), 5))
        c = esn.compute_conceptor(states, alpha=10.0 ** float(rng.integers(-1, 3)))
        s = cosine_similarity(c, rng.standard_normal(5))
        assert 0.0 <= s <= 1.0


# --------------------------------------------------------------------------
# featurize_similarities


def test_featurize_identity_conceptors_score_one():
    rng = np.random.default_rng(6)
    y = MultiSeries(rng.standard_normal((40, 2)))
    ens = [(w, esn.Conceptor(np.eye(8), 1.0)) for w, _ in _small_ensemble(y, 5, 10)]
    sims = featurize_similarities(y, ens, t_wash=5, t_train=10)
    assert sims.shape == (3, 25)
    assert np.allclose(sims, 1.0, rtol=0.0, atol=1e-12)
    assert sims.max() <= 1.0


def test_featurize_matches_single_network_replay():
    # Walk each network separately with 1-D linear algebra; the stacked
    # driver must agree up to BLAS summation-order noise.
    rng = np.random.default_rng(7)
    y = MultiSeries(rng.standard_normal((30, 2)))
    t_wash, t_train = 5, 10
    t0 = t_wash + t_train
    ens = _small_ensemble(y, t_wash, t_train)
    got = featurize_similarities(y, ens, t_wash=t_wash, t_train=t_train)
    vals = y.values
    for r, (w, co) in enumerate(ens):
        h = np.zeros(w.n)
        for t in range(1, t_wash + 1):
            h = np.tanh(w.w_h @ h + w.w_i @ vals[t - 1] + w.b)
        feedback = h
        want = []
        for t in range(t_wash + 1, len(vals) + 1):
            h = np.tanh(w.w_h @ feedback + w.w_i @ vals[t - 1] + w.b)
            feedback = co.c @ h
            if t > t0:
                s = (feedback @ h) / (np.linalg.norm(feedback) * np.linalg.norm(h))
                want.append(min(max(s, 0.0), 1.0))
        assert np.allclose(got[r], np.array(want), rtol=1e-10, atol=1e-12)


def test_featurize_is_deterministic():
    rng = np.random.default_rng(8)
    y = MultiSeries(rng.standard_normal((35, 2)))
    ens = _small_ensemble(y, 4, 8)
    a = featurize_similarities(y, ens, t_wash=4, t_train=8)
    b = featurize_similarities(y, ens, t_wash=4, t_train=8)
    assert np.array_equal(a, b)


def test_featurize_rejects_bad_windows():
    y = MultiSeries(np.zeros((20, 2)))
    ens = _small_ensemble(MultiSeries(np.ones((20, 2))), 3, 6)
    with pytest.raises(InputError):
        featurize_similarities(y, [], t_wash=3, t_train=6)
    with pytest.raises(InputError):
        featurize_similarities(y, ens, t_wash=10, t_train=10)
    with pytest.raises(InputError):
        featurize_similarities(y, ens, t_wash=-1, t_train=6)


# --------------------------------------------------------------------------
# aggregate / containers


def test_aggregate_averages_over_networks():
    sims = np.array([[0.25, 0.5, 0.75], [0.75, 1.0, 0.25]])
    agg = aggregate(sims, t0=100)
    assert agg.t0 == 100 and agg.t_end == 103
    assert np.array_equal(agg.values, np.array([0.5, 0.75, 0.5]))


def test_similarity_series_validates():
    with pytest.raises(InputError):
        SimilaritySeries(np.array([0.5, 1.5]), 0, 2)
    with pytest.raises(InputError):
        SimilaritySeries(np.array([0.5, 0.5]), 0, 3)
    with pytest.raises(InputError):
        aggregate(np.zeros(3), t0=0)


def test_statistic_series_validates_length():
    with pytest.raises(InputError):
        StatisticSeries(np.zeros(3), 0, 3, nu=0.5, kappa=0.01)


# --------------------------------------------------------------------------
# ks_distance


def test_ks_distance_hand_cases():
    assert ks_distance([1.0, 2.0, 3.0], [2.0, 3.0, 4.0]) == pytest.approx(1 / 3, abs=1e-15)
    assert ks_distance([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert ks_distance([0.0, 0.1], [5.0, 6.0, 7.0]) == 1.0
    with pytest.raises(InputError):
        ks_distance([], [1.0])


def _ks_brute(left, right):
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    best = 0.0
    for s in np.concatenate([left, right]):
        fl = np.count_nonzero(left <= s) / left.size
        fr = np.count_nonzero(right <= s) / right.size
        best = max(best, abs(fl - fr))
    return best


def test_ks_distance_equals_brute_force_exactly():
    # Ties included on purpose: a coarse value grid forces repeats.
    rng = np.random.default_rng(9)
    for _ in range(200):
        nl, nr = rng.integers(1, 50, size=2)
        left = rng.integers(0, 8, size=nl) / 8.0
        right = rng.integers(0, 8, size=nr) / 8.0
        assert ks_distance(left, right) == _ks_brute(left, right)


# --------------------------------------------------------------------------
# q_weight / statistic_series


def test_q_weight_examples():
    assert q_weight(500, 0, 1000) == pytest.approx(0.5, abs=1e-15)
    assert q_weight(181, 180, 999) == pytest.approx(math.sqrt(818) / 819, rel=1e-12)
    # far edge of a long window drops below the floor
    assert q_weight(1, 0, 100_000) == 0.01
    with pytest.raises(InputError):
        q_weight(180, 180, 999)
    with pytest.raises(InputError):
        q_weight(999, 180, 999)
    with pytest.raises(InputError):
        q_weight(500, 0, 1000, kappa=0.0)


def test_statistic_constant_series_is_zero():
    stat = statistic_series(_sims(np.full(40, 0.7)))
    assert stat.values.shape == (39,)
    assert np.array_equal(stat.values, np.zeros(39))


def test_statistic_matches_per_split_recomputation_exactly():
    # The joint sweep must reproduce each split's ECDF distance bit for
    # bit; the weight factor is then applied identically to both sides.
    rng = np.random.default_rng(10)
    for _ in range(25):
        m = int(rng.integers(2, 60))
        values = rng.integers(0, 10, size=m) / 16.0
        dist = detector._all_split_distances(values)
        assert np.array_equal(dist, [ks_distance(values[:i], values[i:]) for i in range(1, m)])
        i = np.arange(1, m, dtype=np.float64)
        u = i / m
        q = np.maximum((u * (1.0 - u)) ** 0.5, 0.01)
        want = i * (m - i) / (q * float(m) ** 2.0) * dist
        assert np.array_equal(statistic_series(_sims(values)).values, want)


def test_statistic_bounded_by_quarter_over_kappa():
    rng = np.random.default_rng(11)
    for _ in range(50):
        values = rng.random(int(rng.integers(2, 200)))
        stat = statistic_series(_sims(values))
        assert stat.values.max() <= 1.0 / (4 * 0.01) + 1e-12


def test_statistic_reversal_symmetry():
    rng = np.random.default_rng(12)
    for _ in range(20):
        values = rng.random(int(rng.integers(2, 80)))
        fwd = statistic_series(_sims(values)).values
        rev = statistic_series(_sims(values[::-1])).values
        assert np.allclose(rev, fwd[::-1], rtol=1e-12, atol=0.0)


def test_statistic_invariant_under_strictly_increasing_transform():
    rng = np.random.default_rng(13)
    values = rng.integers(0, 65, size=50) / 64.0
    cubed = values * values * values  # exact for this grid, order preserved
    a = statistic_series(_sims(values)).values
    b = statistic_series(_sims(cubed)).values
    assert np.array_equal(a, b)


def test_statistic_rejects_degenerate_windows():
    with pytest.raises(InputError):
        statistic_series(_sims(np.array([0.5])))
    with pytest.raises(InputError):
        statistic_series(_sims(np.full(10, 0.5)), kappa=0.0)


# --------------------------------------------------------------------------
# propose


def test_propose_finds_distribution_step():
    # Clean level shift in the middle: both the distance and the weight
    # peak at the true split.
    values = np.concatenate([np.full(20, 0.9), np.full(20, 0.2)])
    prop = propose(_sims(values, t0=200))
    assert isinstance(prop, ChangePointProposal)
    assert prop.tau_hat == 220
    assert prop.k == prop.statistic.values.max()
    assert prop.statistic.values[prop.tau_hat - 201] == prop.k


def test_propose_matches_brute_force_argmax():
    rng = np.random.default_rng(14)
    for _ in range(20):
        m = int(rng.integers(4, 120))
        values = rng.integers(0, 6, size=m) / 8.0
        sims = _sims(values, t0=int(rng.integers(0, 500)))
        prop = propose(sims)
        stat = statistic_series(sims)
        best = int(np.argmax(stat.values))
        assert prop.tau_hat == sims.t0 + 1 + best
        assert prop.k == stat.values[best]


def test_propose_breaks_ties_toward_earliest_split():
    # A palindrome makes K_1 == K_3 exactly (same counts, same divisions);
    # the earlier split wins.
    values = np.array([0.0, 1.0, 1.0, 0.0])
    stat = statistic_series(_sims(values, t0=50))
    assert stat.values[0] == stat.values[2] > stat.values[1]
    assert propose(_sims(values, t0=50)).tau_hat == 51


def test_propose_off_center_shift_with_noise():
    rng = np.random.default_rng(15)
    values = np.clip(
        np.concatenate([0.85 + 0.02 * rng.standard_normal(70), 0.35 + 0.02 * rng.standard_normal(30)]),
        0.0,
        1.0,
    )
    assert propose(_sims(values, t0=0)).tau_hat == 70

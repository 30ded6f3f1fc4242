import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import phi_cdf
from pwscale.outliers import (
    IQR_THRESHOLD,
    iqr_scores,
    observer_loo_loglik,
    observer_preference_profile,
    outlier_scores,
)
from pwscale.scaling import ScaleOptions, scale_mle
from pwscale.simulate import SimConfig, _simulate, random_responder, run_rng


def _consensus_stack(m=5):
    # every conforming observer prefers the higher index 9 times out of 10
    one = np.zeros((3, 3), int)
    for i, j in [(1, 0), (2, 1), (2, 0)]:
        one[i, j], one[j, i] = 9, 1
    return np.stack([one] * m)


def _loglik_by_hand(own, q):
    total = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            n = own[i, j] + own[j, i]
            if n:
                p = phi_cdf((q[i] - q[j]) / 1.4826)
                total += math.log(math.comb(n, own[i, j])) + own[i, j] * math.log(p) + \
                    own[j, i] * math.log(1 - p)
    return total


def test_anti_consensus_observer_scores_lowest():
    stack = _consensus_stack()
    anti = np.where(stack[0].T == 9, 10, 0)  # always picks the loser
    full = np.concatenate([stack, anti[None]])
    L = [observer_loo_loglik(full, k) for k in range(full.shape[0])]
    assert L[-1] < min(L[:-1])
    q_rest = scale_mle(full[:-1].sum(axis=0)).jod
    assert L[-1] == pytest.approx(_loglik_by_hand(anti, q_rest), rel=1e-10)


def test_conforming_observer_near_binomial_maximum():
    stack = _consensus_stack(6)
    own = stack[0]
    best = sum(math.log(math.comb(10, 9)) + 9 * math.log(0.9) + math.log(0.1) for _ in range(3))
    L = observer_loo_loglik(stack, 0, ScaleOptions(use_prior=False))
    assert L <= best + 1e-9
    assert L > best - 1.0


def test_loo_needs_three_observers():
    with pytest.raises(ValueError):
        observer_loo_loglik(_consensus_stack(2), 0)


def test_outlier_scores_need_four_observers():
    with pytest.raises(ValueError):
        outlier_scores(_consensus_stack(3))


def test_identical_observers_all_zero():
    rep = outlier_scores(_consensus_stack(6))
    assert np.all(rep.iqr_score == 0) and not rep.flagged.any()
    assert np.ptp(rep.log_likelihood) < 1e-9


def test_iqr_score_formula():
    L = np.array([-10.0, -1.0, -2.0, -3.0, -4.0])
    scores, q1, q3 = iqr_scores(L)
    assert (q1, q3) == (-4.0, -2.0)
    np.testing.assert_allclose(scores, [3.0, 0, 0, 0, 0])


@given(st.lists(st.floats(-100, 0), min_size=4, max_size=30))
def test_iqr_scores_properties(values):
    scores, q1, q3 = iqr_scores(values)
    assert np.all(scores >= 0)
    assert np.all(scores[np.asarray(values) >= q1] == 0)


def test_random_responder_detected_most_of_the_time():
    cfg = SimConfig(observers=19, repetitions=3)
    hits = 0
    for run in range(15):
        rng = run_rng(77, run)
        stack = np.concatenate([_simulate(cfg, rng), random_responder(cfg, rng)])
        rep = outlier_scores(stack)
        hits += rep.flagged[-1] and rep.ranking()[0] == stack.shape[0] - 1
    assert hits >= 11


def test_duplicate_consensus_scores_below_anti_observer():
    cfg = SimConfig(observers=12, repetitions=3)
    rng = run_rng(3, 0)
    base = _simulate(cfg, rng)
    consensus = np.rint(base.mean(axis=0)).astype(int)
    anti = consensus.T
    a = outlier_scores(np.concatenate([base, consensus[None]]))
    b = outlier_scores(np.concatenate([base, anti[None]]))
    assert a.iqr_score[-1] <= b.iqr_score[-1]


def test_report_permutation_invariance():
    cfg = SimConfig(observers=8, repetitions=2)
    stack = _simulate(cfg, run_rng(9, 0))
    perm = np.random.default_rng(1).permutation(8)
    a = outlier_scores(stack)
    b = outlier_scores(stack[perm])
    np.testing.assert_allclose(b.log_likelihood, a.log_likelihood[perm], atol=1e-8)
    np.testing.assert_allclose(b.iqr_score, a.iqr_score[perm], atol=1e-8)


def test_profile_always_wins():
    one = np.zeros((3, 3), int)
    one[0, 1] = one[0, 2] = 3
    one[1, 2] = 3
    prof = observer_preference_profile([one, one.T, one], 0)
    assert prof.observer[0] == 1.0
    assert prof.observer[1] == pytest.approx(0.5)  # 3 wins over 2, 3 losses to 0
    assert prof.others.shape == (2, 3)


def test_profile_absent_condition():
    one = np.zeros((3, 3), int)
    one[0, 1] = 2
    prof = observer_preference_profile([one, one], 0)
    assert np.isnan(prof.observer[2])


def test_profile_population_mean_matches_pooled_on_balanced_design():
    cfg = SimConfig(observers=10, repetitions=4)
    stack = _simulate(cfg, run_rng(2, 0))
    prof = observer_preference_profile(stack, 0)
    everyone = np.vstack([prof.observer[None], prof.others])
    # every observer has the same number of comparisons per condition
    np.testing.assert_allclose(everyone.mean(axis=0), prof.pooled, atol=1e-12)

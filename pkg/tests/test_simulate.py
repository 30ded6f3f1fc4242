import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwscale.simulate import (
    Design,
    Outcome,
    SimConfig,
    TieModel,
    apply_equal_split,
    design_pairs,
    drop_unanimous_pairs,
    effect_size,
    random_responder,
    rmse,
    run_monte_carlo,
    simulate_experiment,
    simulate_trial,
)


def test_design_pair_counts():
    assert len(design_pairs(5, Design.COMPLETE)) == 10
    assert design_pairs(5, "chain") == [(0, 1), (1, 2), (2, 3), (3, 4)]
    with pytest.raises(ValueError):
        design_pairs(1)


@pytest.mark.parametrize("gap, expected", [(1.0, 0.75), (0.0, 0.5)])
def test_trial_win_rate(gap, expected):
    # vectorized equivalent of repeated simulate_trial calls
    rng = np.random.default_rng(11)
    delta = rng.normal(gap, 1.4826, size=1_000_000)
    assert np.mean(delta > 0) == pytest.approx(expected, abs=0.002)


def test_simulate_trial_outcomes():
    rng = np.random.default_rng(0)
    outs = [simulate_trial(1.0, 0.0, 1.4826, None, rng) for _ in range(4000)]
    assert Outcome.TIE not in outs
    assert outs.count(Outcome.I_WINS) / 4000 == pytest.approx(0.75, abs=0.025)
    assert all(simulate_trial(3.0, 0.0, 1.4826, math.inf, rng) is Outcome.TIE for _ in range(50))


def test_equal_split_even_ties():
    T = np.array([[0, 2], [0, 0]])
    out = apply_equal_split(T, np.zeros((2, 2), int), np.random.default_rng(0))
    np.testing.assert_array_equal(out, [[0, 1], [1, 0]])


def test_equal_split_single_tie_goes_to_one_side():
    rng = np.random.default_rng(1)
    seen = set()
    for _ in range(50):
        out = apply_equal_split([[0, 1], [0, 0]], np.zeros((2, 2), int), rng)
        assert out.sum() == 1
        seen.add((out[0, 1], out[1, 0]))
    assert seen == {(1, 0), (0, 1)}


def test_equal_split_conserves_votes():
    rng = np.random.default_rng(2)
    C = np.array([[0, 2], [1, 0]])
    for _ in range(10_000 // 100):
        out = apply_equal_split([[0, 3], [0, 0]], C, rng)
        assert out.sum() == 6 and out[0, 1] in (3, 4)


def test_equal_split_rejects_negative():
    with pytest.raises(ValueError):
        apply_equal_split([[0, -1], [0, 0]], np.zeros((2, 2), int), np.random.default_rng(0))


def test_experiment_vote_totals():
    cfg = SimConfig(q_true=(0, 1, 2), observers=4, repetitions=3)
    stack = simulate_experiment(cfg, 0)
    assert stack.shape == (4, 3, 3)
    assert np.all(stack.sum(axis=(1, 2)) == 9)
    chain = simulate_experiment(cfg.replace(design="chain", repetitions=2), 0)
    assert np.all(chain.sum(axis=(1, 2)) == 4)
    assert np.all(chain[:, 0, 2] == 0)


def test_experiment_with_ties_conserves_votes():
    cfg = SimConfig(observers=6, repetitions=5, tie_model=TieModel())
    stack = simulate_experiment(cfg, 3)
    P = stack + stack.transpose(0, 2, 1)
    iu = np.triu_indices(5, 1)
    assert np.all(P[:, iu[0], iu[1]] == 5)


def test_law_of_large_numbers():
    cfg = SimConfig(q_true=(0, 1), observers=10_000, repetitions=1)
    pooled = simulate_experiment(cfg, 0).sum(axis=0)
    assert pooled[1, 0] / 10_000 == pytest.approx(0.75, abs=0.01)


def test_reproducible():
    cfg = SimConfig(seed=5)
    np.testing.assert_array_equal(simulate_experiment(cfg, 4), simulate_experiment(cfg, 4))
    assert not np.array_equal(simulate_experiment(cfg, 4), simulate_experiment(cfg, 5))


def test_random_responder_is_balanced():
    cfg = SimConfig(q_true=(0, 5), repetitions=1)
    out = random_responder(cfg, np.random.default_rng(0), count=20_000)
    assert out[:, 1, 0].mean() == pytest.approx(0.5, abs=0.02)


def test_drop_unanimous():
    C = np.array([[0, 3, 2], [0, 0, 1], [1, 4, 0]])
    out = drop_unanimous_pairs(C)
    np.testing.assert_array_equal(out, [[0, 0, 2], [0, 0, 1], [1, 4, 0]])


def test_rmse_values():
    q = [0, 1, 2, 3]
    assert rmse(q, q) == 0
    assert rmse([0, 1.5, 2.5, 3.5], q) == pytest.approx(0.5)
    assert rmse([0, 3, 2, 0], q) == pytest.approx(math.sqrt(13 / 3))
    assert rmse([5, 1, 2, 3], q) == 0  # anchor is excluded
    with pytest.raises(ValueError):
        rmse([0, 1], q)


def test_effect_size():
    with pytest.raises(ValueError):
        effect_size([[0, 1, 2], [0, 1, 2]])
    runs = np.array([[0, 1, 2], [0, 2, 3], [0, 0, 1]], float)
    # mean gaps (1, 1), upper-condition sd = 1 each
    assert effect_size(runs) == pytest.approx(1.0)
    runs2 = np.array([[0, 0.5, 1.5], [0, 1.5, 2.5]])
    assert effect_size(runs2) == pytest.approx(1 / math.sqrt(0.5))


@given(st.floats(0.1, 10))
def test_effect_size_scale_invariant(k):
    runs = np.random.default_rng(0).normal([0, 1, 2, 3], 0.4, size=(20, 4))
    runs[:, 0] = 0
    assert effect_size(runs * k) == pytest.approx(effect_size(runs), rel=1e-9)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(q_true=(1, 2))
    with pytest.raises(ValueError):
        SimConfig(observers=0)
    assert SimConfig(q_true=(0, 1, 2), design="chain").total_comparisons() == 10 * 3 * 2


def test_monte_carlo_small_run():
    cfg = SimConfig(runs=20, ci_runs=3, ci_bootstrap=20, seed=3)
    m = run_monte_carlo(cfg, threads=1)
    assert m.runs_ok == 20 and m.failed_runs == 0
    assert m.mean_jod[0] == 0 and m.bias[0] == 0
    assert m.run_scores.shape == (20, 5)
    assert m.ci_coverage.shape == (5,) and m.ci_coverage[0] == 1
    assert np.all(np.diff(m.mean_jod) > 0)


def test_monte_carlo_thread_independent():
    cfg = SimConfig(runs=6, ci_runs=2, ci_bootstrap=10, seed=8)
    a = run_monte_carlo(cfg, threads=1)
    b = run_monte_carlo(cfg, threads=2)
    np.testing.assert_array_equal(a.run_scores, b.run_scores)
    np.testing.assert_array_equal(a.ci_size, b.ci_size)


def test_drop_unanimous_failures_are_counted():
    cfg = SimConfig(q_true=(0, 6, 12), observers=2, repetitions=1, runs=10,
                    drop_unanimous=True, use_prior=False, ci_runs=0)
    m = run_monte_carlo(cfg, threads=1)
    assert m.failed_runs == 10 and m.runs_ok == 0

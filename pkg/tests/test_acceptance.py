"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` (or
``python tests/test_acceptance.py``). The Monte-Carlo criteria take a few
minutes in total on one core.
"""

import os
from pathlib import Path

import numpy as np
import pytest

from conftest import probit_bisect, random_counts
from pwscale.cli import main
from pwscale.outliers import outlier_scores
from pwscale.scaling import (
    JOD_SIGMA,
    ScaleOptions,
    _Posterior,
    distance_matrix,
    log_likelihood_gradient,
    prob_to_jod,
    scale_mle,
    total_log_likelihood,
)
from pwscale.simulate import SimConfig, TieModel, _simulate, random_responder, run_monte_carlo, run_rng
from pwscale.stats import difference_variance

TOY = np.array([[0, 3, 0], [27, 0, 7], [30, 23, 0]])
TOY_CSV = Path(__file__).resolve().parents[1] / "data" / "toy_three_conditions.csv"
NO_PRIOR = ScaleOptions(use_prior=False)


@pytest.fixture
def verdict(capsys):
    def record(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail
    return record


def test_c01_jod_calibration(verdict):
    one = prob_to_jod(0.75, JOD_SIGMA)
    two = prob_to_jod(0.91, JOD_SIGMA)
    ok = abs(one - 1.0) <= 1e-3 and abs(two - 2.0) <= 0.01
    verdict("C1 JOD calibration", ok,
            f"p=0.75 -> {one:.5f} (want 1 +/- 1e-3), p=0.91 -> {two:.5f} (want 2 +/- 0.01)")


def test_c02_toy_matrix(verdict):
    D = distance_matrix(TOY)
    q = scale_mle(TOY).jod
    ok = (abs(D[2, 1] - 1.0792) <= 1e-3 and D[2, 0] == np.inf and D[0, 2] == -np.inf
          and np.all(np.isfinite(q)) and np.all(np.diff(q) > 0))
    verdict("C2 toy matrix", ok,
            f"D[3,2]={D[2, 1]:.5f}, D[3,1]={D[2, 0]}, D[1,3]={D[0, 2]}, prior scores={np.round(q, 4)}")


def test_c03_closed_form_sweep(verdict):
    worst = 0.0
    for n in range(2, 51):
        for c in range(1, n):
            q = scale_mle([[0, n - c], [c, 0]], NO_PRIOR).jod[1]
            worst = max(worst, abs(q - JOD_SIGMA * probit_bisect(c / n)))
    verdict("C3 closed-form oracle", worst <= 1e-4, f"max |error| over 1225 instances = {worst:.2e}")


def _fd(f, x, h=1e-5):
    out = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        out[k] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def test_c04_gradient_check(verdict):
    rng = np.random.default_rng(20240)
    worst = 0.0
    for k in range(100):
        n = int(rng.integers(2, 7))
        C = random_counts(rng, n, max_count=30)
        q = np.concatenate([[0.0], rng.normal(0, 1.5, n - 1)])
        g = log_likelihood_gradient(q, C, NO_PRIOR)
        fd = _fd(lambda x: total_log_likelihood(x, C, NO_PRIOR), q)
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1.0))
        post = _Posterior(C.astype(float), ScaleOptions())
        g = post(q[1:])[1]
        fd = _fd(lambda x: post(x)[0], q[1:])
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1.0))
    verdict("C4 gradient check", worst <= 1e-5,
            f"max relative error (likelihood and posterior, 100 instances) = {worst:.2e}")


def test_c05_prior_bias_reduction(verdict):
    base = SimConfig(q_true=(0, 2, 4, 6, 8, 10), observers=10, repetitions=3, runs=1000,
                     ci_runs=0, seed=1)
    off = run_monte_carlo(base.replace(use_prior=False)).bias[1:]
    on = run_monte_carlo(base).bias[1:]
    dropped = run_monte_carlo(base.replace(use_prior=False, drop_unanimous=True))
    drop_bias = dropped.bias[1:]
    ok = bool(np.all(off > 0) and np.all(np.abs(on) < np.abs(off)) and drop_bias.mean() < 0)
    verdict("C5 prior bias reduction", ok,
            f"bias off={np.round(off, 3)}, on={np.round(on, 3)}, "
            f"drop-unanimous={np.round(drop_bias, 3)} (mean {drop_bias.mean():.3f}, "
            f"{dropped.failed_runs} disconnected runs excluded)")


def test_c07_difference_variance(verdict):
    S = np.array([[0, 0, 0], [0, 0.431, 0.486], [0, 0.486, 0.683]])
    v = difference_variance(S, 1, 2)
    verdict("C7 difference variance", abs(v - 0.142) < 1e-12, f"v23 = {v:.6f}")


@pytest.fixture(scope="module")
def coverage_run():
    cfg = SimConfig(q_true=(0, 1, 2, 3, 4), observers=20, repetitions=3, runs=200,
                    ci_runs=200, ci_bootstrap=500, seed=2024)
    return run_monte_carlo(cfg)


def test_c06_bootstrap_coverage(verdict, coverage_run):
    cov = coverage_run.ci_coverage[1:]
    pooled = float(cov.mean())
    verdict("C6 bootstrap coverage", 0.90 <= pooled <= 0.98,
            f"pooled coverage over non-anchor conditions = {pooled:.4f} (want 0.90-0.98), "
            f"per condition {np.round(cov, 3)}")


def test_c08_ci_growth(verdict, coverage_run):
    size = coverage_run.ci_size
    verdict("C8 CI growth from anchor", bool(np.all(np.diff(size) >= 0)),
            f"mean CI half-width per condition = {np.round(size, 4)}")


def test_c09_ties_underestimate(verdict):
    cfg = SimConfig(q_true=(0, 1, 2, 3, 4), observers=20, repetitions=3, runs=500,
                    tie_model=TieModel(0.7, 0.3), ci_runs=0, seed=9)
    bias = run_monte_carlo(cfg).bias[1:]
    verdict("C9 ties under-estimation", bool(np.all(bias < 0)), f"bias = {np.round(bias, 4)}")


def test_c10_chain_efficiency(verdict):
    complete = SimConfig(observers=8, repetitions=3, runs=500, ci_runs=0, seed=10)
    chain = complete.replace(design="chain", observers=20)
    assert complete.total_comparisons() == chain.total_comparisons() == 240
    r_complete = run_monte_carlo(complete).rmse
    r_chain = run_monte_carlo(chain).rmse
    verdict("C10 chain design efficiency", r_chain <= 1.2 * r_complete,
            f"RMSE chain={r_chain:.4f} vs complete={r_complete:.4f} "
            f"(ratio {r_chain / r_complete:.3f}, want <= 1.2) at 240 comparisons each")


def test_c11_outlier_power(verdict):
    cfg = SimConfig(observers=19, repetitions=3)
    hits = 0
    for run in range(100):
        rng = run_rng(11, run)
        stack = np.concatenate([_simulate(cfg, rng), random_responder(cfg, rng)])
        hits += bool(outlier_scores(stack).flagged[-1])
    verdict("C11 outlier detection power", hits >= 80, f"random responder flagged in {hits}/100 datasets")


def test_c12_determinism(verdict, tmp_path):
    max_threads = str(max(2, os.cpu_count() or 1))
    commands = {
        "scale": ["scale", "-i", str(TOY_CSV), "--bootstrap", "200", "--seed", "7"],
        "outliers": ["outliers", "-i", str(TOY_CSV)],
        "simulate": ["simulate", "--runs", "20", "--ci-runs", "4", "--ci-bootstrap", "50",
                     "--ties", "--seed", "7"],
    }
    mismatched = []
    for name, args in commands.items():
        outputs = []
        for k, threads in enumerate(["1", "1", max_threads, max_threads]):
            path = tmp_path / f"{name}{k}.out"
            assert main(args + ["--threads", threads, "-o", str(path)]) == 0
            outputs.append(path.read_bytes())
        if len(set(outputs)) != 1:
            mismatched.append(name)
    verdict("C12 determinism", not mismatched,
            f"threads 1 and {max_threads}, two runs each; mismatches: {mismatched or 'none'}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))

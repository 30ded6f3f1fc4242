import math

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.load_profile("default")

SIGMA = 1.4826

# three-condition example counts used throughout the docs
TOY = np.array([[0, 3, 0],
                [27, 0, 7],
                [30, 23, 0]])


@pytest.fixture
def toy():
    return TOY.copy()


def phi_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def probit_bisect(p):
    """Inverse normal CDF by bisection on math.erfc; independent of scipy."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_counts(rng, n, max_count=50, density=0.8):
    """Random connected count matrix (a chain is always present)."""
    C = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or rng.random() < density:
                tot = int(rng.integers(1, max_count + 1))
                w = int(rng.integers(0, tot + 1))
                C[i, j], C[j, i] = w, tot - w
    return C

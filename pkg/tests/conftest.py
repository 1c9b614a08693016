import sys
import itertools

import numpy as np
import pytest

from subsetsel.linalg import Dataset, standardize_columns


def random_data(n, p, seed, standardize=True, noise=1.0, k0=None):
    """Gaussian design with a sparse signal; columns standardized by default."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    if standardize:
        X = standardize_columns(X)
    k0 = k0 or max(1, p // 3)
    beta = np.zeros(p)
    beta[rng.choice(p, size=min(k0, p), replace=False)] = rng.uniform(0.5, 2.0, size=min(k0, p))
    y = X @ beta + noise * rng.standard_normal(n) * (0.3 if standardize else 1.0)
    return Dataset(X, y, name=f"rand-{n}x{p}-{seed}", standardized=standardize)


def orthonormal_data(n, p, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    y = rng.standard_normal(n)
    return Dataset(Q, y, name="orth")


def dense_rss(X, y, support):
    """Independent oracle: pseudoinverse least squares on the columns in ``support``."""
    support = list(support)
    if not support:
        return float(y @ y)
    A = X[:, support]
    beta = np.linalg.pinv(A) @ y
    r = y - A @ beta
    return float(r @ r)


def brute_force(X, y, k):
    """Independent oracle: enumerate every k-subset with pseudoinverse solves."""
    best, arg = np.inf, None
    for S in itertools.combinations(range(X.shape[1]), k):
        v = dense_rss(X, y, S)
        if v < best:
            best, arg = v, S
    return best, arg


@pytest.fixture
def small_data():
    return random_data(30, 12, seed=3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])

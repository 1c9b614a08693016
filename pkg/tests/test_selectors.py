import math
import warnings

import numpy as np
import pytest

from conftest import brute_force, dense_rss, orthonormal_data, random_data
from subsetsel.datagen import GenSpec, generate
from subsetsel.errors import CombinatorialLimitError, InvalidArgumentError
from subsetsel.linalg import Dataset, full_least_squares, standardize_columns, subset_rss
from subsetsel.selectors import (
    Budget, SolverConfig, SolverKind, StopReason, dfo, dfon, exhaustive, forward_selection, genetic,
    hard_threshold, sffs, sfs, solve,
)
from subsetsel.selectors.base import Clock, combos
from subsetsel.selectors.dfo import random_starts
from subsetsel.selectors.genetic import repair

ALL_KINDS = list(SolverKind)


def naive_greedy(X, y, k):
    support = []
    for _ in range(k):
        best, arg = math.inf, None
        for j in range(X.shape[1]):
            if j in support:
                continue
            v = dense_rss(X, y, support + [j])
            if v < best:
                best, arg = v, j
        support.append(arg)
    return tuple(sorted(support))


# -- budget and config ---------------------------------------------------------

def test_budget_and_config_validation():
    with pytest.raises(InvalidArgumentError):
        Budget(cpu_seconds_limit=0)
    with pytest.raises(InvalidArgumentError):
        Budget(max_iterations=0)
    with pytest.raises(InvalidArgumentError):
        SolverConfig(kind=SolverKind.GA, crossover_rate=1.5)
    with pytest.raises(InvalidArgumentError):
        SolverConfig(kind=SolverKind.SFS, t=0)
    assert SolverKind.parse("dfon") is SolverKind.DFON
    assert Budget() == Budget(600, 1_000_000, 1e-6)


def test_clock_checks_time_before_iterations():
    clock = Clock(Budget(cpu_seconds_limit=1e-9, max_iterations=1))
    t0 = clock.elapsed
    while clock.elapsed <= t0 + 1e-6:
        pass
    assert clock.check(5) is StopReason.TIME_LIMIT
    assert Clock(Budget(max_iterations=3)).check(3) is StopReason.ITER_LIMIT


def test_combos_lexicographic():
    np.testing.assert_array_equal(combos([1, 4, 7], 2), [[1, 4], [1, 7], [4, 7]])


# -- forward selection -----------------------------------------------------------

def test_fs_k_equals_p_is_full_ols(small_data):
    sol, diag = forward_selection(small_data, 12)
    beta = full_least_squares(small_data)
    r = small_data.y - small_data.X @ beta
    assert sol.support == tuple(range(12))
    assert sol.rss == pytest.approx(float(r @ r), rel=1e-8)
    assert diag.stop_reason is StopReason.CONVERGED


def test_fs_matches_naive_greedy():
    data = random_data(30, 10, seed=17)
    sol, diag = forward_selection(data, 3)
    assert sol.support == naive_greedy(data.X, data.y, 3)
    assert all(a >= b for a, b in zip(diag.rss_trace, diag.rss_trace[1:]))


def test_fs_naive_flag_gives_same_answer(small_data):
    a, _ = forward_selection(small_data, 5)
    b, _ = forward_selection(small_data, 5, config=SolverConfig(kind=SolverKind.FS, naive=True))
    assert a.support == b.support


@pytest.mark.parametrize("k", [0, 13])
def test_invalid_k(small_data, k):
    for kind in ALL_KINDS:
        if kind is SolverKind.EXHAUSTIVE and k == 0:
            continue
        with pytest.raises(InvalidArgumentError):
            solve(small_data, k, SolverConfig(kind=kind))


def test_exhaustive_k0_is_empty_model(small_data):
    sol, _ = exhaustive(small_data, 0)
    assert sol.support == () and sol.rss == pytest.approx(small_data.y_norm2)


# -- SFFS ------------------------------------------------------------------------

def test_sffs_orthonormal_equals_fs():
    data = orthonormal_data(30, 10, 2)
    assert sffs(data, 4)[0].support == forward_selection(data, 4)[0].support


def test_sffs_k1_falls_back_to_fs(small_data):
    with pytest.warns(UserWarning):
        sol, diag = sffs(small_data, 1)
    assert sol.support == forward_selection(small_data, 1)[0].support
    assert diag.details["fallback"]


def test_sffs_never_worse_than_fs():
    for seed in range(200):
        data = random_data(25, 10, seed=seed)
        fs_sol, _ = forward_selection(data, 4)
        sol, diag = sffs(data, 4)
        if diag.stop_reason is StopReason.CONVERGED:
            assert sol.rss <= fs_sol.rss + 1e-8 * data.y_norm2


def _nesting_trap():
    # search seeded instances until FS misses the optimum and SFFS finds it
    for seed in range(3000):
        rng = np.random.default_rng(seed)
        Z = rng.standard_normal((15, 6))
        Z[:, 0] = Z[:, 1] + Z[:, 2] + 0.5 * rng.standard_normal(15)
        X = standardize_columns(Z)
        y = X[:, 1] + X[:, 2] + rng.uniform(-1, 1) * X[:, 3] + 0.3 * rng.standard_normal(15)
        data = Dataset(X, y, standardized=True)
        f_star, _ = brute_force(X, y, 3)
        fs_rss = forward_selection(data, 3)[0].rss
        if fs_rss > f_star * (1 + 1e-9) and sffs(data, 3)[0].rss <= f_star * (1 + 1e-12):
            return data, f_star
    raise AssertionError("no nesting trap found")


def test_sffs_escapes_nesting_trap():
    data, f_star = _nesting_trap()
    assert sffs(data, 3)[0].rss < forward_selection(data, 3)[0].rss
    assert sffs(data, 3)[0].rss == pytest.approx(f_star, rel=1e-10)


# -- SFS -------------------------------------------------------------------------

def test_sfs_orthonormal_no_swaps():
    data = orthonormal_data(30, 10, 5)
    sol, diag = sfs(data, 4, 1)
    assert diag.iterations == 1 and diag.details["swaps"] == 0
    order = np.argsort(-(data.X.T @ data.y) ** 2, kind="stable")[:4]
    assert sol.support == tuple(sorted(order))


def test_sfs_t_greater_than_k():
    data = random_data(20, 8, seed=1)
    with pytest.raises(InvalidArgumentError):
        sfs(data, 1, 2)


def test_sfs_dominated_by_oracle_and_strict_descent():
    hits = {1: 0, 2: 0}
    for seed in range(30):
        data = random_data(20, 12, seed=seed)
        f_star, _ = brute_force(data.X, data.y, 4)
        for t in (1, 2):
            sol, diag = sfs(data, 4, t)
            assert sol.rss >= f_star * (1 - 1e-8)
            tr = diag.rss_trace
            assert all(b < a for a, b in zip(tr, tr[1:]))
            hits[t] += sol.rss <= f_star * (1 + 1e-10)
    assert hits[1] > 0 and hits[2] > 0


# -- hard thresholding and DFO -------------------------------------------------------

def test_hard_threshold_examples():
    np.testing.assert_array_equal(hard_threshold([3, -5, 1], 2), [3, -5, 0])
    np.testing.assert_array_equal(hard_threshold([2, -2, 0.5], 1), [2, 0, 0])
    c = np.array([0.1, -4.0, 2.0])
    np.testing.assert_array_equal(hard_threshold(c, 3), c)


def test_dfo_orthonormal_one_step_fixed_point():
    data = orthonormal_data(30, 8, 3)
    cfg = SolverConfig(kind=SolverKind.DFO, step_constant=2.0)
    sol, diag = dfo(data, 3, config=cfg, beta0=np.zeros(8))
    want = hard_threshold(data.X.T @ data.y, 3)
    np.testing.assert_allclose(diag.details["dense_beta"], want, atol=1e-12)
    assert sol.support == tuple(np.flatnonzero(want))
    assert diag.iterations == 2  # second step confirms the fixed point


def test_dfo_trace_non_increasing_and_oracle_bound():
    for seed in range(20):
        data = random_data(20, 12, seed=seed)
        sol, diag = dfo(data, 4, config=SolverConfig(kind=SolverKind.DFO, rng_seed=seed))
        tr = np.array(diag.rss_trace)
        assert np.all(np.diff(tr) <= 1e-10 * max(1.0, tr[0]))
        assert sol.rss >= brute_force(data.X, data.y, 4)[0] * (1 - 1e-8)


def test_dfo_l_default_is_twice_lambda_max(small_data):
    _, diag = dfo(small_data, 3)
    lam = np.linalg.eigvalsh(small_data.X.T @ small_data.X).max()
    assert diag.details["L"] == pytest.approx(2 * lam, rel=1e-8)


def test_dfon_single_restart_equals_dfo(small_data):
    cfg = SolverConfig(kind=SolverKind.DFON, restarts=1, rng_seed=9)
    a, _ = dfon(small_data, 4, config=cfg)
    b, _ = dfo(small_data, 4, config=SolverConfig(kind=SolverKind.DFO, rng_seed=9))
    assert a.support == b.support and a.rss == b.rss


def test_dfon_no_worse_than_first_run():
    for seed in range(200):
        data = random_data(20, 10, seed=seed)
        cfg = SolverConfig(kind=SolverKind.DFON, restarts=20, rng_seed=seed)
        multi, diag = dfon(data, 3, config=cfg)
        single, _ = dfo(data, 3, config=SolverConfig(kind=SolverKind.DFO, rng_seed=seed))
        assert multi.rss <= single.rss + 1e-12 * data.y_norm2
        assert len(diag.details["run_rss"]) == 20


def test_dfon_covering_all_supports_hits_oracle():
    data = random_data(20, 12, seed=4)
    cfg = SolverConfig(kind=SolverKind.DFON, restarts=495, rng_seed=0)
    sol, diag = dfon(data, 4, config=cfg)
    f_star, _ = brute_force(data.X, data.y, 4)
    if diag.stop_reason is StopReason.CONVERGED:
        # the start on the optimal support is already a fixed point after refit
        assert sol.rss == pytest.approx(f_star, rel=1e-9)


def test_random_starts_distinct_and_reuse_warning():
    data = random_data(20, 6, seed=0)
    rng = np.random.default_rng(0)
    starts = random_starts(data, 2, 15, rng)
    supports = {tuple(np.flatnonzero(b)) for b in starts}
    assert len(supports) == 15
    with pytest.warns(UserWarning):
        starts = random_starts(data, 5, 10, np.random.default_rng(0))
    assert len(starts) == 10


# -- GA --------------------------------------------------------------------------

def test_repair_restores_cardinality():
    rng = np.random.default_rng(0)
    for _ in range(200):
        c = rng.random(30) < rng.random()
        assert repair(c.copy(), 5, rng).sum() == 5


def test_ga_homogeneous_start_stops_immediately(small_data):
    row = np.zeros(12, dtype=bool)
    row[[1, 4, 7]] = True
    P = np.tile(row, (10, 1))
    sol, diag = genetic(small_data, 3, initial_population=P)
    assert diag.iterations == 0
    assert diag.stop_reason is StopReason.POPULATION_HOMOGENEOUS
    assert sol.support == (1, 4, 7)
    assert sol.rss == subset_rss(small_data, [1, 4, 7]).rss


def test_ga_population_size_must_be_at_least_two(small_data):
    with pytest.raises(InvalidArgumentError):
        genetic(small_data, 3, config=SolverConfig(kind=SolverKind.GA, population_size=1))


def test_ga_quality_on_tiny_instances():
    # generator protocol at the overdetermined ratio n = 5p
    good = 0
    for seed in range(100):
        data, _ = generate(GenSpec(n=50, p=10, k0=3, snr=1.0, rng_seed=seed))
        f_star, _ = brute_force(data.X, data.y, 3)
        sol, _ = genetic(data, 3, config=SolverConfig(kind=SolverKind.GA, rng_seed=seed))
        good += 100 * (sol.rss - f_star) / f_star <= 5.0
    assert good >= 90


# -- exhaustive ------------------------------------------------------------------

def test_exhaustive_k_equals_p(small_data):
    sol, _ = exhaustive(small_data, 12)
    assert sol.rss == pytest.approx(dense_rss(small_data.X, small_data.y, range(12)), rel=1e-10)


def test_exhaustive_orthonormal_separates():
    data = orthonormal_data(30, 10, 8)
    sol, _ = exhaustive(data, 3)
    assert sol.support == tuple(sorted(np.argsort(-(data.X.T @ data.y) ** 2)[:3]))


def test_exhaustive_matches_brute_force_and_dominates():
    for seed in range(10):
        data = random_data(20, 12, seed=seed)
        f_star, S = brute_force(data.X, data.y, 4)
        sol, _ = exhaustive(data, 4)
        assert sol.rss == pytest.approx(f_star, rel=1e-10)
        assert sol.support == tuple(S)
        for kind in ALL_KINDS:
            other, _ = solve(data, 4, SolverConfig(kind=kind, rng_seed=seed))
            assert other.rss >= sol.rss * (1 - 1e-8)


def test_exhaustive_guard():
    data = random_data(10, 40, seed=0)
    with pytest.raises(CombinatorialLimitError) as exc:
        exhaustive(data, 20)
    assert exc.value.count == math.comb(40, 20)


def test_exhaustive_rank_deficient_wide():
    data = random_data(6, 10, seed=3)
    f_star, _ = brute_force(data.X, data.y, 5)
    assert exhaustive(data, 5)[0].rss == pytest.approx(f_star, rel=1e-8, abs=1e-10 * data.y_norm2)


# -- shared contracts ------------------------------------------------------------

@pytest.mark.parametrize("kind", ALL_KINDS)
def test_determinism_and_support_size(small_data, kind):
    cfg = SolverConfig(kind=kind, rng_seed=5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a, da = solve(small_data, 4, cfg)
        b, db = solve(small_data, 4, cfg)
    assert a.support == b.support and a.rss == b.rss and da.stop_reason == db.stop_reason
    assert a.size == 4
    assert a.rss == pytest.approx(subset_rss(small_data, a.support).rss, rel=1e-10)


@pytest.mark.parametrize("kind", [SolverKind.SFFS, SolverKind.SFS, SolverKind.GA, SolverKind.DFON])
def test_iteration_limit_is_reported(kind):
    data = random_data(40, 20, seed=2)
    sol, diag = solve(data, 6, SolverConfig(kind=kind), Budget(max_iterations=1))
    assert diag.stop_reason in (StopReason.ITER_LIMIT, StopReason.CONVERGED,
                                StopReason.POPULATION_HOMOGENEOUS)
    assert sol.size <= 6

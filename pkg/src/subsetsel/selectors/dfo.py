"""Discrete first-order method and its multistart variant."""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..linalg import Dataset, SubsetSolution, spectral_bound, subset_rss
from .base import Budget, Clock, RunDiagnostics, SolverConfig, SolverKind, StopReason, check_k


def top_k_indices(c: np.ndarray, k: int) -> np.ndarray:
    """Positions of the ``k`` largest ``|c|`` entries; ties go to the lower index."""
    order = np.argsort(-np.abs(np.asarray(c, dtype=float)), kind="stable")
    return np.sort(order[:k])


def hard_threshold(c, k: int) -> np.ndarray:
    """Keep the ``k`` largest-magnitude entries of ``c`` and zero the rest."""
    c = np.asarray(c, dtype=float)
    out = np.zeros_like(c)
    idx = top_k_indices(c, k)
    out[idx] = c[idx]
    return out


def step_constant(data: Dataset, config: SolverConfig | None) -> float:
    sc = config.step_constant if config else "auto"
    if sc == "auto":
        return 2.0 * spectral_bound(data)
    if sc == "lambda_max":
        return spectral_bound(data)
    return float(sc)


def random_starts(data: Dataset, k: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Dense starting vectors, each the least-squares fit on a distinct random ``k``-support.

    When fewer than ``count`` distinct supports exist, supports are reused and
    their coefficients perturbed with standard normal noise.
    """
    p = data.p
    total = math.comb(p, k)
    supports: list[tuple[int, ...]] = []
    if total <= 200_000:
        from itertools import combinations

        allsets = list(combinations(range(p), k))
        picks = rng.permutation(total)[:count]
        supports = [allsets[i] for i in picks]
    else:
        seen: set[tuple[int, ...]] = set()
        while len(supports) < count:
            s = tuple(sorted(int(j) for j in rng.choice(p, size=k, replace=False)))
            if s not in seen:
                seen.add(s)
                supports.append(s)
    starts = []
    for S in supports:
        beta = np.zeros(p)
        beta[list(S)] = subset_rss(data, S).beta
        starts.append(beta)
    if count > total:
        warnings.warn(f"only {total} distinct supports of size {k}; reusing supports with "
                      "perturbed coefficients", stacklevel=3)
        i = 0
        while len(starts) < count:
            base = starts[i % total].copy()
            nz = np.flatnonzero(base) if np.any(base) else np.asarray(supports[i % total])
            base[nz] += rng.standard_normal(len(nz))
            starts.append(base)
            i += 1
    return starts


def _dfo_run(data: Dataset, k: int, L: float, beta: np.ndarray, clock: Clock,
             max_iterations: int, epsilon: float):
    X, y = data.X, data.y
    r = y - X @ beta
    g = float(r @ r)
    eps = epsilon * (1.0 + g)
    support = np.flatnonzero(beta)
    if len(support) != k:
        support = top_k_indices(beta, k)
    trace = [g]
    it, stop = 0, StopReason.CONVERGED
    while True:
        reason = clock.check(0)
        if reason is None and it >= max_iterations:
            reason = StopReason.ITER_LIMIT
        if reason:
            stop = reason
            break
        it += 1
        c = beta + (2.0 / L) * (X.T @ r)
        support = top_k_indices(c, k)
        beta = np.zeros_like(beta)
        beta[support] = c[support]
        r = y - X[:, support] @ beta[support]
        g_new = float(r @ r)
        trace.append(g_new)
        decrease = g - g_new
        g = g_new
        if decrease < eps:
            break
    return beta, support, it, stop, trace


def dfo(data: Dataset, k: int, budget: Budget | None = None, config: SolverConfig | None = None,
        beta0=None) -> tuple[SubsetSolution, RunDiagnostics]:
    """Iterate ``beta <- H_k(beta - grad g(beta) / L)`` for ``g = ||y - X beta||^2``.

    Stops when the objective decrease of a step drops below
    ``budget.epsilon * (1 + g(beta_0))``, then refits least squares on the
    final support. Without ``beta0`` the start is the least-squares fit on a
    random support drawn from ``config.rng_seed``.
    """
    k = check_k(data, k)
    budget = budget or Budget()
    config = config or SolverConfig(kind=SolverKind.DFO)
    clock = Clock(budget)
    L = step_constant(data, config)
    if beta0 is None:
        beta0 = random_starts(data, k, 1, np.random.default_rng(config.rng_seed))[0]
    beta0 = hard_threshold(np.asarray(beta0, dtype=float), k)
    beta, support, it, stop, trace = _dfo_run(data, k, L, beta0, clock, budget.max_iterations,
                                              budget.epsilon)
    sol = subset_rss(data, support)
    diag = RunDiagnostics(it, clock.elapsed, stop, trace,
                          {"L": L, "final_objective": trace[-1], "dense_beta": beta})
    return sol, diag


def dfon(data: Dataset, k: int, budget: Budget | None = None,
         config: SolverConfig | None = None) -> tuple[SubsetSolution, RunDiagnostics]:
    """Run :func:`dfo` from ``config.restarts`` random supports and keep the lowest refit RSS.

    The CPU time reported is the total over all runs, and the time limit
    applies to that total.
    """
    k = check_k(data, k)
    budget = budget or Budget()
    config = config or SolverConfig(kind=SolverKind.DFON)
    clock = Clock(budget)
    L = step_constant(data, config)
    starts = random_starts(data, k, config.restarts, np.random.default_rng(config.rng_seed))
    best: SubsetSolution | None = None
    total_it = 0
    reasons = []
    runs = []
    for beta0 in starts:
        if best is not None and clock.check(0):
            reasons.append(StopReason.TIME_LIMIT)
            break
        _, support, it, stop, _ = _dfo_run(data, k, L, beta0, clock, budget.max_iterations,
                                           budget.epsilon)
        sol = subset_rss(data, support)
        runs.append(sol.rss)
        total_it += it
        reasons.append(stop)
        if best is None or sol.rss < best.rss:
            best = sol
    if StopReason.TIME_LIMIT in reasons:
        stop = StopReason.TIME_LIMIT
    elif StopReason.ITER_LIMIT in reasons:
        stop = StopReason.ITER_LIMIT
    else:
        stop = StopReason.CONVERGED
    return best, RunDiagnostics(total_it, clock.elapsed, stop, None, {"L": L, "run_rss": runs})

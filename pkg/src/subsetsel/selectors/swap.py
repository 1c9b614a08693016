"""Sequential feature swapping.

Starting from the ``k`` predictors with the largest OLS coefficients in
magnitude, each iteration drops the ``t`` predictors whose removal costs the
least RSS, adds the ``t`` outside predictors that reduce the RSS of the
remaining model the most, and keeps the swap only if the ``k``-model RSS
strictly decreases. Since the RSS strictly decreases and there are finitely
many ``k``-subsets, the loop always terminates.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError
from ..linalg import Dataset, SubsetSolution, fit_subset, full_least_squares
from .base import Budget, Clock, RunDiagnostics, SolverConfig, StopReason, check_k, combos, complement


def ols_top_k(data: Dataset, k: int) -> tuple[int, ...]:
    """Indices of the ``k`` largest-magnitude OLS coefficients (lowest index wins ties)."""
    beta = full_least_squares(data)
    order = np.argsort(-np.abs(beta), kind="stable")
    return tuple(sorted(int(j) for j in order[:k]))


def sfs(data: Dataset, k: int, t: int | None = None, budget: Budget | None = None,
        config: SolverConfig | None = None, start=None) -> tuple[SubsetSolution, RunDiagnostics]:
    """Sequential feature swapping with swap width ``t`` (defaults to ``config.t`` or 1)."""
    k = check_k(data, k)
    if t is None:
        t = config.t if config else 1
    if not 1 <= t <= k:
        raise InvalidArgumentError(f"swap width t={t} must satisfy 1 <= t <= k={k}")
    budget = budget or Budget()
    naive = bool(config and config.naive)
    tol = 1e-12 * max(data.y_norm2, 1e-300)
    clock = Clock(budget)

    support = ols_top_k(data, k) if start is None else tuple(sorted(start))
    fit = fit_subset(data, support, naive)
    trace = [fit.rss]
    it, swaps, stop = 0, 0, StopReason.CONVERGED
    while True:
        reason = clock.check(it)
        if reason:
            stop = reason
            break
        it += 1
        outside = complement(fit.support, data.p)
        if len(outside) < t:
            break
        # drop
        drop_sets = combos(fit.support, t)
        J = drop_sets[int(np.argmin(fit.drop_gains(drop_sets)))]
        kept = tuple(j for j in fit.support if j not in set(J.tolist()))
        reduced = fit_subset(data, kept, naive)
        # pick, from predictors outside the current k-model
        pick_sets = combos(outside, t)
        Q = pick_sets[int(np.argmax(reduced.add_reductions(pick_sets)))]
        cand = fit_subset(data, kept + tuple(int(q) for q in Q), naive)
        if cand.rss < fit.rss - tol:
            fit = cand
            swaps += 1
            trace.append(fit.rss)
        else:
            break
    return fit.solution(), RunDiagnostics(it, clock.elapsed, stop, trace, {"swaps": swaps, "t": t})

"""Forward selection and sequential forward floating selection."""

from __future__ import annotations

import warnings

import numpy as np

from ..linalg import Dataset, SubsetSolution, fit_subset
from .base import Budget, Clock, RunDiagnostics, SolverConfig, StopReason, check_k, complement


def _best_add(fit, p: int):
    cand = complement(fit.support, p)
    red = fit.add_reductions(cand[:, None])
    return int(cand[int(np.argmax(red))])


def forward_selection(data: Dataset, k: int, budget: Budget | None = None,
                      config: SolverConfig | None = None) -> tuple[SubsetSolution, RunDiagnostics]:
    """Greedy bottom-up selection: repeatedly add the predictor with the largest RSS reduction.

    If the budget runs out first, the partial model built so far is returned.
    """
    k = check_k(data, k)
    budget = budget or Budget()
    naive = bool(config and config.naive)
    clock = Clock(budget)
    fit = fit_subset(data, (), naive)
    trace = [fit.rss]
    it, stop = 0, StopReason.CONVERGED
    while len(fit.support) < k:
        reason = clock.check(it)
        if reason:
            stop = reason
            break
        j = _best_add(fit, data.p)
        fit = fit_subset(data, fit.support + (j,), naive)
        trace.append(fit.rss)
        it += 1
    return fit.solution(), RunDiagnostics(it, clock.elapsed, stop, trace)


class _SizeTable:
    """Best model seen at each cardinality."""

    def __init__(self):
        self.best: dict[int, SubsetSolution] = {}

    def record(self, fit):
        size = len(fit.support)
        cur = self.best.get(size)
        if cur is None or fit.rss < cur.rss:
            self.best[size] = fit.solution()

    def rss(self, size: int) -> float:
        return self.best[size].rss


def sffs(data: Dataset, k: int, budget: Budget | None = None,
         config: SolverConfig | None = None) -> tuple[SubsetSolution, RunDiagnostics]:
    """Sequential forward floating selection.

    After each inclusion the least significant predictor is conditionally
    excluded, and exclusions continue while the smaller model beats the best
    model recorded at that size. If the budget runs out, the best recorded
    model at the largest size reached is returned (possibly fewer than ``k``
    predictors). ``k < 2`` falls back to forward selection.
    """
    k = check_k(data, k)
    budget = budget or Budget()
    if k < 2:
        warnings.warn("SFFS needs k >= 2; falling back to forward selection", stacklevel=2)
        sol, diag = forward_selection(data, k, budget, config)
        diag.details["fallback"] = "FS"
        return sol, diag

    naive = bool(config and config.naive)
    tie = 1e-12 * max(data.y_norm2, 1e-300)
    clock = Clock(budget)
    table = _SizeTable()
    trace: list[float] = []
    exclusions = 0

    fit = fit_subset(data, (), naive)
    it, stop = 0, StopReason.CONVERGED
    while len(fit.support) < 2:
        reason = clock.check(it)
        if reason:
            stop = reason
            break
        fit = fit_subset(data, fit.support + (_best_add(fit, data.p),), naive)
        table.record(fit)
        trace.append(fit.rss)
        it += 1

    i = len(fit.support)
    while stop is StopReason.CONVERGED and i < k:
        reason = clock.check(it)
        if reason:
            stop = reason
            break
        it += 1
        # inclusion
        t = _best_add(fit, data.p)
        grown = fit_subset(data, fit.support + (t,), naive)
        table.record(grown)
        trace.append(grown.rss)
        # conditional exclusion; the new predictor wins ties so a swap always lowers q
        members = np.asarray(grown.support)
        gains = grown.drop_gains(members[:, None])
        g_t = gains[grown.support.index(t)]
        r = int(members[int(np.argmin(gains))])
        if g_t <= gains.min() + tie:
            r = t
        if r == t:
            fit = grown
            i += 1
            continue
        exclusions += 1
        hat = fit_subset(data, tuple(j for j in grown.support if j != r), naive)
        table.record(hat)
        trace.append(hat.rss)
        if i == 2:
            fit = hat
            continue
        # continuation of conditional exclusion
        while True:
            reason = clock.check(it)
            if reason:
                stop = reason
                fit = hat
                break
            members = np.asarray(hat.support)
            gains = hat.drop_gains(members[:, None])
            s = int(members[int(np.argmin(gains))])
            smaller = fit_subset(data, tuple(j for j in hat.support if j != s), naive)
            if smaller.rss >= table.rss(i - 1):
                fit = hat
                break
            it += 1
            hat = smaller
            table.record(hat)
            trace.append(hat.rss)
            i -= 1
            if i == 2:
                fit = hat
                break

    details = {"exclusions": exclusions, "best_by_size": dict(table.best)}
    if stop is StopReason.CONVERGED:
        return fit.solution(), RunDiagnostics(it, clock.elapsed, stop, trace, details)
    top = max((size for size in table.best if size <= k), default=None)
    sol = table.best[top] if top is not None else fit.solution()
    return sol, RunDiagnostics(it, clock.elapsed, stop, trace, details)

"""Exhaustive enumeration of all ``k``-subsets (ground-truth oracle)."""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..errors import CombinatorialLimitError
from ..linalg import QUAD_RTOL, Dataset, SubsetSolution, quad_forms, subset_rss
from .base import Budget, Clock, RunDiagnostics, SolverConfig, StopReason, check_k

MAX_SUBSETS = 10_000_000
_CHUNK = 50_000
_SHORTLIST = 8


def exhaustive(data: Dataset, k: int, budget: Budget | None = None, config: SolverConfig | None = None,
               limit: int = MAX_SUBSETS, force: bool | None = None) -> tuple[SubsetSolution, RunDiagnostics]:
    """Global minimizer of the RSS over all supports of size ``k``.

    Subsets are screened in chunks through the Gram matrix; the few best
    candidates are then refit exactly and the lowest RSS (lexicographically
    first on ties) is returned. Refuses more than ``limit`` subsets unless
    forced.
    """
    k = check_k(data, k, lo=0)
    budget = budget or Budget()
    force = bool(config and config.force) if force is None else force
    total = math.comb(data.p, k)
    if total > limit and not force:
        raise CombinatorialLimitError(total, limit)
    clock = Clock(budget)
    if k == 0:
        return subset_rss(data, ()), RunDiagnostics(1, clock.elapsed, StopReason.CONVERGED)

    G = data.X.T @ data.X
    b = data.X.T @ data.y
    tol = QUAD_RTOL * data.col_scale
    it = itertools.combinations(range(data.p), k)
    short_sets = np.zeros((0, k), dtype=np.intp)
    short_vals = np.zeros(0)
    done, stop = 0, StopReason.CONVERGED
    while done < total:
        reason = clock.check(done)
        if reason:
            stop = reason
            break
        m = min(_CHUNK, total - done)
        sets = np.fromiter(itertools.chain.from_iterable(itertools.islice(it, m)),
                           dtype=np.intp, count=m * k).reshape(m, k)
        explained = quad_forms(G, b, sets, tol)
        top = np.argsort(-explained, kind="stable")[:_SHORTLIST]
        short_sets = np.vstack([short_sets, sets[top]])
        short_vals = np.concatenate([short_vals, explained[top]])
        order = np.argsort(-short_vals, kind="stable")[:_SHORTLIST]
        short_sets, short_vals = short_sets[order], short_vals[order]
        done += m

    best = None
    for S in sorted(map(tuple, short_sets.tolist())):
        sol = subset_rss(data, S)
        if best is None or sol.rss < best.rss:
            best = sol
    return best, RunDiagnostics(done, clock.elapsed, stop, None, {"subsets": total})

"""Subset selectors for cardinality-constrained least squares.

Every selector takes a :class:`~subsetsel.linalg.Dataset`, a target size
``k``, a :class:`Budget` and a :class:`SolverConfig`, and returns a
``(SubsetSolution, RunDiagnostics)`` pair.
"""

from __future__ import annotations

from ..linalg import Dataset, SubsetSolution
from .base import Budget, RunDiagnostics, SolverConfig, SolverKind, StopReason
from .dfo import dfo, dfon, hard_threshold
from .exhaustive import exhaustive
from .genetic import genetic
from .greedy import forward_selection, sffs
from .swap import sfs


def solve(data: Dataset, k: int, config: SolverConfig, budget: Budget | None = None
          ) -> tuple[SubsetSolution, RunDiagnostics]:
    """Dispatch to the selector named by ``config.kind``."""
    kind = config.kind
    if kind is SolverKind.FS:
        return forward_selection(data, k, budget, config)
    if kind is SolverKind.SFFS:
        return sffs(data, k, budget, config)
    if kind is SolverKind.SFS:
        return sfs(data, k, config.t, budget, config)
    if kind is SolverKind.DFO:
        return dfo(data, k, budget, config)
    if kind is SolverKind.DFON:
        return dfon(data, k, budget, config)
    if kind is SolverKind.GA:
        return genetic(data, k, budget, config)
    return exhaustive(data, k, budget, config)


__all__ = [
    "Budget", "RunDiagnostics", "SolverConfig", "SolverKind", "StopReason",
    "dfo", "dfon", "exhaustive", "forward_selection", "genetic", "hard_threshold",
    "sffs", "sfs", "solve",
]

"""Suboptimal solvers and benchmarking tools for best subset selection."""

from .linalg import (
    Dataset,
    SubsetSolution,
    fit_subset,
    full_least_squares,
    gain,
    reduction,
    spectral_bound,
    standardize_columns,
    subset_rss,
)
from .selectors import (
    Budget,
    RunDiagnostics,
    SolverConfig,
    SolverKind,
    StopReason,
    dfo,
    dfon,
    exhaustive,
    forward_selection,
    genetic,
    hard_threshold,
    sffs,
    sfs,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "Budget", "Dataset", "RunDiagnostics", "SolverConfig", "SolverKind", "StopReason", "SubsetSolution",
    "dfo", "dfon", "exhaustive", "fit_subset", "forward_selection", "full_least_squares", "gain",
    "genetic", "hard_threshold", "reduction", "sffs", "sfs", "solve", "spectral_bound",
    "standardize_columns", "subset_rss",
]

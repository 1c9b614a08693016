"""Shared types for the subset selectors: budgets, configs, diagnostics."""

from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..errors import InvalidArgumentError
from ..linalg import Dataset


class SolverKind(str, enum.Enum):
    FS = "FS"
    SFFS = "SFFS"
    SFS = "SFS"
    DFO = "DFO"
    DFON = "DFOn"
    GA = "GA"
    EXHAUSTIVE = "EXHAUSTIVE"

    @classmethod
    def parse(cls, name: str) -> "SolverKind":
        key = str(name).strip().upper()
        for kind in cls:
            if kind.value.upper() == key:
                return kind
        raise InvalidArgumentError(f"unknown solver {name!r}; choose from {[k.value for k in cls]}")


class StopReason(str, enum.Enum):
    CONVERGED = "CONVERGED"
    TIME_LIMIT = "TIME_LIMIT"
    ITER_LIMIT = "ITER_LIMIT"
    POPULATION_HOMOGENEOUS = "POPULATION_HOMOGENEOUS"


@dataclass(frozen=True)
class Budget:
    """Resource limits for one solver run.

    ``epsilon`` is the relative DFO stopping tolerance: a run stops once the
    per-step objective decrease falls below ``epsilon * (1 + g(beta_0))``.
    """

    cpu_seconds_limit: float = 600.0
    max_iterations: int = 1_000_000
    epsilon: float = 1e-6

    def __post_init__(self):
        if not (self.cpu_seconds_limit > 0 and self.max_iterations > 0 and self.epsilon > 0):
            raise InvalidArgumentError(f"budget limits must be strictly positive: {self}")


StepConstant = Union[float, str]


@dataclass(frozen=True)
class SolverConfig:
    """Per-solver parameters; fields irrelevant to ``kind`` are ignored.

    ``step_constant`` is ``"auto"`` (``2 * lambda_max(X^T X)``, the gradient
    Lipschitz constant of the RSS), ``"lambda_max"`` (``lambda_max(X^T X)``), or a
    positive number. ``mutation_rate`` is a percentage of offspring bits.
    ``naive`` forces from-scratch subset solves instead of the factor-once
    scoring kernels.
    """

    kind: SolverKind = SolverKind.FS
    t: int = 1
    restarts: int = 20
    population_size: int = 10
    crossover_rate: float = 0.8
    mutation_rate: float = 0.2
    step_constant: StepConstant = "auto"
    rng_seed: int = 0
    naive: bool = False
    force: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", SolverKind.parse(self.kind) if not isinstance(self.kind, SolverKind) else self.kind)
        if self.t < 1:
            raise InvalidArgumentError(f"swap width t must be >= 1, got {self.t}")
        if self.restarts < 1:
            raise InvalidArgumentError(f"restarts must be >= 1, got {self.restarts}")
        if self.population_size < 1:
            raise InvalidArgumentError(f"population size must be >= 1, got {self.population_size}")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= (1.0 if name == "crossover_rate" else 100.0):
                raise InvalidArgumentError(f"{name} out of range: {v}")
        sc = self.step_constant
        if isinstance(sc, str):
            if sc not in ("auto", "lambda_max"):
                raise InvalidArgumentError(f"step_constant must be 'auto', 'lambda_max' or a number, got {sc!r}")
        elif not sc > 0:
            raise InvalidArgumentError(f"step_constant must be positive, got {sc}")


@dataclass
class RunDiagnostics:
    iterations: int = 0
    cpu_seconds: float = 0.0
    stop_reason: StopReason = StopReason.CONVERGED
    rss_trace: list[float] | None = field(default=None, repr=False)
    details: dict = field(default_factory=dict, repr=False)


class Clock:
    """Process CPU-time stopwatch checked at iteration boundaries."""

    def __init__(self, budget: Budget):
        self.budget = budget
        self.start = time.process_time()

    @property
    def elapsed(self) -> float:
        return time.process_time() - self.start

    def check(self, iterations: int) -> StopReason | None:
        # time first, then iterations
        if self.elapsed >= self.budget.cpu_seconds_limit:
            return StopReason.TIME_LIMIT
        if iterations >= self.budget.max_iterations:
            return StopReason.ITER_LIMIT
        return None


def check_k(data: Dataset, k: int, lo: int = 1) -> int:
    k = int(k)
    if k > data.p:
        raise InvalidArgumentError(f"k={k} exceeds the number of predictors p={data.p}")
    if k < lo:
        raise InvalidArgumentError(f"k must be >= {lo}, got {k}")
    return k


def n_subsets(p: int, k: int) -> int:
    return math.comb(p, k)


def complement(support, p: int) -> np.ndarray:
    mask = np.ones(p, dtype=bool)
    mask[list(support)] = False
    return np.flatnonzero(mask)


def combos(indices, t: int) -> np.ndarray:
    """All ``t``-subsets of ``indices`` in lexicographic order, as an ``(m, t)`` array."""
    indices = np.asarray(indices, dtype=np.intp)
    m = math.comb(len(indices), t)
    if m == 0:
        return np.zeros((0, t), dtype=np.intp)
    if t == 1:
        return indices[:, None].copy()
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(len(indices)), t)),
                       dtype=np.intp, count=m * t)
    return indices[flat.reshape(m, t)]

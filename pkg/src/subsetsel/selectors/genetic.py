"""Genetic algorithm over fixed-cardinality binary chromosomes."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import InvalidArgumentError
from ..linalg import Dataset, SubsetSolution, subset_rss
from .base import Budget, Clock, RunDiagnostics, SolverConfig, SolverKind, StopReason, check_k


def repair(chrom: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Flip uniformly chosen bits in place until exactly ``k`` are set."""
    ones = np.flatnonzero(chrom)
    if len(ones) > k:
        chrom[rng.choice(ones, size=len(ones) - k, replace=False)] = False
    elif len(ones) < k:
        zeros = np.flatnonzero(~chrom)
        chrom[rng.choice(zeros, size=k - len(ones), replace=False)] = True
    return chrom


def random_population(p: int, k: int, s: int, rng: np.random.Generator) -> np.ndarray:
    P = np.zeros((s, p), dtype=bool)
    for row in P:
        row[rng.choice(p, size=k, replace=False)] = True
    return P


class _Fitness:
    def __init__(self, data: Dataset):
        self.data = data
        self.cache: dict[bytes, float] = {}

    def __call__(self, chrom: np.ndarray) -> float:
        key = np.packbits(chrom).tobytes()
        val = self.cache.get(key)
        if val is None:
            val = subset_rss(self.data, np.flatnonzero(chrom)).rss
            self.cache[key] = val
        return val


def genetic(data: Dataset, k: int, budget: Budget | None = None, config: SolverConfig | None = None,
            initial_population=None,
            on_generation: Callable[[int, np.ndarray], None] | None = None,
            ) -> tuple[SubsetSolution, RunDiagnostics]:
    """Evolve a population of ``k``-subsets until every chromosome is identical.

    Each generation makes ``s`` crossover trials (each taken with probability
    ``crossover_rate``) producing two repaired single-site crossover children,
    flips ``mutation_rate`` percent of the offspring bits (again repaired to
    ``k`` ones), and keeps the ``s`` lowest-RSS chromosomes of parents plus
    offspring. ``on_generation(gen, population)`` is called after
    initialization and after every generation.
    """
    k = check_k(data, k)
    budget = budget or Budget()
    config = config or SolverConfig(kind=SolverKind.GA)
    s = config.population_size
    if s < 2:
        raise InvalidArgumentError(f"GA population size must be >= 2, got {s}")
    p = data.p
    rng = np.random.default_rng(config.rng_seed)
    clock = Clock(budget)
    fitness = _Fitness(data)

    if initial_population is None:
        P = random_population(p, k, s, rng)
    else:
        P = np.asarray(initial_population, dtype=bool).copy()
        if P.shape != (s, p) or np.any(P.sum(axis=1) != k):
            raise InvalidArgumentError(f"initial population must be {s}x{p} with exactly {k} ones per row")
    F = np.array([fitness(c) for c in P])
    if on_generation:
        on_generation(0, P)

    mut_frac = config.mutation_rate / 100.0
    trace = [float(F.min())]
    gen, stop = 0, StopReason.CONVERGED
    while True:
        if np.all(P == P[0]):
            stop = StopReason.POPULATION_HOMOGENEOUS
            break
        reason = clock.check(gen)
        if reason:
            stop = reason
            break
        U, V = [], []
        for _ in range(s):
            if rng.random() < config.crossover_rate:
                a, b = rng.choice(s, size=2, replace=False)
                site = int(rng.integers(1, p)) if p > 1 else 1
                u, v = P[a], P[b]
                U.append(repair(np.concatenate([u[:site], v[site:]]), k, rng))
                V.append(repair(np.concatenate([v[:site], u[site:]]), k, rng))
        if U:
            O = np.vstack(U + V)
            nflip = rng.binomial(O.size, mut_frac)
            if nflip:
                flat = O.reshape(-1)
                pos = rng.choice(O.size, size=nflip, replace=False)
                flat[pos] = ~flat[pos]
                for row in np.unique(pos // p):
                    repair(O[row], k, rng)
            pool = np.vstack([P, O])
            FF = np.concatenate([F, [fitness(c) for c in O]])
            keep = np.argsort(FF, kind="stable")[:s]
            P, F = pool[keep], FF[keep]
        gen += 1
        trace.append(float(F.min()))
        if on_generation:
            on_generation(gen, P)

    best = P[int(np.argmin(F))]
    sol = subset_rss(data, np.flatnonzero(best))
    return sol, RunDiagnostics(gen, clock.elapsed, stop, trace, {"evaluations": len(fitness.cache)})

"""Budgeted solver x problem benchmark runs with a resumable results store.

The store is an append-only CSV with the columns in :data:`STORE_COLUMNS`.
Next to it the harness keeps

* ``<store>.plan.yaml``: the plan that produced it plus run metadata;
* ``<store>.problems.csv``: one row of grouping labels per problem;
* ``<store>.log.csv``: wall-clock time, status and error text for every
  attempted cell (failed cells only appear here and are retried on resume).
"""

from __future__ import annotations

import csv
import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable

import yaml

from .dataio import load_dataset
from .datagen import GenSpec, filter_grid, generate, standard_grid
from .errors import DataFormatError, InvalidArgumentError
from .linalg import Dataset
from .selectors import Budget, SolverConfig, SolverKind, StopReason, solve

log = logging.getLogger(__name__)

STORE_COLUMNS = ("problem_id", "solver_id", "k", "replication", "seed", "rss",
                 "cpu_seconds", "stop_reason", "support")
LOG_COLUMNS = ("problem_id", "solver_id", "k", "replication", "status", "wall_seconds",
               "overshoot", "message")
PROBLEM_COLUMNS = ("problem_id", "dim_type", "case", "correlation", "example", "snr", "n", "p", "source")
# allowed CPU overshoot past the limit, as a fraction of the limit
OVERSHOOT_ALLOWANCE = 0.25


@dataclass(frozen=True)
class Problem:
    problem_id: str
    ks: tuple[int, ...]
    spec: GenSpec | None = None
    path: str | None = None

    def load(self) -> Dataset:
        if self.spec is not None:
            return generate(self.spec)[0]
        return load_dataset(self.path)

    def labels(self) -> dict:
        s = self.spec
        if s is None:
            return {"problem_id": self.problem_id, "dim_type": "", "case": "", "correlation": "",
                    "example": "", "snr": "", "n": "", "p": "", "source": self.path}
        return {"problem_id": self.problem_id, "dim_type": s.dim_type, "case": s.case,
                "correlation": s.correlation.value, "example": int(s.example), "snr": f"{s.snr:g}",
                "n": s.n, "p": s.p, "source": "generated"}


@dataclass(frozen=True)
class SolverEntry:
    solver_id: str
    config: SolverConfig


@dataclass
class ExperimentPlan:
    problems: list[Problem]
    solvers: list[SolverEntry]
    budget: Budget = field(default_factory=Budget)
    replications: int = 1
    output_path: str = "results.csv"
    seed: int = 0
    name: str = "plan"
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.problems or not self.solvers:
            raise InvalidArgumentError("a plan needs at least one problem and one solver")
        if self.replications < 1:
            raise InvalidArgumentError("replications must be >= 1")
        ids = [p.problem_id for p in self.problems]
        if len(set(ids)) != len(ids):
            raise InvalidArgumentError("problem ids must be unique")
        sids = [s.solver_id for s in self.solvers]
        if len(set(sids)) != len(sids):
            raise InvalidArgumentError("solver ids must be unique")

    def cells(self) -> list[tuple[Problem, int, SolverEntry, int]]:
        return [(prob, k, solver, rep)
                for prob in self.problems
                for k in prob.ks
                for rep in range(self.replications)
                for solver in self.solvers]


@dataclass(frozen=True)
class RunRecord:
    problem_id: str
    solver_id: str
    k: int
    replication: int
    seed: int
    rss: float
    cpu_seconds: float
    stop_reason: str
    support: tuple[int, ...]

    @property
    def key(self) -> tuple[str, str, int, int]:
        return (self.problem_id, self.solver_id, self.k, self.replication)

    def to_row(self) -> list[str]:
        return [self.problem_id, self.solver_id, str(self.k), str(self.replication), str(self.seed),
                repr(float(self.rss)), f"{self.cpu_seconds:.6f}", self.stop_reason,
                ";".join(str(j + 1) for j in self.support)]

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        sup = row["support"].strip()
        return cls(row["problem_id"], row["solver_id"], int(row["k"]), int(row["replication"]),
                   int(row["seed"]), float(row["rss"]), float(row["cpu_seconds"]), row["stop_reason"],
                   tuple(int(s) - 1 for s in sup.split(";")) if sup else ())


# -- plan files ----------------------------------------------------------------

_SOLVER_KEYS = {"t": "t", "restarts": "restarts", "population": "population_size",
                "population_size": "population_size", "crossover_rate": "crossover_rate",
                "mutation_rate": "mutation_rate", "step_constant": "step_constant", "naive": "naive",
                "force": "force"}


def _solver_from_dict(d: dict) -> SolverEntry:
    d = dict(d)
    kind = SolverKind.parse(d.pop("kind"))
    sid = str(d.pop("id", kind.value))
    kwargs = {}
    for key, val in d.items():
        if key not in _SOLVER_KEYS:
            raise InvalidArgumentError(f"unknown solver option {key!r} for {sid}")
        kwargs[_SOLVER_KEYS[key]] = val
    return SolverEntry(sid, SolverConfig(kind=kind, **kwargs))


def _problems_from_dict(d: dict, base_dir: Path) -> list[Problem]:
    if "grid" in d:
        if d["grid"] != "standard":
            raise InvalidArgumentError(f"unknown grid {d['grid']!r}")
        specs = standard_grid(base_seed=int(d.get("seed", 0)))
        specs = filter_grid(specs, **(d.get("filter") or {}))
        ks = tuple(d.get("ks", ())) or None
        return [Problem(s.problem_id, ks or s.ks, spec=s) for s in specs]
    ks = tuple(int(k) for k in d.get("ks", ()))
    if not ks:
        raise InvalidArgumentError(f"problem {d.get('id')!r} has no target k values")
    if "gen" in d:
        g = dict(d["gen"])
        g.setdefault("ks", ks)
        spec = GenSpec.from_dict(g)
        return [Problem(str(d.get("id", spec.problem_id)), ks, spec=spec)]
    if "data" in d:
        path = Path(d["data"])
        if not path.is_absolute():
            path = base_dir / path
        return [Problem(str(d.get("id", path.stem)), ks, path=str(path))]
    raise InvalidArgumentError(f"problem entry needs 'grid', 'gen' or 'data': {d}")


def plan_from_dict(raw: dict, base_dir: Path | str = ".", output_path: str | None = None) -> ExperimentPlan:
    base_dir = Path(base_dir)
    b = raw.get("budget") or {}
    budget = Budget(cpu_seconds_limit=float(b.get("cpu_seconds", 600.0)),
                    max_iterations=int(b.get("max_iterations", 1_000_000)),
                    epsilon=float(b.get("epsilon", 1e-6)))
    problems = [p for d in raw.get("problems", []) for p in _problems_from_dict(d, base_dir)]
    solvers = [_solver_from_dict(d) for d in raw.get("solvers", [])]
    out = output_path or raw.get("output", "results.csv")
    if not Path(out).is_absolute() and output_path is None:
        out = str(base_dir / out)
    return ExperimentPlan(problems, solvers, budget, int(raw.get("replications", 1)), out,
                          int(raw.get("seed", 0)), str(raw.get("name", "plan")), raw)


def bundled_plans() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("subsetsel.plans").iterdir()
                  if p.name.endswith(".yaml"))


def load_plan(path_or_name, output_path: str | None = None) -> ExperimentPlan:
    """Load a YAML plan from a file, or a bundled plan by name (see :func:`bundled_plans`)."""
    path = Path(path_or_name)
    if path.exists():
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        base = path.parent
    elif str(path_or_name) in bundled_plans():
        raw = yaml.safe_load(resources.files("subsetsel.plans").joinpath(f"{path_or_name}.yaml")
                             .read_text(encoding="utf-8"))
        base = Path.cwd()
    else:
        raise FileNotFoundError(f"no plan file or bundled plan named {path_or_name!r}")
    if not isinstance(raw, dict):
        raise DataFormatError(f"plan {path_or_name!r} is not a mapping")
    return plan_from_dict(raw, base, output_path)


# -- store ---------------------------------------------------------------------

def read_store(path) -> list[RunRecord]:
    path = Path(path)
    if not path.exists():
        return []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if tuple(reader.fieldnames) != STORE_COLUMNS:
            raise DataFormatError(f"{path}: unexpected columns {reader.fieldnames}")
        return [RunRecord.from_row(r) for r in reader]


def read_problem_labels(store_path) -> dict[str, dict]:
    path = Path(f"{store_path}.problems.csv")
    if not path.exists():
        return {}
    with path.open(newline="", encoding="utf-8") as fh:
        return {r["problem_id"]: r for r in csv.DictReader(fh)}


def _append(path: Path, columns, rows: Iterable[list]):
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(columns)
        for row in rows:
            w.writerow(row)
        fh.flush()


def cell_seed(plan_seed: int, problem_id: str, solver_id: str, k: int, replication: int) -> int:
    h = zlib.crc32(f"{problem_id}|{solver_id}|{k}|{replication}".encode())
    return (int(plan_seed) * 1_000_003 + h) % (2 ** 63)


_DATA_CACHE: dict[str, Dataset] = {}


def _load_cached(problem: Problem) -> Dataset:
    data = _DATA_CACHE.get(problem.problem_id)
    if data is None:
        _DATA_CACHE.clear()
        data = _DATA_CACHE[problem.problem_id] = problem.load()
    return data


def _run_cell(args):
    problem, k, entry, rep, seed, budget = args
    config = replace(entry.config, rng_seed=seed)
    wall = time.perf_counter()
    try:
        data = _load_cached(problem)
        t0 = time.process_time()
        sol, diag = solve(data, k, config, budget)
        cpu = time.process_time() - t0
    except Exception as exc:  # recorded as a failed cell, never aborts the plan
        return None, (problem.problem_id, entry.solver_id, k, rep, "FAILED",
                      time.perf_counter() - wall, "", f"{type(exc).__name__}: {exc}")
    rec = RunRecord(problem.problem_id, entry.solver_id, k, rep, seed, sol.rss, cpu,
                    diag.stop_reason.value, sol.support)
    over = cpu > budget.cpu_seconds_limit * (1 + OVERSHOOT_ALLOWANCE)
    return rec, (problem.problem_id, entry.solver_id, k, rep, "OK", time.perf_counter() - wall,
                 int(over), "")


def run_plan(plan: ExperimentPlan, jobs: int = 1, progress=None) -> list[RunRecord]:
    """Execute every missing cell of ``plan`` and return the full store contents.

    Cells already present in the store are skipped, so an interrupted run can
    be resumed by calling this again. ``jobs > 1`` runs cells in separate
    processes (each run stays single-threaded); results are still written in
    plan order by this process only.
    """
    store = Path(plan.output_path)
    store.parent.mkdir(parents=True, exist_ok=True)
    existing = read_store(store)
    done = {r.key for r in existing}

    plan_file = Path(f"{store}.plan.yaml")
    meta = dict(plan.raw)
    meta["_run"] = {"jobs": int(jobs), "across_run_parallel": jobs > 1}
    plan_file.write_text(yaml.safe_dump(meta, sort_keys=False), encoding="utf-8")
    labels_path = Path(f"{store}.problems.csv")
    known = read_problem_labels(store)
    _append(labels_path, PROBLEM_COLUMNS,
            [[p.labels()[c] for c in PROBLEM_COLUMNS] for p in plan.problems if p.problem_id not in known])

    todo = []
    for prob, k, entry, rep in plan.cells():
        if (prob.problem_id, entry.solver_id, k, rep) in done:
            continue
        seed = cell_seed(plan.seed, prob.problem_id, entry.solver_id, k, rep)
        todo.append((prob, k, entry, rep, seed, plan.budget))
    log.info("%d cells to run (%d already in store)", len(todo), len(done))

    log_path = Path(f"{store}.log.csv")
    new_records = []

    def handle(result):
        rec, logrow = result
        if rec is not None:
            _append(store, STORE_COLUMNS, [rec.to_row()])
            new_records.append(rec)
        _append(log_path, LOG_COLUMNS, [list(logrow)])
        if progress:
            progress(rec, logrow)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for result in pool.map(_run_cell, todo, chunksize=1):
                handle(result)
    else:
        for args in todo:
            handle(_run_cell(args))
    return existing + new_records


def best_per_problem(records: Iterable[RunRecord]) -> dict[tuple[str, int], float]:
    """Lowest RSS found by any solver/replication for each ``(problem_id, k)``."""
    best: dict[tuple[str, int], float] = {}
    for r in records:
        key = (r.problem_id, r.k)
        if key not in best or r.rss < best[key]:
            best[key] = r.rss
    if not best:
        raise InvalidArgumentError("store is empty")
    return best


def timing_violations(records: Iterable[RunRecord], budget: Budget) -> list[RunRecord]:
    """Records whose CPU time exceeds the limit by more than the overshoot allowance."""
    cap = budget.cpu_seconds_limit * (1 + OVERSHOOT_ALLOWANCE)
    return [r for r in records if r.cpu_seconds > cap]


HARD_STOPS = (StopReason.TIME_LIMIT.value, StopReason.ITER_LIMIT.value)

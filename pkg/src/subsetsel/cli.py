"""Command-line interface: ``subsetsel {gen,solve,bench,report,oracle}``.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .dataio import load_dataset, save_dataset
from .datagen import GenSpec, generate
from .errors import CombinatorialLimitError, InvalidArgumentError, SubsetSelError
from .harness import STORE_COLUMNS, RunRecord, _append, load_plan, read_problem_labels, read_store, run_plan
from .metrics import report
from .selectors import Budget, SolverConfig, SolverKind, solve

SOLVER_NAMES = {
    "fs": (SolverKind.FS, None),
    "sffs": (SolverKind.SFFS, None),
    "sfs": (SolverKind.SFS, None),
    "sfs1": (SolverKind.SFS, 1),
    "sfs2": (SolverKind.SFS, 2),
    "dfo": (SolverKind.DFO, None),
    "dfon": (SolverKind.DFON, None),
    "ga": (SolverKind.GA, None),
    "exhaustive": (SolverKind.EXHAUSTIVE, None),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _budget_flags(p):
    g = p.add_argument_group("budget")
    g.add_argument("--time-limit", type=float, default=600.0, help="CPU seconds per run (default 600)")
    g.add_argument("--max-iters", type=int, default=1_000_000, help="iteration limit (default 1000000)")
    g.add_argument("--epsilon", type=float, default=1e-6, help="relative DFO stopping tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="subsetsel", description="Best subset selection solvers and benchmarks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--corr", choices=["constant", "exponential"], default="constant")
    g.add_argument("--rho", type=float, default=0.8)
    g.add_argument("--example", type=int, choices=[1, 2, 3], default=1)
    g.add_argument("--k0", type=int, default=10)
    g.add_argument("--snr", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="dataset path (.csv for text, anything else binary)")

    s = sub.add_parser("solve", help="run one solver on a dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--solver", required=True, choices=sorted(SOLVER_NAMES))
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--t", type=int, default=None, help="swap width for sfs")
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--population", type=int, default=10)
    s.add_argument("--cr", type=float, default=0.8)
    s.add_argument("--mr", type=float, default=0.2, help="GA mutation rate, percent of offspring bits")
    s.add_argument("--L", dest="step", default="auto", help="DFO step constant: auto (2 lambda_max), lambda_max, or a number")
    s.add_argument("--naive", action="store_true", help="use from-scratch subset solves")
    s.add_argument("--force", action="store_true", help="allow huge exhaustive enumerations")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--record", help="append a result row to this store file")
    _budget_flags(s)

    b = sub.add_parser("bench", help="run an experiment plan")
    b.add_argument("--plan", required=True, help="plan file or bundled plan name")
    b.add_argument("--store", help="override the plan's results path")
    b.add_argument("--jobs", type=int, default=1, help="runs in parallel (each single-threaded)")

    r = sub.add_parser("report", help="summarise a results store")
    r.add_argument("--store", required=True)
    r.add_argument("--out", required=True)

    o = sub.add_parser("oracle", help="exact best subset by enumeration")
    o.add_argument("--data", required=True)
    o.add_argument("--k", type=int, required=True)
    o.add_argument("--force", action="store_true")
    _budget_flags(o)
    return ap


def _budget(args) -> Budget:
    try:
        return Budget(args.time_limit, args.max_iters, args.epsilon)
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from None


def _fmt_support(support) -> str:
    return " ".join(str(j + 1) for j in support)


def cmd_gen(args) -> int:
    try:
        spec = GenSpec(n=args.n, p=args.p, correlation=args.corr, rho=args.rho, example=args.example,
                       k0=args.k0, snr=args.snr, rng_seed=args.seed, ks=())
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from None
    data, truth = generate(spec)
    out = Path(args.out)
    save_dataset(data, out)
    sidecar = Path(f"{out}.truth.json")
    sidecar.write_text(json.dumps({
        "spec": spec.to_dict(),
        "sigma2": truth.sigma2,
        "true_support": [j + 1 for j in truth.true_support],
        "beta0": truth.beta0.tolist(),
    }, indent=2), encoding="utf-8")
    print(f"seed: {args.seed}")
    print(f"n: {data.n}")
    print(f"p: {data.p}")
    print(f"sigma2: {truth.sigma2!r}")
    print(f"true_support: {_fmt_support(truth.true_support)}")
    print(f"wrote: {out}")
    return 0


def cmd_solve(args) -> int:
    kind, t = SOLVER_NAMES[args.solver]
    if args.t is not None:
        t = args.t
    budget = _budget(args)
    data = load_dataset(args.data)
    try:
        config = SolverConfig(kind=kind, t=t or 1, restarts=args.restarts, population_size=args.population,
                              crossover_rate=args.cr, mutation_rate=args.mr,
                              step_constant=args.step if args.step in ("auto", "lambda_max") else float(args.step),
                              rng_seed=args.seed, naive=args.naive, force=args.force)
        if not 1 <= args.k <= data.p:
            raise InvalidArgumentError(f"k={args.k} must lie in 1..p={data.p}")
        if kind is SolverKind.SFS and config.t > args.k:
            raise InvalidArgumentError(f"swap width t={config.t} exceeds k={args.k}")
    except (InvalidArgumentError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    t0 = time.process_time()
    sol, diag = solve(data, args.k, config, budget)
    cpu = time.process_time() - t0
    print(f"seed: {args.seed}")
    print(f"solver: {args.solver}")
    print(f"support: {_fmt_support(sol.support)}")
    print(f"rss: {sol.rss!r}")
    print(f"cpu_seconds: {cpu:.6f}")
    print(f"iterations: {diag.iterations}")
    print(f"stop_reason: {diag.stop_reason.value}")
    if args.record:
        rec = RunRecord(data.name, args.solver, args.k, 0, args.seed, sol.rss, cpu,
                        diag.stop_reason.value, sol.support)
        _append(Path(args.record), STORE_COLUMNS, [rec.to_row()])
    return 0


def cmd_bench(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    try:
        plan = load_plan(args.plan, output_path=args.store)
    except (FileNotFoundError, InvalidArgumentError) as exc:
        raise UsageError(str(exc)) from None
    print(f"seed: {plan.seed}")
    n_cells = len(plan.cells())
    records = run_plan(plan, jobs=args.jobs)
    keys = {(p.problem_id, s.solver_id, k, rep) for p, k, s, rep in plan.cells()}
    have = {r.key for r in records} & keys
    print(f"store: {plan.output_path}")
    print(f"cells: {len(have)}/{n_cells}")
    return 0 if len(have) == n_cells else 1


def cmd_report(args) -> int:
    records = read_store(args.store)
    if not records:
        raise SubsetSelError(f"store {args.store} is empty or missing")
    paths = report(records, args.out, read_problem_labels(args.store))
    for p in paths:
        print(p)
    return 0


def cmd_oracle(args) -> int:
    from .selectors import exhaustive

    data = load_dataset(args.data)
    if not 1 <= args.k <= data.p:
        raise UsageError(f"k={args.k} must lie in 1..p={data.p}")
    sol, diag = exhaustive(data, args.k, _budget(args), force=args.force)
    print(f"support: {_fmt_support(sol.support)}")
    print(f"f_star: {sol.rss!r}")
    print(f"stop_reason: {diag.stop_reason.value}")
    return 0


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "bench": cmd_bench, "report": cmd_report,
            "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"subsetsel {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except CombinatorialLimitError as exc:
        print(f"subsetsel {args.command}: {exc}", file=sys.stderr)
        return 1
    except (SubsetSelError, OSError, ValueError) as exc:
        print(f"subsetsel {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

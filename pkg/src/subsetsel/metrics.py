"""Solution-quality and timing summaries over a results store.

Relative Gap % compares each run to the best RSS any solver found on the
same problem; performance profiles give, per solver, the empirical CDF of
its measure divided by the best measure on each problem; box statistics
summarise gap samples the way a box plot draws them.
"""

from __future__ import annotations

import csv
import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .datagen import DIMENSIONS
from .errors import InvalidArgumentError, StoreInconsistencyError
from .harness import HARD_STOPS, RunRecord, best_per_problem

CLOCK_FLOOR = 1e-4
GAP_TOL = 1e-8
DEGENERATE_RTOL = 1e-12


class Measure(str, enum.Enum):
    CPU_SECONDS = "cpu_seconds"
    RSS = "rss"


def is_degenerate(f_star: float, scale: float = 1.0) -> bool:
    """True when ``f_star`` is too close to zero to divide by."""
    return f_star < DEGENERATE_RTOL * scale


def relative_gap_percent(f_tilde: float, f_star: float, scale: float = 1.0) -> float:
    """``100 (f_tilde - f_star) / f_star``.

    ``scale`` is the reference magnitude (normally ``||y||^2``); if ``f_star``
    is below ``1e-12 * scale`` the absolute gap ``100 (f_tilde - f_star)`` is
    returned instead (check with :func:`is_degenerate`).
    """
    if f_tilde < f_star - GAP_TOL * max(1.0, abs(f_star)):
        raise StoreInconsistencyError(f"value {f_tilde!r} is below the best value {f_star!r}")
    diff = max(f_tilde - f_star, 0.0)
    if is_degenerate(f_star, scale):
        return 100.0 * diff
    return 100.0 * diff / f_star


@dataclass
class ProfileCurve:
    solver_id: str
    points: list[tuple[float, float]] = field(default_factory=list)
    n_problems: int = 0

    def rho(self, tau: float) -> float:
        """Fraction of problems with ratio ``<= tau``."""
        val = 0.0
        for t, r in self.points:
            if t <= tau:
                val = r
            else:
                break
        return val


def _is_unsolved(rec: RunRecord) -> bool:
    return rec.stop_reason in HARD_STOPS and len(rec.support) == 0


def performance_profile(records: Iterable[RunRecord], measure: Measure | str = Measure.CPU_SECONDS,
                        solvers: Sequence[str] | None = None) -> list[ProfileCurve]:
    """Per-solver empirical CDF of ``t[p, s] / min_s t[p, s]``.

    A problem is a ``(problem_id, k, replication)`` cell. CPU times are floored
    at :data:`CLOCK_FLOOR`. Solvers with no record for a problem, or a
    budget-stopped record without a model, get ratio ``inf`` there.
    """
    measure = Measure(measure)
    records = list(records)
    if not records:
        raise InvalidArgumentError("empty store")
    if solvers is None:
        solvers = list(dict.fromkeys(r.solver_id for r in records))
    cells: dict[tuple, dict[str, float]] = defaultdict(dict)
    for r in records:
        if r.solver_id not in solvers:
            continue
        key = (r.problem_id, r.k, r.replication)
        if _is_unsolved(r):
            continue
        v = max(r.cpu_seconds, CLOCK_FLOOR) if measure is Measure.CPU_SECONDS else r.rss
        cells[key][r.solver_id] = v
    # problems where some solver has a record, including all-unsolved ones
    keys = sorted({(r.problem_id, r.k, r.replication) for r in records if r.solver_id in solvers})
    ratios: dict[str, list[float]] = {s: [] for s in solvers}
    for key in keys:
        vals = cells.get(key, {})
        best = min(vals.values()) if vals else math.inf
        for s in solvers:
            v = vals.get(s)
            if v is None or not math.isfinite(best):
                ratios[s].append(math.inf)
            elif best > 0:
                ratios[s].append(v / best)
            else:
                ratios[s].append(1.0 if v == 0 else math.inf)
    curves = []
    total = len(keys)
    for s in solvers:
        r = np.sort(np.asarray(ratios[s], dtype=float))
        finite = r[np.isfinite(r)]
        taus = np.unique(finite)
        pts = [(float(t), float(np.searchsorted(r, t, side="right")) / total) for t in taus]
        curves.append(ProfileCurve(s, pts, total))
    return curves


@dataclass
class BoxStats:
    q1: float
    median: float
    q3: float
    lower_whisker: float
    upper_whisker: float
    outliers: list[float]
    n: int


def _order_stat(x: np.ndarray, pos: float) -> float:
    # pos is 1-based, clamped to [1, n], linear interpolation between neighbours
    pos = min(max(pos, 1.0), float(len(x)))
    lo = int(math.floor(pos))
    frac = pos - lo
    if frac == 0.0 or lo >= len(x):
        return float(x[lo - 1])
    return float(x[lo - 1] + frac * (x[lo] - x[lo - 1]))


def box_stats(samples) -> BoxStats:
    """Quartiles at 1-based positions ``(n+1)/4``, ``(n+1)/2``, ``3(n+1)/4`` and 1.5 IQR fences.

    Whiskers end at the most extreme samples inside the fences; everything
    outside is an outlier.
    """
    x = np.sort(np.asarray(list(samples), dtype=float))
    if x.size == 0:
        raise InvalidArgumentError("box_stats needs at least one sample")
    n = x.size
    q1 = _order_stat(x, (n + 1) / 4)
    med = _order_stat(x, (n + 1) / 2)
    q3 = _order_stat(x, 3 * (n + 1) / 4)
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    outliers = [float(v) for v in x[(x < lo_fence) | (x > hi_fence)]]
    return BoxStats(q1, med, q3, float(min(inside.min(), q1)), float(max(inside.max(), q3)), outliers, n)


# -- report --------------------------------------------------------------------

def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.10g}"


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _regime(dim_type: str) -> str:
    return dim_type.split("-")[0] if dim_type else "other"


def gap_table(records: Sequence[RunRecord]) -> list[tuple[RunRecord, float, float, bool]]:
    """``(record, f_star, gap_percent, degenerate)`` for every record."""
    fstar = best_per_problem(records)
    out = []
    for r in records:
        f = fstar[(r.problem_id, r.k)]
        out.append((r, f, relative_gap_percent(r.rss, f), is_degenerate(f)))
    return out


def report(records: Sequence[RunRecord], output_dir, labels: dict[str, dict] | None = None,
           cpu_profile_converged_only: bool = True) -> list[Path]:
    """Write plot-ready CSV summaries of a store into ``output_dir``.

    * ``gaps.csv``: every record with its f* and Relative Gap %;
    * ``gap_box_<case>_<corr>_<regime>_ex<e>.csv``: box statistics of the gap
      per SNR/k group and solver (one file per figure panel column);
    * ``profile_<measure>_<case>_<corr>_<regime>.csv``: performance profiles;
      CPU profiles only use problems where no solver hit a hard stop;
    * ``cpu_table_<case>_<corr>.csv``: mean CPU seconds per dimension type.

    Problems without grid labels are grouped under ``other`` and summarised
    per problem.
    """
    records = list(records)
    if not records:
        raise InvalidArgumentError("empty store")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = labels or {}
    solvers = list(dict.fromkeys(r.solver_id for r in records))
    written: list[Path] = []

    gaps = gap_table(records)
    written.append(_write(out / "gaps.csv",
                          ["problem_id", "solver_id", "k", "replication", "rss", "f_star", "gap_percent",
                           "degenerate"],
                          [[r.problem_id, r.solver_id, r.k, r.replication, repr(r.rss), repr(f),
                            _fmt(g), int(d)] for r, f, g, d in gaps]))

    def lab(pid):
        d = labels.get(pid, {})
        return (d.get("case") or "", d.get("correlation") or "", _regime(d.get("dim_type") or ""),
                d.get("example") or "", d.get("snr") or "", d.get("dim_type") or "")

    # box statistics of the gap
    box: dict[tuple, dict[tuple, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r, _, g, _ in gaps:
        case, corr, regime, ex, snr, _ = lab(r.problem_id)
        if regime == "other":
            box[("other",)][(r.problem_id, r.solver_id)].append(g)
        else:
            box[(case, corr, regime, ex)][((float(snr), r.k), r.solver_id)].append(g)
    header = ["group", "solver_id", "q1", "median", "q3", "lo_whisker", "hi_whisker", "outliers"]
    for fkey in sorted(box, key=str):
        groups = box[fkey]
        rows = []
        order = sorted(groups, key=lambda gk: (str(gk[0]) if fkey == ("other",) else gk[0],
                                              solvers.index(gk[1])))
        for gk in order:
            b = box_stats(groups[gk])
            gname = gk[0] if fkey == ("other",) else f"snr={gk[0][0]:g}|k={gk[0][1]}"
            rows.append([gname, gk[1], _fmt(b.q1), _fmt(b.median), _fmt(b.q3), _fmt(b.lower_whisker),
                         _fmt(b.upper_whisker), ";".join(_fmt(v) for v in b.outliers)])
        name = "gap_box_other.csv" if fkey == ("other",) else "gap_box_{}_{}_{}_ex{}.csv".format(*fkey)
        written.append(_write(out / name, header, rows))

    # performance profiles per regime
    by_regime: dict[tuple, list[RunRecord]] = defaultdict(list)
    for r in records:
        case, corr, regime, *_ = lab(r.problem_id)
        by_regime[(case, corr, regime) if regime != "other" else ("other",)].append(r)
    for rkey, recs in sorted(by_regime.items(), key=lambda kv: str(kv[0])):
        tag = "_".join(rkey)
        for measure in Measure:
            use = recs
            if measure is Measure.CPU_SECONDS and cpu_profile_converged_only:
                stopped = {(r.problem_id, r.k, r.replication) for r in recs if r.stop_reason in HARD_STOPS}
                use = [r for r in recs if (r.problem_id, r.k, r.replication) not in stopped]
            rows = []
            if use:
                for c in performance_profile(use, measure, solvers):
                    rows += [[c.solver_id, _fmt(t), _fmt(rho)] for t, rho in c.points]
            name = f"profile_{'cpu' if measure is Measure.CPU_SECONDS else 'rss'}_{tag}.csv"
            written.append(_write(out / name, ["solver_id", "tau", "rho"], rows))

    # average CPU tables
    cpu: dict[tuple, dict[str, dict[str, list[float]]]] = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for r in records:
        case, corr, regime, _, _, dim = lab(r.problem_id)
        if regime == "other":
            cpu[("other",)][f"{r.problem_id}|k={r.k}"][r.solver_id].append(r.cpu_seconds)
        else:
            cpu[(case, corr)][dim][r.solver_id].append(r.cpu_seconds)
    dim_order = [d[0] for d in DIMENSIONS]
    for tkey in sorted(cpu, key=str):
        table = cpu[tkey]
        keys = sorted(table, key=lambda d: dim_order.index(d) if d in dim_order else len(dim_order))
        rows = [[d] + [_fmt(float(np.mean(table[d][s]))) if table[d][s] else "" for s in solvers]
                for d in keys]
        name = "cpu_table_other.csv" if tkey == ("other",) else "cpu_table_{}_{}.csv".format(*tkey)
        written.append(_write(out / name, ["Type"] + solvers, rows))
    return written

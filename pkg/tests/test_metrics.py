import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subsetsel.errors import InvalidArgumentError, StoreInconsistencyError
from subsetsel.harness import RunRecord
from subsetsel.metrics import (
    CLOCK_FLOOR, Measure, box_stats, is_degenerate, performance_profile, relative_gap_percent, report,
)


def rec(pid, sid, rss=1.0, cpu=1.0, stop="CONVERGED", k=2, rep=0, support=(0, 1)):
    return RunRecord(pid, sid, k, rep, 0, rss, cpu, stop, support)


def test_relative_gap_examples():
    assert relative_gap_percent(1.0, 1.0) == 0.0
    assert relative_gap_percent(1.5, 1.0) == 50.0
    assert is_degenerate(0.0)
    assert relative_gap_percent(0.25, 0.0) == 25.0
    with pytest.raises(StoreInconsistencyError):
        relative_gap_percent(0.9, 1.0)
    assert relative_gap_percent(1.0 - 1e-10, 1.0) == 0.0


def test_profile_two_solvers():
    recs = [rec("p1", "A", cpu=1.0), rec("p1", "B", cpu=2.0), rec("p2", "A", cpu=2.0),
            rec("p2", "B", cpu=1.0)]
    curves = {c.solver_id: c for c in performance_profile(recs, Measure.CPU_SECONDS)}
    for s in "AB":
        assert curves[s].rho(1.0) == 0.5 and curves[s].rho(2.0) == 1.0
        assert curves[s].points == [(1.0, 0.5), (2.0, 1.0)]


def test_profile_single_solver_and_best_solver():
    c, = performance_profile([rec("p1", "A", cpu=3.0), rec("p2", "A", cpu=0.2)])
    assert c.points == [(1.0, 1.0)]
    recs = [rec(f"p{i}", "A", cpu=0.5) for i in range(4)] + [rec(f"p{i}", "B", cpu=1.0 + i) for i in range(4)]
    curves = {c.solver_id: c for c in performance_profile(recs)}
    assert curves["A"].rho(1.0) == 1.0


def test_profile_clock_floor_and_unsolved():
    recs = [rec("p1", "A", cpu=0.0), rec("p1", "B", cpu=2e-4),
            rec("p2", "A", cpu=5.0, stop="TIME_LIMIT", support=()), rec("p2", "B", cpu=1.0)]
    curves = {c.solver_id: c for c in performance_profile(recs)}
    assert curves["A"].points == [(1.0, 0.5)]
    assert curves["B"].points == [(1.0, 0.5), (2e-4 / CLOCK_FLOOR, 1.0)]
    with pytest.raises(InvalidArgumentError):
        performance_profile([])


def test_profile_missing_solver_is_unsolved():
    recs = [rec("p1", "A"), rec("p1", "B"), rec("p2", "A")]
    curves = {c.solver_id: c for c in performance_profile(recs, Measure.RSS)}
    assert curves["B"].points[-1][1] == 0.5
    assert curves["A"].rho(1.0) == 1.0


@given(st.lists(st.tuples(st.integers(0, 5), st.sampled_from("ABC"),
                          st.floats(1e-6, 100.0, allow_nan=False)), min_size=1, max_size=40))
def test_profile_invariants(rows):
    seen = {}
    for p, s, t in rows:
        seen[(p, s)] = t
    recs = [rec(f"p{p}", s, cpu=t) for (p, s), t in seen.items()]
    curves = performance_profile(recs)
    for c in curves:
        taus = [t for t, _ in c.points]
        rhos = [r for _, r in c.points]
        assert taus == sorted(taus) and rhos == sorted(rhos)
        assert all(0 <= r <= 1 for r in rhos) and all(t >= 1 for t in taus)
    assert sum(c.rho(1.0) for c in curves) >= 1.0 - 1e-12


def test_box_stats_examples():
    b = box_stats([1, 2, 3, 4, 5])
    assert (b.q1, b.median, b.q3) == (1.5, 3.0, 4.5)
    assert b.outliers == [] and (b.lower_whisker, b.upper_whisker) == (1.0, 5.0)
    c = box_stats([7.0] * 6)
    assert c.q1 == c.median == c.q3 == 7.0 and c.outliers == []
    with pytest.raises(InvalidArgumentError):
        box_stats([])


def test_box_stats_outlier_beyond_fence():
    x = [1, 2, 3, 4, 5, 6, 7, 100]
    b = box_stats(x)
    assert b.q1 == 2.25 and b.q3 == 6.75
    assert b.outliers == [100.0] and b.upper_whisker == 7.0


def test_box_stats_five_point_heavy_tail():
    # under the (n+1)/4 convention q3 of {1,2,3,4,100} interpolates into the tail
    b = box_stats([1, 2, 3, 4, 100])
    assert b.q3 == 52.0 and b.q1 == 1.5
    assert b.upper_whisker == 100.0 and b.outliers == []


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60))
def test_box_stats_invariants(xs):
    b = box_stats(xs)
    assert b.lower_whisker <= b.q1 <= b.median <= b.q3 <= b.upper_whisker
    iqr = b.q3 - b.q1
    for v in b.outliers:
        assert v < b.q1 - 1.5 * iqr or v > b.q3 + 1.5 * iqr
    assert len(b.outliers) + sum(b.lower_whisker <= v <= b.upper_whisker for v in xs) == len(xs)


def test_box_stats_matches_numpy_weibull():
    rng = np.random.default_rng(0)
    for n in range(3, 40):
        x = rng.standard_normal(n)
        b = box_stats(x)
        q = np.quantile(x, [0.25, 0.5, 0.75], method="weibull")
        np.testing.assert_allclose([b.q1, b.median, b.q3], q, rtol=1e-12, atol=1e-12)


def _labelled_store():
    recs, labels = [], {}
    for dim in ("small-1", "small-2"):
        for ex in (1, 2):
            pid = f"{dim}-OD_constant_ex{ex}_snr1"
            labels[pid] = {"problem_id": pid, "dim_type": dim, "case": "OD", "correlation": "constant",
                           "example": str(ex), "snr": "1"}
            for k in (5, 10):
                for s, (rss, cpu) in {"A": (1.0, 0.01 * ex), "B": (1.2, 0.02 * k)}.items():
                    recs.append(rec(pid, s, rss=rss * k, cpu=cpu, k=k))
    return recs, labels


def test_report_files_and_cpu_means(tmp_path):
    recs, labels = _labelled_store()
    paths = report(recs, tmp_path, labels)
    names = {p.name for p in paths}
    assert names == {"gaps.csv", "gap_box_OD_constant_small_ex1.csv", "gap_box_OD_constant_small_ex2.csv",
                     "profile_cpu_OD_constant_small.csv", "profile_rss_OD_constant_small.csv",
                     "cpu_table_OD_constant.csv"}
    with open(tmp_path / "cpu_table_OD_constant.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["Type"] for r in rows] == ["small-1", "small-2"]
    want_a = np.mean([0.01, 0.01, 0.02, 0.02])
    want_b = np.mean([0.1, 0.2, 0.1, 0.2])
    assert float(rows[0]["A"]) == pytest.approx(want_a) and float(rows[0]["B"]) == pytest.approx(want_b)
    with open(tmp_path / "gap_box_OD_constant_small_ex1.csv", newline="") as fh:
        box = list(csv.DictReader(fh))
    assert [r["group"] for r in box] == ["snr=1|k=5", "snr=1|k=5", "snr=1|k=10", "snr=1|k=10"]
    assert float(box[1]["median"]) == pytest.approx(20.0)
    with open(tmp_path / "profile_rss_OD_constant_small.csv", newline="") as fh:
        assert next(csv.reader(fh)) == ["solver_id", "tau", "rho"]


def test_report_unlabelled_and_gap_zero_per_problem(tmp_path):
    recs = [rec("x", "A", rss=2.0), rec("x", "B", rss=3.0), rec("y", "A", rss=5.0), rec("y", "B", rss=4.0)]
    report(recs, tmp_path)
    with open(tmp_path / "gaps.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    by = {}
    for r in rows:
        by.setdefault(r["problem_id"], []).append(float(r["gap_percent"]))
    assert all(min(v) == 0.0 for v in by.values())
    assert (tmp_path / "gap_box_other.csv").exists() and (tmp_path / "cpu_table_other.csv").exists()
    assert not math.isnan(max(max(v) for v in by.values()))

"""Least-squares kernels for subset selection.

Every selector in the package reduces to evaluating the subset residual sum
of squares ``q(S) = min_b ||y - X[:, S] b||^2`` and its changes when
predictors are dropped from or added to ``S``. This module provides

* exact, from-scratch evaluation (:func:`subset_rss`, :func:`gain`,
  :func:`reduction`), used as the reference path;
* :class:`SubsetFit`, which factors ``X[:, S]`` once and then scores many
  candidate drops/adds in closed form;
* :class:`NaiveSubsetFit`, the same interface backed by one full solve per
  candidate, for cross-checking.

Predictor indices are 0-based throughout the library; 1-based indices only
appear in files and command-line output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import ConstantColumnError, InvalidArgumentError, InvalidSupportError

# Relative pivot threshold below which a subset design is treated as rank deficient.
RANK_RTOL = 1e-12
# Eigenvalue floor (relative to the squared column scale) for batched quadratic forms.
QUAD_RTOL = 1e-10
STANDARDIZED_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix and response for one (BSS) instance.

    ``X`` is ``n x p`` and ``y`` has length ``n``. When ``standardized`` is true
    every column of ``X`` is checked to have zero mean and unit l2-norm.
    Arrays are copied to read-only float64 storage so a dataset can be shared
    between concurrent solver runs.
    """

    X: np.ndarray
    y: np.ndarray
    name: str = "dataset"
    standardized: bool = False
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, order="C", copy=True)
        y = np.array(self.y, dtype=np.float64, copy=True).reshape(-1)
        if X.ndim != 2:
            raise InvalidArgumentError(f"X must be 2-dimensional, got shape {X.shape}")
        n, p = X.shape
        if n < 1 or p < 1:
            raise InvalidArgumentError(f"X must have n >= 1 and p >= 1, got {X.shape}")
        if y.shape[0] != n:
            raise InvalidArgumentError(f"y has {y.shape[0]} entries, expected {n}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("X and y must be finite")
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != p:
                raise InvalidArgumentError(f"{len(names)} column names for {p} columns")
            object.__setattr__(self, "column_names", names)
        if self.standardized:
            means = np.abs(X.mean(axis=0))
            norms = np.abs(np.linalg.norm(X, axis=0) - 1.0)
            if means.max() > STANDARDIZED_ATOL or norms.max() > STANDARDIZED_ATOL:
                raise InvalidArgumentError(
                    "dataset flagged standardized but columns are not zero-mean/unit-norm "
                    f"(max |mean|={means.max():.3g}, max |norm-1|={norms.max():.3g})"
                )
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @cached_property
    def y_norm2(self) -> float:
        return float(self.y @ self.y)

    @cached_property
    def col_scale(self) -> float:
        """Largest squared column norm of ``X`` (1 for standardized data)."""
        return float(max(np.max(np.einsum("ij,ij->j", self.X, self.X)), 1e-300))


@dataclass(frozen=True)
class SubsetSolution:
    """Least-squares fit restricted to a support.

    ``beta`` holds the coefficients of the columns in ``support`` (same order).
    """

    support: tuple[int, ...]
    beta: np.ndarray = field(repr=False)
    rss: float

    @property
    def size(self) -> int:
        return len(self.support)

    def dense_beta(self, p: int) -> np.ndarray:
        out = np.zeros(p)
        out[list(self.support)] = self.beta
        return out


def standardize_columns(X, column_names: Sequence[str] | None = None) -> np.ndarray:
    """Center each column and scale it to unit l2-norm.

    Raises :class:`ConstantColumnError` for a column with no variation.
    """
    X = np.asarray(X, dtype=np.float64)
    centered = X - X.mean(axis=0)
    norms = np.linalg.norm(centered, axis=0)
    scale = np.maximum(np.linalg.norm(X, axis=0), 1.0)
    bad = np.flatnonzero(norms <= 1e-12 * scale)
    if bad.size:
        j = int(bad[0])
        raise ConstantColumnError(column_names[j] if column_names is not None else j + 1)
    return centered / norms


def as_support(indices: Iterable[int], p: int) -> tuple[int, ...]:
    """Validate ``indices`` against ``p`` and return them sorted as a tuple."""
    idx = [int(i) for i in indices]
    out = tuple(sorted(set(idx)))
    if len(out) != len(idx):
        raise InvalidSupportError(f"support contains duplicate indices: {idx}")
    if out and (out[0] < 0 or out[-1] >= p):
        raise InvalidSupportError(f"support indices must lie in 0..{p - 1}, got {idx}")
    return out


def _lstsq(A: np.ndarray, y: np.ndarray):
    """Solve ``min ||y - A b||`` by pivoted QR; minimum-norm fallback if rank deficient.

    Returns ``(beta, Q_range, rank)`` where ``Q_range`` is an orthonormal basis
    of ``range(A)``.
    """
    m = A.shape[1]
    Q, R, perm = sla.qr(A, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(R))
    rank = int(np.count_nonzero(diag > RANK_RTOL * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank == m:
        beta = np.empty(m)
        beta[perm] = sla.solve_triangular(R, Q.T @ y, check_finite=False)
    else:
        beta = sla.lstsq(A, y, cond=RANK_RTOL, lapack_driver="gelsd", check_finite=False)[0]
    return beta, Q[:, :rank], rank, (Q, R, perm)


def subset_rss(data: Dataset, support: Iterable[int]) -> SubsetSolution:
    """Exact least-squares fit of ``y`` on the columns in ``support``.

    Rank-deficient supports receive the minimum-norm coefficient vector; the
    returned RSS is the (unique) minimum either way.
    """
    S = as_support(support, data.p)
    if not S:
        return SubsetSolution((), np.zeros(0), data.y_norm2)
    A = data.X[:, S]
    beta = _lstsq(A, data.y)[0]
    r = data.y - A @ beta
    return SubsetSolution(S, beta, float(r @ r))


def gain(data: Dataset, support: Iterable[int], drop: Iterable[int]) -> float:
    """RSS increase ``q(S \\ J) - q(S)`` from dropping ``drop`` out of ``support``."""
    S = as_support(support, data.p)
    J = as_support(drop, data.p)
    if not set(J) <= set(S):
        raise InvalidArgumentError(f"drop set {J} is not a subset of the support {S}")
    if not J:
        return 0.0
    rest = sorted(set(S) - set(J))
    return subset_rss(data, rest).rss - subset_rss(data, S).rss


def reduction(data: Dataset, support: Iterable[int], add: Iterable[int]) -> float:
    """RSS decrease ``q(S) - q(S u Q)`` from adding ``add`` to ``support``."""
    S = as_support(support, data.p)
    Q = as_support(add, data.p)
    if set(Q) & set(S):
        raise InvalidArgumentError(f"add set {Q} overlaps the support {S}")
    if not Q:
        return 0.0
    return subset_rss(data, S).rss - subset_rss(data, S + Q).rss


def spectral_bound(data: Dataset, rtol: float = 1e-12, max_iter: int = 20_000) -> float:
    """Largest eigenvalue of ``X^T X`` by power iteration from a fixed start.

    Works on whichever Gram matrix (``X^T X`` or ``X X^T``) is smaller. If the
    iteration has not settled after ``max_iter`` steps the dense symmetric
    eigensolver is used instead.
    """
    X = data.X
    G = X.T @ X if data.p <= data.n else X @ X.T
    v = np.ones(G.shape[0]) / np.sqrt(G.shape[0])
    lam = float(v @ G @ v)
    if lam <= 0.0:
        # start orthogonal to the dominant eigenvector; use a deterministic pseudo-random start
        v = np.random.default_rng(0).standard_normal(G.shape[0])
        v /= np.linalg.norm(v)
        lam = float(v @ G @ v)
    for _ in range(max_iter):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = float(v @ G @ v)
        if abs(new - lam) <= rtol * abs(new):
            return new
        lam = new
    return float(sla.eigvalsh(G, subset_by_index=[G.shape[0] - 1, G.shape[0] - 1])[0])


def full_least_squares(data: Dataset) -> np.ndarray:
    """OLS coefficients on all ``p`` columns (minimum-norm when ``p > n`` or rank deficient)."""
    return sla.lstsq(data.X, data.y, lapack_driver="gelsd", check_finite=False)[0]


def quad_forms(C: np.ndarray, b: np.ndarray, sets: np.ndarray, tol: float,
               chunk: int = 65_536) -> np.ndarray:
    """Evaluate ``b[S] @ pinv(C[S, S]) @ b[S]`` for every row ``S`` of ``sets``.

    ``C`` must be symmetric positive semidefinite. Eigenvalues of the ``t x t``
    blocks at or below ``tol`` are treated as zero.
    """
    sets = np.asarray(sets, dtype=np.intp)
    if sets.ndim == 1:
        sets = sets[:, None]
    m, t = sets.shape
    out = np.empty(m)
    if m == 0:
        return out
    if t == 1:
        s = sets[:, 0]
        c = C[s, s]
        bb = b[s]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:] = np.where(c > tol, bb * bb / np.where(c > tol, c, 1.0), 0.0)
        return out
    for lo in range(0, m, chunk):
        blk = sets[lo:lo + chunk]
        Cs = C[blk[:, :, None], blk[:, None, :]]
        w, V = np.linalg.eigh(Cs)
        proj = np.einsum("mij,mi->mj", V, b[blk])
        keep = w > tol
        out[lo:lo + chunk] = np.sum(np.where(keep, proj * proj / np.where(keep, w, 1.0), 0.0), axis=1)
    return out


class SubsetFit:
    """One factorization of ``X[:, S]`` reused to score many drops and adds.

    Drop gains use ``G(J) = beta_J^T (M_JJ)^{-1} beta_J`` with
    ``M = (X_S^T X_S)^{-1}``; when ``X_S`` is rank deficient they fall back to
    one exact solve per candidate. Add reductions project the candidate
    columns off ``range(X_S)`` and solve the small normal equations of the
    projected block against the current residual, which is valid for any rank.
    """

    def __init__(self, data: Dataset, support: Iterable[int]):
        self.data = data
        self.support = as_support(support, data.p)
        self._pos = {j: i for i, j in enumerate(self.support)}
        y = data.y
        if not self.support:
            self.beta = np.zeros(0)
            self.basis = np.zeros((data.n, 0))
            self.rank = 0
            self.residual = y.copy()
            self._R = None
        else:
            A = data.X[:, self.support]
            self.beta, self.basis, self.rank, qr = _lstsq(A, y)
            self.residual = y - A @ self.beta
            self._R = qr if self.rank == len(self.support) else None
        self.rss = float(self.residual @ self.residual)

    @property
    def full_rank(self) -> bool:
        return self.rank == len(self.support)

    def solution(self) -> SubsetSolution:
        return SubsetSolution(self.support, self.beta, self.rss)

    @cached_property
    def _inv_gram(self) -> np.ndarray:
        _, R, perm = self._R
        Rinv = sla.solve_triangular(R, np.eye(R.shape[0]), check_finite=False)
        Mp = Rinv @ Rinv.T
        M = np.empty_like(Mp)
        M[np.ix_(perm, perm)] = Mp
        return M

    def drop_gains(self, sets) -> np.ndarray:
        """Gain ``q(S \\ J) - q(S)`` for each row ``J`` of ``sets`` (predictor indices)."""
        sets = np.atleast_2d(np.asarray(sets, dtype=np.intp))
        if sets.size == 0:
            return np.zeros(sets.shape[0])
        try:
            pos = np.vectorize(self._pos.__getitem__, otypes=[np.intp])(sets)
        except KeyError as exc:
            raise InvalidArgumentError(f"drop index {exc.args[0]} not in support") from None
        if sets.shape[1] == len(self.support):
            return np.full(sets.shape[0], self.data.y_norm2 - self.rss)
        if not self.full_rank:
            return NaiveSubsetFit(self.data, self.support).drop_gains(sets)
        return quad_forms(self._inv_gram, self.beta, pos, tol=0.0)

    def add_reductions(self, sets) -> np.ndarray:
        """Reduction ``q(S) - q(S u Q)`` for each row ``Q`` of ``sets`` (predictor indices)."""
        sets = np.atleast_2d(np.asarray(sets, dtype=np.intp))
        if sets.size == 0:
            return np.zeros(sets.shape[0])
        cand, inv = np.unique(sets, return_inverse=True)
        if any(int(c) in self._pos for c in cand):
            raise InvalidArgumentError("add set overlaps the support")
        Z = self.data.X[:, cand]
        if self.rank:
            Z = Z - self.basis @ (self.basis.T @ Z)
        b = Z.T @ self.residual
        tol = QUAD_RTOL * self.data.col_scale
        pos = inv.reshape(sets.shape)
        if sets.shape[1] == 1:
            c = np.einsum("ij,ij->j", Z, Z)
            return quad_forms(np.diag(c), b, pos, tol)
        return quad_forms(Z.T @ Z, b, pos, tol)


class NaiveSubsetFit(SubsetFit):
    """Reference implementation: every candidate is solved from scratch."""

    def __init__(self, data: Dataset, support: Iterable[int]):
        self.data = data
        self.support = as_support(support, data.p)
        self._pos = {j: i for i, j in enumerate(self.support)}
        sol = subset_rss(data, self.support)
        self.beta = sol.beta
        self.rss = sol.rss
        self.residual = data.y - data.X[:, self.support] @ self.beta
        self.rank = int(np.linalg.matrix_rank(data.X[:, self.support])) if self.support else 0
        self.basis = None

    def drop_gains(self, sets) -> np.ndarray:
        sets = np.atleast_2d(np.asarray(sets, dtype=np.intp))
        S = set(self.support)
        out = np.empty(sets.shape[0])
        for i, J in enumerate(sets):
            if not set(J.tolist()) <= S:
                raise InvalidArgumentError(f"drop set {J.tolist()} not in support")
            out[i] = subset_rss(self.data, sorted(S - set(J.tolist()))).rss - self.rss
        return out

    def add_reductions(self, sets) -> np.ndarray:
        sets = np.atleast_2d(np.asarray(sets, dtype=np.intp))
        out = np.empty(sets.shape[0])
        for i, Q in enumerate(sets):
            if set(Q.tolist()) & set(self.support):
                raise InvalidArgumentError("add set overlaps the support")
            out[i] = self.rss - subset_rss(self.data, self.support + tuple(Q.tolist())).rss
        return out


def fit_subset(data: Dataset, support: Iterable[int], naive: bool = False) -> SubsetFit:
    """Factor ``X[:, support]``; ``naive=True`` selects the from-scratch reference path."""
    return NaiveSubsetFit(data, support) if naive else SubsetFit(data, support)

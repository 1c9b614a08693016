"""Synthetic sparse regression problems with correlated Gaussian designs.

Rows of ``X`` are drawn i.i.d. from ``N(0, Sigma)`` with constant or
exponentially decaying correlation, the columns are standardized, and the
response is ``y = X beta0 + eps`` with the noise variance set from a target
signal-to-noise ratio ``||X beta0||^2 / sigma^2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .errors import GenerationError, InvalidArgumentError
from .linalg import Dataset, standardize_columns


class Correlation(str, enum.Enum):
    CONSTANT = "constant"
    EXPONENTIAL = "exponential"


class Example(enum.IntEnum):
    EX1_EQUISPACED = 1
    EX2_PREFIX = 2
    EX3_RANDOM = 3


# (type, p, n for OD, n for UD)
DIMENSIONS = (
    ("small-1", 20, 100, 10),
    ("small-2", 40, 200, 20),
    ("small-3", 60, 300, 30),
    ("small-4", 80, 400, 40),
    ("medium-1", 200, 1000, 100),
    ("medium-2", 300, 1000, 100),
    ("medium-3", 400, 2000, 100),
    ("medium-4", 500, 2000, 100),
    ("large-1", 800, 4000, 200),
    ("large-2", 1000, 4000, 200),
    ("large-3", 1500, 8000, 300),
    ("large-4", 2000, 8000, 300),
)
SNRS = (0.05, 0.5, 1.0, 5.0)
TARGET_KS = (5, 10)


@dataclass(frozen=True)
class GenSpec:
    """Parameters of one synthetic problem.

    ``dim_type`` and ``case`` ("OD"/"UD") are labels used for grouping in
    reports; ``ks`` are the subset sizes the problem is meant to be solved at.
    """

    n: int
    p: int
    correlation: Correlation = Correlation.CONSTANT
    rho: float = 0.8
    example: Example = Example.EX1_EQUISPACED
    k0: int = 10
    snr: float = 5.0
    rng_seed: int = 0
    dim_type: str = ""
    case: str = ""
    ks: tuple[int, ...] = field(default=TARGET_KS)

    def __post_init__(self):
        object.__setattr__(self, "correlation", Correlation(self.correlation))
        object.__setattr__(self, "example", Example(int(self.example)))
        object.__setattr__(self, "ks", tuple(int(k) for k in self.ks))
        if self.n < 1 or self.p < 1:
            raise InvalidArgumentError(f"n and p must be positive, got n={self.n}, p={self.p}")
        if not 1 <= self.k0 <= self.p:
            raise InvalidArgumentError(f"k0={self.k0} must lie in 1..p={self.p}")
        if not self.snr > 0:
            raise InvalidArgumentError(f"snr must be positive, got {self.snr}")
        if not -1 < self.rho < 1:
            raise InvalidArgumentError(f"rho must lie in (-1, 1), got {self.rho}")

    @property
    def problem_id(self) -> str:
        head = f"{self.dim_type}-{self.case}" if self.dim_type else f"n{self.n}-p{self.p}"
        return f"{head}_{self.correlation.value}_ex{int(self.example)}_snr{self.snr:g}_s{self.rng_seed}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["correlation"] = self.correlation.value
        d["example"] = int(self.example)
        d["ks"] = list(self.ks)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenSpec":
        return cls(**d)


@dataclass(frozen=True)
class GroundTruth:
    beta0: np.ndarray = field(repr=False)
    sigma2: float
    true_support: tuple[int, ...]


def covariance(p: int, kind: Correlation | str = Correlation.CONSTANT, rho: float = 0.8) -> np.ndarray:
    """Constant (``rho`` off the diagonal) or exponential (``rho**|i-j|``) correlation matrix."""
    if not -1 < rho < 1:
        raise InvalidArgumentError(f"rho must lie in (-1, 1), got {rho}")
    kind = Correlation(kind)
    if kind is Correlation.CONSTANT:
        S = np.full((p, p), float(rho))
        np.fill_diagonal(S, 1.0)
        return S
    i = np.arange(p)
    return float(rho) ** np.abs(i[:, None] - i[None, :]).astype(float)


def _streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("design", "support", "values", "noise")
    seqs = np.random.SeedSequence(int(seed)).spawn(len(names))
    return {name: np.random.default_rng(s) for name, s in zip(names, seqs)}


def make_beta0(spec: GenSpec, streams: dict | None = None) -> np.ndarray:
    """True coefficient vector for the spec's example scheme.

    Example 1 places ones at positions ``ceil(j p / k0)`` (1-based) for
    ``j = 1..k0``; example 2 on the first ``k0`` positions; example 3 on a
    random ``k0``-subset with values drawn uniformly from ``{1, ..., 5}``.
    """
    p, k0 = spec.p, spec.k0
    beta = np.zeros(p)
    if spec.example is Example.EX1_EQUISPACED:
        idx = [math.ceil(j * p / k0) - 1 for j in range(1, k0 + 1)]
        beta[idx] = 1.0
    elif spec.example is Example.EX2_PREFIX:
        beta[:k0] = 1.0
    else:
        streams = streams or _streams(spec.rng_seed)
        idx = np.sort(streams["support"].choice(p, size=k0, replace=False))
        beta[idx] = streams["values"].integers(1, 6, size=k0)
    return beta


def sample_design(spec: GenSpec, rng: np.random.Generator) -> np.ndarray:
    """Raw (unstandardized) ``n x p`` design with rows ``~ N(0, Sigma)``."""
    Sigma = covariance(spec.p, spec.correlation, spec.rho)
    try:
        C = sla.cholesky(Sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise GenerationError(f"covariance is not positive definite: {exc}") from exc
    Z = rng.standard_normal((spec.n, spec.p))
    return Z @ C.T


def generate(spec: GenSpec) -> tuple[Dataset, GroundTruth]:
    """Draw one problem instance; identical specs give bit-identical output."""
    streams = _streams(spec.rng_seed)
    X = standardize_columns(sample_design(spec, streams["design"]))
    beta0 = make_beta0(spec, streams)
    signal = X @ beta0
    sigma2 = float(signal @ signal) / spec.snr
    if not sigma2 > 0:
        raise GenerationError("signal X @ beta0 is identically zero; SNR calibration impossible")
    y = signal + streams["noise"].normal(0.0, math.sqrt(sigma2), size=spec.n)
    data = Dataset(X, y, name=spec.problem_id, standardized=True)
    truth = GroundTruth(beta0, sigma2, tuple(int(j) for j in np.flatnonzero(beta0)))
    return data, truth


def standard_grid(base_seed: int = 0, k0: int = 10, rho: float = 0.8) -> list[GenSpec]:
    """Full factorial test grid: 12 dimension types x OD/UD x 4 SNRs x 3 examples x 2 correlations."""
    specs = []
    i = 0
    for dim_type, p, n_od, n_ud in DIMENSIONS:
        for case, n in (("OD", n_od), ("UD", n_ud)):
            for corr in Correlation:
                for example in Example:
                    for snr in SNRS:
                        specs.append(GenSpec(n=n, p=p, correlation=corr, rho=rho, example=example,
                                             k0=k0, snr=snr, rng_seed=base_seed + i,
                                             dim_type=dim_type, case=case, ks=TARGET_KS))
                        i += 1
    return specs


def filter_grid(specs, **criteria) -> list[GenSpec]:
    """Keep specs whose attributes match; each criterion is a value or collection of values."""
    out = []
    for s in specs:
        good = True
        for key, want in criteria.items():
            if want is None:
                continue
            have = getattr(s, key)
            have = have.value if isinstance(have, enum.Enum) and not isinstance(have, int) else have
            wants = want if isinstance(want, (list, tuple, set, frozenset)) else [want]
            if have not in {w.value if isinstance(w, Correlation) else w for w in wants}:
                good = False
                break
        if good:
            out.append(s)
    return out


def with_seed(spec: GenSpec, seed: int) -> GenSpec:
    return replace(spec, rng_seed=int(seed))

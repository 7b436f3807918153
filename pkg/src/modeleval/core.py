"""Domain types, seeded randomness and elementary loss functions.

Randomness
----------
Every random draw in the package comes from a :class:`RandomStream`, a
counter-based SplitMix64 generator.  A stream is identified by a
:class:`SeedSpec` ``(master_seed, stream_id)``; its 64-bit key is::

    key = mix64(master_seed ^ mix64(stream_id ^ 0x9E3779B97F4A7C15))

and the ``i``-th output (``i = 1, 2, ...``) is ``mix64(key + i * GOLDEN)``
with ``GOLDEN = 0x9E3779B97F4A7C15`` and ``mix64`` the SplitMix64 finalizer
(Steele, Lea & Flood 2014).  All arithmetic is modulo 2**64, so a stream is
bit-identical on every platform.  Child streams are derived with
:func:`derive_stream`, never by advancing a shared generator, so results
do not depend on evaluation order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence, TypeVar

import numpy as np

SCHEMA_VERSION = "1.0"

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class ModelEvalError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ModelEvalError, ValueError):
    """Invalid input data: shapes, labels, files, plans."""


class DegenerateStatisticError(ModelEvalError, ValueError):
    """A statistic is undefined for the given input (zero variance etc.)."""


# ---------------------------------------------------------------------------
# randomness


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (bijective on 64-bit words)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_MIX1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class SeedSpec:
    """Identifies one reproducible random stream."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value <= MASK64:
                raise DataError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    def to_dict(self) -> dict:
        return {"master_seed": self.master_seed, "stream_id": self.stream_id}


def as_seed(seed: SeedSpec | int) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))


def derive_stream(seed: SeedSpec | int, round_index: int) -> SeedSpec:
    """Child seed for ``round_index``; injective in ``round_index`` for a fixed parent."""
    seed = as_seed(seed)
    if round_index < 0:
        raise DataError("round_index must be non-negative")
    # mix64 is a bijection and GOLDEN is odd, so distinct rounds give distinct children
    child = mix64((mix64(seed.stream_id) + (round_index + 1) * GOLDEN) & MASK64)
    return SeedSpec(seed.master_seed, child)


class RandomStream:
    """Counter-based SplitMix64 stream.  Vectorized; portable across platforms."""

    def __init__(self, seed: SeedSpec | int):
        self.seed = as_seed(seed)
        self._key = mix64(self.seed.master_seed ^ mix64(self.seed.stream_id ^ GOLDEN))
        self._counter = 0

    def next_u64(self, size: int) -> np.ndarray:
        steps = np.arange(self._counter + 1, self._counter + size + 1, dtype=np.uint64)
        self._counter += size
        with np.errstate(over="ignore"):
            return _mix64_array(np.uint64(self._key) + steps * np.uint64(GOLDEN))

    def uniform(self, size: int) -> np.ndarray:
        """Doubles in [0, 1) with 53 random bits each."""
        return (self.next_u64(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def integers(self, high: int, size: int) -> np.ndarray:
        """Integers in [0, high).  Bias is below high / 2**53."""
        if high < 1:
            raise DataError("high must be >= 1")
        return np.minimum(np.floor(self.uniform(size) * high).astype(np.int64), high - 1)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.next_u64(n), kind="stable").astype(np.int64)

    def normal(self, size: int) -> np.ndarray:
        """Standard normal draws via the Box-Muller transform."""
        u1 = self.uniform(size)
        u2 = self.uniform(size)
        return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


# ---------------------------------------------------------------------------
# data containers


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def as_labels(values: Any, name: str = "labels") -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise DataError(f"{name} must be non-empty")
    if arr.dtype.kind not in "iu":
        if arr.dtype.kind == "f" and np.all(np.isfinite(arr)) and np.all(arr == np.round(arr)):
            arr = arr.astype(np.int64)
        else:
            raise DataError(f"{name} must contain integer class ids")
    if np.any(arr < 0):
        raise DataError(f"{name} must be non-negative class ids")
    return arr.astype(np.int64)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus dense integer labels ``0..K-1``."""

    features: np.ndarray
    labels: np.ndarray
    class_count: int | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError("features must be an n x d matrix with n, d >= 1")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or infinite values")
        y = as_labels(self.labels)
        if y.shape[0] != X.shape[0]:
            raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        K = int(y.max()) + 1 if self.class_count is None else int(self.class_count)
        if K < 1 or y.max() >= K:
            raise DataError(f"labels must lie in [0, {K})")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "class_count", K)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.class_count)


@dataclass(frozen=True)
class LearnerSpec:
    """A registered learner name together with its hyperparameters."""

    name: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)

    def with_params(self, **params) -> "LearnerSpec":
        return LearnerSpec(self.name, {**self.hyperparameters, **params})

    def label(self) -> str:
        if not self.hyperparameters:
            return self.name
        args = ",".join(f"{k}={v}" for k, v in sorted(self.hyperparameters.items()))
        return f"{self.name}({args})"

    def to_dict(self) -> dict:
        return {"name": self.name, "hyperparameters": dict(sorted(self.hyperparameters.items()))}


@dataclass(frozen=True, eq=False)
class CorrectnessMatrix:
    """Binary n x M matrix; entry (i, j) is 1 iff model j is right on example i."""

    entries: np.ndarray

    def __post_init__(self):
        E = np.asarray(self.entries)
        if E.ndim != 2 or E.shape[0] < 1 or E.shape[1] < 1:
            raise DataError("correctness matrix must be n x M with n, M >= 1")
        if not np.all((E == 0) | (E == 1)):
            raise DataError("correctness matrix entries must be 0 or 1")
        object.__setattr__(self, "entries", _frozen(E.astype(np.int64)))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def M(self) -> int:
        return self.entries.shape[1]

    def model_correct_counts(self) -> np.ndarray:
        """Per-model number of correct examples (column sums)."""
        return self.entries.sum(axis=0)

    def example_correct_counts(self) -> np.ndarray:
        """Per-example number of models that got it right (row sums)."""
        return self.entries.sum(axis=1)

    def total_correct(self) -> int:
        return int(self.entries.sum())

    def accuracies(self) -> np.ndarray:
        return self.model_correct_counts() / self.n

    def row_sum_histogram(self) -> dict[int, int]:
        counts = np.bincount(self.example_correct_counts(), minlength=self.M + 1)
        return {m: int(counts[m]) for m in range(self.M, -1, -1)}


def _canonical(value: Any) -> Any:
    if isinstance(value, float):
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, (np.floating,)):
        return _canonical(float(value))
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_canonical(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, Mapping):
        return {str(k): _canonical(v) for k, v in value.items()}
    if hasattr(value, "to_dict"):
        return _canonical(value.to_dict())
    return value


@dataclass(frozen=True)
class RoundRecord:
    """One per-round (or per-half) accuracy pair logged by a paired test."""

    round: int
    half: int
    acc1: float
    acc2: float

    @property
    def diff(self) -> float:
        return self.acc1 - self.acc2

    def to_dict(self) -> dict:
        return {"round": self.round, "half": self.half, "acc1": self.acc1,
                "acc2": self.acc2, "diff": self.diff}


@dataclass(frozen=True)
class TestReport:
    """Outcome of one hypothesis test.  Build with :meth:`from_p`."""

    __test__ = False  # keep pytest from collecting this class

    test: str
    statistic: float
    statistic_name: str
    df: tuple[float, float]
    p_value: float
    alpha: float
    reject_null: bool
    warnings: tuple[str, ...] = ()
    rounds: tuple[RoundRecord, ...] = ()
    details: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")
        if self.reject_null != (self.p_value < self.alpha):
            raise ValueError("reject_null must equal p_value < alpha")

    @classmethod
    def from_p(cls, test: str, statistic: float, statistic_name: str, df, p_value: float,
               alpha: float, **kw) -> "TestReport":
        p = min(1.0, max(0.0, float(p_value)))
        if isinstance(df, (int, float)):
            df = (float(df), 0.0)
        return cls(test, float(statistic), statistic_name, (float(df[0]), float(df[1])),
                   p, float(alpha), p < alpha, **kw)

    def to_dict(self) -> dict:
        return _canonical({
            "schema_version": SCHEMA_VERSION,
            "kind": "test_report",
            "test": self.test,
            "statistic": self.statistic,
            "statistic_name": self.statistic_name,
            "df": list(self.df),
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject_null": self.reject_null,
            "warnings": list(self.warnings),
            "rounds": [r.to_dict() for r in self.rounds],
            "details": dict(self.details),
        })


CI_METHODS = ("none", "normal_approx", "se_t", "percentile")


@dataclass(frozen=True)
class EvalReport:
    """Point estimate, per-round values and an optional confidence interval."""

    estimator: str
    point_estimate: float
    per_round: tuple[float, ...]
    ci_lower: float | None = None
    ci_upper: float | None = None
    ci_method: str = "none"
    seed: SeedSpec | None = None
    skipped_rounds: int = 0
    warnings: tuple[str, ...] = ()
    details: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.ci_method not in CI_METHODS:
            raise ValueError(f"unknown ci_method {self.ci_method!r}")
        object.__setattr__(self, "per_round", tuple(float(v) for v in self.per_round))
        if self.ci_method != "none":
            if self.ci_lower is None or self.ci_upper is None:
                raise ValueError("interval bounds missing")
            if not self.ci_lower <= self.point_estimate <= self.ci_upper:
                raise ValueError("interval must contain the point estimate")

    def with_ci(self, lower: float, upper: float, method: str) -> "EvalReport":
        # a percentile interval can miss the mean of a skewed round distribution;
        # widen it so the interval always brackets the reported point
        lower = min(lower, self.point_estimate)
        upper = max(upper, self.point_estimate)
        return EvalReport(self.estimator, self.point_estimate, self.per_round, lower, upper,
                          method, self.seed, self.skipped_rounds, self.warnings, self.details)

    def to_dict(self) -> dict:
        return _canonical({
            "schema_version": SCHEMA_VERSION,
            "kind": "eval_report",
            "estimator": self.estimator,
            "point": self.point_estimate,
            "rounds": list(self.per_round),
            "ci": {"method": self.ci_method, "lower": self.ci_lower, "upper": self.ci_upper},
            "seed_provenance": self.seed.to_dict() if self.seed is not None else None,
            "skipped_rounds": self.skipped_rounds,
            "warnings": list(self.warnings),
            "details": dict(self.details),
        })


# ---------------------------------------------------------------------------
# losses


def _paired(y_true, y_pred, labels: bool = True) -> tuple[np.ndarray, np.ndarray]:
    if labels:
        a, b = as_labels(y_true, "y_true"), as_labels(y_pred, "y_pred")
    else:
        a = np.asarray(y_true, dtype=np.float64).ravel()
        b = np.asarray(y_pred, dtype=np.float64).ravel()
        if a.size == 0:
            raise DataError("empty input")
    if a.shape != b.shape:
        raise DataError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def accuracy(y_true, y_pred) -> float:
    """Fraction of exact label matches (one minus the mean 0-1 loss)."""
    a, b = _paired(y_true, y_pred)
    return int(np.count_nonzero(a == b)) / a.shape[0]


def error_rate(y_true, y_pred) -> float:
    a, b = _paired(y_true, y_pred)
    return int(np.count_nonzero(a != b)) / a.shape[0]


def mse(y_true, y_pred) -> float:
    a, b = _paired(y_true, y_pred, labels=False)
    return float(np.mean((b - a) ** 2))


def optimism_bias(acc_train: float, acc_test: float) -> float:
    """Training minus test accuracy; negative when the test score is higher."""
    return acc_train - acc_test


def correctness_matrix(y_true, predictions: Sequence) -> CorrectnessMatrix:
    if len(predictions) == 0:
        raise DataError("need at least one prediction vector")
    y = as_labels(y_true, "y_true")
    columns = []
    for j, pred in enumerate(predictions):
        p = as_labels(pred, f"predictions[{j}]")
        if p.shape != y.shape:
            raise DataError(f"predictions[{j}] has length {p.shape[0]}, expected {y.shape[0]}")
        columns.append(p == y)
    return CorrectnessMatrix(np.column_stack(columns).astype(np.int64))


# ---------------------------------------------------------------------------
# execution

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``items``; results come back in input order for any thread count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))

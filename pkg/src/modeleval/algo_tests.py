"""Tests comparing learning algorithms by refitting them on resampled data.

In every round both learners are fit to the same training indices and scored
on the same test indices.  Fitting seeds come from
``derive_stream(derive_stream(seed, round), slot)``; with ``independent_seeds``
the two learners use slots 1 and 2, otherwise both use slot 0.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import (
    DataError,
    Dataset,
    DegenerateStatisticError,
    LearnerSpec,
    RoundRecord,
    SeedSpec,
    TestReport,
    as_seed,
    derive_stream,
)
from .learners import fit, score
from .numerics import f_sf, t_two_sided_p
from .resampling import (
    SplitPlan,
    five_by_two_plan,
    kfold_plan,
    repeated_holdout_plan,
)

DEFAULT_REPETITIONS = 30
NOT_RECOMMENDED = "not recommended in practice: elevated false positive rate"


def _fit_seeds(seed: SeedSpec, round_index: int, independent: bool) -> tuple[SeedSpec, SeedSpec]:
    base = derive_stream(seed, round_index)
    if independent:
        return derive_stream(base, 1), derive_stream(base, 2)
    shared = derive_stream(base, 0)
    return shared, shared


def _paired_round(spec1: LearnerSpec, spec2: LearnerSpec, data: Dataset, plan: SplitPlan,
                  seeds: tuple[SeedSpec, SeedSpec]) -> tuple[float, float]:
    train = data.subset(plan.train_indices)
    test = data.subset(plan.test_indices)
    acc1 = score(fit(spec1, train, seeds[0]), test)
    acc2 = score(fit(spec2, train, seeds[1]), test)
    return acc1, acc2


def paired_t_statistic(diffs: Sequence[float]) -> tuple[float, list[str]]:
    """mean * sqrt(k) / sd with the k-1 denominator; handles zero variance."""
    d = np.asarray(diffs, dtype=np.float64)
    k = d.size
    if k < 2:
        raise DataError("need at least two differences")
    if np.all(d == 0.0):
        raise DegenerateStatisticError("indistinguishable: every difference is zero")
    mean = float(d.mean())
    if np.all(d == d[0]):
        return math.copysign(math.inf, mean), ["constant nonzero difference: p set to 0"]
    var = float(np.sum((d - mean) ** 2) / (k - 1))
    return mean * math.sqrt(k) / math.sqrt(var), []


def _t_report(name: str, records: list[RoundRecord], alpha: float,
              extra_warnings: Sequence[str] = (), details: dict | None = None) -> TestReport:
    t, warnings = paired_t_statistic([r.diff for r in records])
    df = len(records) - 1
    return TestReport.from_p(name, t, "t", df, t_two_sided_p(t, df), alpha,
                             warnings=tuple(extra_warnings) + tuple(warnings),
                             rounds=tuple(records), details=details or {})


def paired_t_resampled(spec1: LearnerSpec, spec2: LearnerSpec, data: Dataset,
                       repetitions: int = DEFAULT_REPETITIONS, test_fraction: float = 1 / 3,
                       seed: SeedSpec | int = 0, alpha: float = 0.05, stratify: bool = False,
                       independent_seeds: bool = False) -> TestReport:
    """Resampled (k-hold-out) paired t test over repeated random splits."""
    if repetitions < 2:
        raise DataError("repetitions must be >= 2")
    seed = as_seed(seed)
    plans = repeated_holdout_plan(data.n, data.labels, test_fraction, repetitions, stratify,
                                  derive_stream(seed, 0))
    fit_root = derive_stream(seed, 1)
    records = []
    for r, plan in enumerate(plans):
        acc1, acc2 = _paired_round(spec1, spec2, data, plan,
                                   _fit_seeds(fit_root, r, independent_seeds))
        records.append(RoundRecord(r, 0, acc1, acc2))
    return _t_report("paired_t_resampled", records, alpha, (NOT_RECOMMENDED,),
                     {"repetitions": repetitions, "test_fraction": test_fraction})


def paired_t_kfold(spec1: LearnerSpec, spec2: LearnerSpec, data: Dataset, k: int = 10,
                   stratify: bool = True, seed: SeedSpec | int = 0, alpha: float = 0.05,
                   independent_seeds: bool = False) -> TestReport:
    """k-fold cross-validated paired t test; one fold plan shared by both learners."""
    seed = as_seed(seed)
    folds = kfold_plan(data.n, data.labels, k, stratify, derive_stream(seed, 0))
    fit_root = derive_stream(seed, 1)
    records = []
    for i, plan in enumerate(folds.splits()):
        acc1, acc2 = _paired_round(spec1, spec2, data, plan,
                                   _fit_seeds(fit_root, i, independent_seeds))
        records.append(RoundRecord(i, 0, acc1, acc2))
    return _t_report("paired_t_kfold", records, alpha,
                     ("training sets overlap across folds; " + NOT_RECOMMENDED,),
                     {"k": k, "fold_plan_sha256": folds.fingerprint()})


def five_by_two_records(spec1: LearnerSpec, spec2: LearnerSpec, data: Dataset,
                        seed: SeedSpec | int = 0, stratify: bool = True,
                        independent_seeds: bool = False) -> list[RoundRecord]:
    """The ten (replication, half) accuracy pairs of a 5x2 cross-validation."""
    seed = as_seed(seed)
    plan = five_by_two_plan(data.n, data.labels, derive_stream(seed, 0), stratify)
    fit_root = derive_stream(seed, 1)
    records = []
    for i, halves in enumerate(plan):
        for j, split in enumerate(halves):
            seeds = _fit_seeds(fit_root, 2 * i + j, independent_seeds)
            acc1, acc2 = _paired_round(spec1, spec2, data, split, seeds)
            records.append(RoundRecord(i, j, acc1, acc2))
    return records


def five_by_two_variances(records: Sequence[RoundRecord]) -> list[float]:
    """Per-replication s_i^2 = (A - mean)^2 + (B - mean)^2 of the two half differences."""
    if len(records) != 10:
        raise DataError("5x2 statistics need exactly 10 records")
    out = []
    for i in range(5):
        a, b = records[2 * i].diff, records[2 * i + 1].diff
        mean = (a + b) / 2.0
        out.append((a - mean) ** 2 + (b - mean) ** 2)
    return out


def t_5x2_from_records(records: Sequence[RoundRecord]) -> float:
    s2 = five_by_two_variances(records)
    total = sum(s2)
    if total == 0.0:
        raise DegenerateStatisticError("zero variance across replications")
    return records[0].diff / math.sqrt(total / 5.0)


def f_5x2_from_records(records: Sequence[RoundRecord]) -> float:
    s2 = five_by_two_variances(records)
    total = sum(s2)
    if total == 0.0:
        raise DegenerateStatisticError("zero variance across replications")
    return sum(r.diff ** 2 for r in records) / (2.0 * total)


def paired_t_5x2cv(spec1: LearnerSpec, spec2: LearnerSpec, data: Dataset,
                   seed: SeedSpec | int = 0, alpha: float = 0.05, stratify: bool = True,
                   independent_seeds: bool = False,
                   records: Sequence[RoundRecord] | None = None) -> TestReport:
    """Dietterich's 5x2cv paired t test (df = 5).

    The numerator is the first replication's first-half difference.
    """
    if records is None:
        records = five_by_two_records(spec1, spec2, data, seed, stratify, independent_seeds)
    t = t_5x2_from_records(records)
    return TestReport.from_p("paired_t_5x2cv", t, "t", 5, t_two_sided_p(t, 5), alpha,
                             rounds=tuple(records),
                             details={"s2": five_by_two_variances(records)})


def combined_f_5x2cv(spec1: LearnerSpec, spec2: LearnerSpec, data: Dataset,
                     seed: SeedSpec | int = 0, alpha: float = 0.05, stratify: bool = True,
                     independent_seeds: bool = False,
                     records: Sequence[RoundRecord] | None = None) -> TestReport:
    """Alpaydin's combined 5x2cv F test, F(10, 5), upper tail."""
    if records is None:
        records = five_by_two_records(spec1, spec2, data, seed, stratify, independent_seeds)
    f = f_5x2_from_records(records)
    return TestReport.from_p("combined_f_5x2cv", f, "F", (10, 5), f_sf(f, 10, 5), alpha,
                             rounds=tuple(records),
                             details={"s2": five_by_two_variances(records)})

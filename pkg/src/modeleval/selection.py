"""Hyperparameter selection: k-fold grid search, three-way holdout, nested CV.

A :class:`Grid` must say, for every axis with more than one value, whether
larger or smaller values give the simpler model.  That declaration orders the
configurations from simplest to most complex; ties in the best-mean rule and
the one-standard-error rule both resolve towards the simple end.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .core import (
    SCHEMA_VERSION,
    DataError,
    Dataset,
    EvalReport,
    LearnerSpec,
    SeedSpec,
    _canonical,
    as_seed,
    derive_stream,
)
from .estimators import _fit_and_score, evaluate_kfold
from .learners import fit, score
from .resampling import FoldPlan, SplitPlan, holdout_split, kfold_plan

RULES = ("best_mean", "one_se")


@dataclass(frozen=True)
class Grid:
    base: str
    axes: Mapping[str, Sequence[Any]]
    simpler: Mapping[str, str] = field(default_factory=dict)
    fixed: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.axes or any(len(v) == 0 for v in self.axes.values()):
            raise DataError("grid must have at least one value on every axis")
        for axis, values in self.axes.items():
            direction = self.simpler.get(axis)
            if len(values) > 1 and direction not in ("larger", "smaller"):
                raise DataError(f"declare whether larger or smaller {axis!r} is simpler")

    def complexity_order(self) -> list[dict[str, Any]]:
        """All configurations, simplest first."""
        ranked = []
        for axis, values in self.axes.items():
            reverse = self.simpler.get(axis) == "larger"
            ranked.append(sorted(values, reverse=reverse))
        return [dict(zip(self.axes, combo)) for combo in itertools.product(*ranked)]

    def spec(self, config: Mapping[str, Any]) -> LearnerSpec:
        return LearnerSpec(self.base, {**self.fixed, **config})

    def to_dict(self) -> dict:
        return {"base": self.base, "axes": {k: list(v) for k, v in self.axes.items()},
                "simpler": dict(self.simpler), "fixed": dict(self.fixed)}


@dataclass(frozen=True)
class ConfigResult:
    config: Mapping[str, Any]
    mean_acc: float
    se_acc: float
    fold_accs: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"config": dict(self.config), "mean_acc": self.mean_acc, "se_acc": self.se_acc,
                "fold_accs": list(self.fold_accs)}


@dataclass(frozen=True)
class SelectionReport:
    per_config: tuple[ConfigResult, ...]
    chosen: Mapping[str, Any]
    rule: str
    final_test_acc: float | None = None
    refit_on_all: bool = False
    complexity_order: tuple[Mapping[str, Any], ...] = ()
    details: Mapping[str, Any] = field(default_factory=dict)

    def result_for(self, config: Mapping[str, Any]) -> ConfigResult:
        for r in self.per_config:
            if dict(r.config) == dict(config):
                return r
        raise KeyError(config)

    def to_dict(self) -> dict:
        return _canonical({
            "schema_version": SCHEMA_VERSION,
            "kind": "selection_report",
            "rule": self.rule,
            "chosen": dict(self.chosen),
            "final_test_acc": self.final_test_acc,
            "refit_on_all": self.refit_on_all,
            "complexity_order": [dict(c) for c in self.complexity_order],
            "per_config": [r.to_dict() for r in self.per_config],
            "details": dict(self.details),
        })


def standard_error(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        return 0.0
    return float(v.std(ddof=1) / math.sqrt(v.size))


def choose(results: Sequence[ConfigResult], rule: str) -> ConfigResult:
    """Pick from ``results`` (ordered simplest first) by ``rule``."""
    if rule not in RULES:
        raise DataError(f"unknown selection rule {rule!r}")
    if not results:
        raise DataError("nothing to choose from")
    best = results[0]
    for r in results[1:]:
        if r.mean_acc > best.mean_acc:
            best = r
    if rule == "best_mean":
        return best
    threshold = best.mean_acc - best.se_acc
    return next(r for r in results if r.mean_acc >= threshold)


def _score_grid(grid: Grid, data: Dataset, folds: FoldPlan, seed: SeedSpec) -> list[ConfigResult]:
    results = []
    for config in grid.complexity_order():
        rep = evaluate_kfold(grid.spec(config), data, folds, seed)
        results.append(ConfigResult(config, rep.point_estimate, standard_error(rep.per_round),
                                    rep.per_round))
    return results


def select_kfold(grid: Grid, data: Dataset, k: int = 10, stratify: bool = True,
                 test_fraction: float | None = 0.3, rule: str = "best_mean",
                 seed: SeedSpec | int = 0, refit_on_all: bool = False) -> SelectionReport:
    """Withhold a test set, rank every configuration by k-fold CV on the rest,
    refit the winner on the whole training portion and score it once on the test set.

    ``test_fraction=None`` skips the withheld test set (selection on all data).
    """
    seed = as_seed(seed)
    if test_fraction is None:
        train_idx, split = np.arange(data.n), None
    else:
        split = holdout_split(data.n, data.labels, test_fraction, stratify, derive_stream(seed, 0))
        train_idx = split.train_indices
    train = data.subset(train_idx)
    folds = kfold_plan(train.n, train.labels, k, stratify, derive_stream(seed, 1))
    results = _score_grid(grid, train, folds, derive_stream(seed, 2))
    chosen = choose(results, rule)

    test_accesses = 0
    final = None
    if split is not None:
        model = fit(grid.spec(chosen.config), train, derive_stream(seed, 3))
        final = score(model, data.subset(split.test_indices))
        test_accesses += 1
    if refit_on_all:
        fit(grid.spec(chosen.config), data, derive_stream(seed, 4))
    return SelectionReport(tuple(results), dict(chosen.config), rule, final, refit_on_all,
                           tuple(grid.complexity_order()),
                           {"k": k, "fold_plan_sha256": folds.fingerprint(),
                            "test_accesses": test_accesses, "grid": grid.to_dict()})


def three_way_holdout_select(grid: Grid, data: Dataset,
                             fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
                             seed: SeedSpec | int = 0, stratify: bool = True,
                             refit_on_all: bool = False) -> SelectionReport:
    """Fit on train, select on validation, refit on train+validation, test once."""
    f_train, f_val, f_test = fractions
    if min(fractions) <= 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError("fractions must be positive and sum to 1")
    seed = as_seed(seed)
    outer = holdout_split(data.n, data.labels, f_test, stratify, derive_stream(seed, 0))
    rest = outer.train_indices
    inner = holdout_split(rest.size, data.labels[rest], f_val / (f_train + f_val), stratify,
                          derive_stream(seed, 1))
    train_idx, val_idx = rest[inner.train_indices], rest[inner.test_indices]
    if train_idx.size == 0 or val_idx.size == 0 or outer.test_indices.size == 0:
        raise DataError("a partition is empty")
    train, val = data.subset(train_idx), data.subset(val_idx)

    results = []
    for config in grid.complexity_order():
        acc = score(fit(grid.spec(config), train, derive_stream(seed, 2)), val)
        results.append(ConfigResult(config, acc, 0.0, (acc,)))
    chosen = choose(results, "best_mean")

    merged = data.subset(rest)
    model = fit(grid.spec(chosen.config), merged, derive_stream(seed, 3))
    final = score(model, data.subset(outer.test_indices))
    if refit_on_all:
        fit(grid.spec(chosen.config), data, derive_stream(seed, 4))
    return SelectionReport(tuple(results), dict(chosen.config), "best_mean", final, refit_on_all,
                           tuple(grid.complexity_order()),
                           {"sizes": [int(train_idx.size), int(val_idx.size),
                                      int(outer.test_indices.size)],
                            "test_accesses": 1, "grid": grid.to_dict()})


@dataclass(frozen=True)
class NestedCVReport:
    report: EvalReport
    chosen: tuple[Mapping[str, Any], ...]
    outer_plan: FoldPlan
    inner: tuple[tuple[ConfigResult, ...], ...]

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d["chosen_per_fold"] = _canonical([dict(c) for c in self.chosen])
        d["inner_results"] = _canonical([[r.to_dict() for r in fold] for fold in self.inner])
        return d


def nested_cv(grid: Grid, data: Dataset, outer_k: int = 5, inner_k: int = 2,
              stratify: bool = True, seed: SeedSpec | int = 0,
              rule: str = "best_mean") -> NestedCVReport:
    """Inner k-fold loop selects, outer loop estimates accuracy of the whole procedure.

    The outer folds are ``kfold_plan(..., derive_stream(seed, 0))`` and the outer
    refits use ``derive_stream(derive_stream(seed, 2), fold)``, the same seeds
    :func:`evaluate_kfold` would use with ``seed=derive_stream(seed, 2)``.
    """
    if outer_k < 2 or inner_k < 2:
        raise DataError("outer_k and inner_k must be >= 2")
    seed = as_seed(seed)
    outer = kfold_plan(data.n, data.labels, outer_k, stratify, derive_stream(seed, 0))
    inner_root = derive_stream(seed, 1)
    fit_root = derive_stream(seed, 2)
    accs, chosen, inner_tables = [], [], []
    for i, split in enumerate(outer.splits()):
        outer_train = data.subset(split.train_indices)
        inner = kfold_plan(outer_train.n, outer_train.labels, inner_k, stratify,
                           derive_stream(inner_root, i))
        for fold in inner.folds:
            if np.intersect1d(split.train_indices[fold], split.test_indices).size:
                raise AssertionError("outer test index leaked into an inner fold")
        results = _score_grid(grid, outer_train, inner, derive_stream(inner_root, i))
        winner = choose(results, rule)
        try:
            _, acc = _fit_and_score(grid.spec(winner.config), data, split,
                                    derive_stream(fit_root, i))
        except DataError as exc:
            raise DataError(f"outer fold {i}: {exc}") from exc
        accs.append(acc)
        chosen.append(dict(winner.config))
        inner_tables.append(tuple(results))
    distinct = sorted({tuple(sorted(c.items())) for c in chosen})
    report = EvalReport("nested_cv", float(np.mean(accs)), accs, seed=seed,
                        details={"outer_k": outer_k, "inner_k": inner_k, "rule": rule,
                                 "distinct_chosen_configs": len(distinct)})
    return NestedCVReport(report, tuple(chosen), outer, tuple(inner_tables))

"""Performance estimates: holdout, repeated holdout, k-fold, bootstrap family, CIs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    DataError,
    Dataset,
    DegenerateStatisticError,
    EvalReport,
    LearnerSpec,
    SeedSpec,
    as_labels,
    as_seed,
    derive_stream,
)
from .learners import FittedModel, fit, predict, score
from .numerics import normal_quantile, t_quantile
from .resampling import BootstrapPlan, FoldPlan, SplitPlan, stratified_subsample

E632_WEIGHT = 0.632


@dataclass(frozen=True)
class BootstrapEstimate:
    acc_boot: float
    per_round_oob: tuple[float, ...]
    per_round_resub: tuple[float, ...]
    method: str = "oob"
    per_round: tuple[float, ...] = ()
    omega_per_round: tuple[float, ...] = ()
    gamma: float | None = None
    skipped_rounds: int = 0

    def to_report(self, seed: SeedSpec | None = None) -> EvalReport:
        rounds = self.per_round or self.per_round_oob
        details = {"per_round_oob": list(self.per_round_oob),
                   "per_round_resub": list(self.per_round_resub)}
        if self.gamma is not None:
            details["gamma"] = self.gamma
            details["omega_per_round"] = list(self.omega_per_round)
        return EvalReport(f"bootstrap_{self.method}", self.acc_boot, rounds, seed=seed,
                          skipped_rounds=self.skipped_rounds, details=details)


@dataclass(frozen=True)
class LearningCurvePoint:
    train_size: int
    train_acc: float
    test_acc: float

    def to_dict(self) -> dict:
        return {"train_size": self.train_size, "train_acc": self.train_acc,
                "test_acc": self.test_acc}


def _check_plan(plan: SplitPlan, data: Dataset) -> None:
    for side in (plan.train_indices, plan.test_indices):
        if side.size and side.max() >= data.n:
            raise DataError("plan indexes past the end of the dataset")
    if plan.test_indices.size == 0:
        raise DataError("plan has an empty test side")
    if plan.train_indices.size == 0:
        raise DataError("plan has an empty training side")


def _fit_and_score(spec: LearnerSpec, data: Dataset, plan: SplitPlan,
                   seed: SeedSpec) -> tuple[float, float]:
    """Fit on the training side; return (resubstitution, test) accuracy."""
    _check_plan(plan, data)
    train = data.subset(plan.train_indices)
    if np.unique(train.labels).size < 2 <= np.unique(data.labels).size:
        raise DataError(f"degenerate split: training data holds only class {train.labels[0]}")
    model = fit(spec, train, seed)
    return score(model, train), score(model, data.subset(plan.test_indices))


def evaluate_holdout(spec: LearnerSpec, data: Dataset, plan: SplitPlan,
                     seed: SeedSpec | int = 0, confidence: float | None = None) -> EvalReport:
    seed = as_seed(seed)
    resub, acc = _fit_and_score(spec, data, plan, seed)
    report = EvalReport("holdout", acc, (acc,), seed=seed,
                        details={"train_acc": resub, "n_test": int(plan.test_indices.size)})
    if confidence is not None:
        lo, hi = ci_normal_approx(acc, int(plan.test_indices.size), confidence)
        report = report.with_ci(lo, hi, "normal_approx")
    return report


def evaluate_repeated_holdout(spec: LearnerSpec, data: Dataset, plans: Sequence[SplitPlan],
                              seed: SeedSpec | int = 0) -> EvalReport:
    """Mean test accuracy over independent holdout splits (Monte Carlo CV)."""
    if len(plans) < 1:
        raise DataError("need at least one plan")
    seed = as_seed(seed)
    accs = [_fit_and_score(spec, data, p, derive_stream(seed, r))[1]
            for r, p in enumerate(plans)]
    warnings = ()
    if len(plans) > 1:
        warnings = ("test sets of different repetitions may overlap",)
    return EvalReport("repeated_holdout", float(np.mean(accs)), accs, seed=seed,
                      warnings=warnings)


def evaluate_kfold(spec: LearnerSpec, data: Dataset, folds: FoldPlan,
                   seed: SeedSpec | int = 0, weighted: bool = False) -> EvalReport:
    """Unweighted mean of the k validation accuracies (size-weighted when asked)."""
    if folds.n != data.n:
        raise DataError(f"fold plan covers {folds.n} examples, dataset has {data.n}")
    seed = as_seed(seed)
    accs = []
    for i in range(folds.k):
        try:
            accs.append(_fit_and_score(spec, data, folds.split(i), derive_stream(seed, i))[1])
        except DataError as exc:
            raise DataError(f"fold {i}: {exc}") from exc
    if weighted:
        sizes = np.array([f.size for f in folds.folds], dtype=np.float64)
        point = float(np.dot(accs, sizes) / sizes.sum())
    else:
        point = float(np.mean(accs))
    name = "loocv" if folds.k == data.n else "kfold"
    return EvalReport(name, point, accs, seed=seed,
                      details={"k": folds.k, "fold_plan_sha256": folds.fingerprint()})


# ---------------------------------------------------------------------------
# bootstrap


def bootstrap_oob(spec: LearnerSpec, data: Dataset, plan: BootstrapPlan,
                  seed: SeedSpec | int = 0) -> BootstrapEstimate:
    """Leave-one-out bootstrap: fit on the bag, test on the out-of-bag examples.

    Resubstitution accuracy is measured on the bootstrap sample itself
    (duplicates included).  Rounds with an empty out-of-bag set are skipped.
    """
    seed = as_seed(seed)
    oob, resub, skipped = [], [], 0
    for r, rnd in enumerate(plan.rounds):
        if rnd.out_of_bag.size == 0:
            skipped += 1
            continue
        bag = data.subset(rnd.in_bag)
        model = fit(spec, bag, derive_stream(seed, r))
        oob.append(score(model, data.subset(rnd.out_of_bag)))
        resub.append(score(model, bag))
    if not oob:
        raise DataError("every bootstrap round has an empty out-of-bag set")
    return BootstrapEstimate(float(np.mean(oob)), tuple(oob), tuple(resub), "oob",
                             tuple(oob), skipped_rounds=skipped)


def bootstrap_632(estimate: BootstrapEstimate) -> BootstrapEstimate:
    h = np.asarray(estimate.per_round_oob)
    r = np.asarray(estimate.per_round_resub)
    if h.size == 0 or h.size != r.size:
        raise DataError("need matching per-round out-of-bag and resubstitution accuracies")
    combined = E632_WEIGHT * h + (1.0 - E632_WEIGHT) * r
    return BootstrapEstimate(float(np.mean(combined)), tuple(h), tuple(r), "e632",
                             tuple(combined.tolist()), skipped_rounds=estimate.skipped_rounds)


def relative_overfitting_rate(acc_h: float, acc_r: float, gamma: float) -> float:
    """R = (ACC_r - ACC_h) / (gamma - (1 - ACC_h)), clipped to [0, 1].

    A non-positive denominator maps to 0.
    """
    denom = gamma - (1.0 - acc_h)
    if denom <= 0:
        return 0.0
    return min(1.0, max(0.0, (acc_r - acc_h) / denom))


def bootstrap_632plus(estimate: BootstrapEstimate, gamma: float) -> BootstrapEstimate:
    if not 0.0 < gamma < 1.0:
        raise DataError("gamma must lie in (0, 1)")
    h = estimate.per_round_oob
    r = estimate.per_round_resub
    if len(h) == 0 or len(h) != len(r):
        raise DataError("need matching per-round out-of-bag and resubstitution accuracies")
    omegas, combined = [], []
    for acc_h, acc_r in zip(h, r):
        R = relative_overfitting_rate(acc_h, acc_r, gamma)
        w = E632_WEIGHT / (1.0 - (1.0 - E632_WEIGHT) * R)
        omegas.append(w)
        combined.append(w * acc_h + (1.0 - w) * acc_r)
    return BootstrapEstimate(float(np.mean(combined)), tuple(h), tuple(r), "e632plus",
                             tuple(combined), tuple(omegas), gamma, estimate.skipped_rounds)


def no_information_rate(y_true, y_pred) -> float:
    """sum_k p_k (1 - q_k): error expected if labels and predictions were independent."""
    y = as_labels(y_true, "y_true")
    p = as_labels(y_pred, "y_pred")
    if y.shape != p.shape:
        raise DataError(f"length mismatch: {y.size} vs {p.size}")
    K = int(max(y.max(), p.max())) + 1
    pk = np.bincount(y, minlength=K) / y.size
    qk = np.bincount(p, minlength=K) / p.size
    return float(np.sum(pk * (1.0 - qk)))


PAIRS_LIMIT = 10_000


def no_information_rate_pairs(model: FittedModel, data: Dataset) -> float:
    """Mean 0-1 loss over all n^2 pairings of a label with a prediction."""
    if data.n > PAIRS_LIMIT:
        raise DataError(f"pairs form is limited to n <= {PAIRS_LIMIT}")
    pred = predict(model, data.features)
    # sum_i sum_i' [y_i != f(x_i')], counted through the class histograms
    K = max(data.class_count, int(pred.max()) + 1)
    label_counts = np.bincount(data.labels, minlength=K)
    pred_counts = np.bincount(pred, minlength=K)
    agree = int(np.dot(label_counts, pred_counts))
    return 1.0 - agree / data.n ** 2


def full_data_gamma(spec: LearnerSpec, data: Dataset, seed: SeedSpec | int = 0,
                    pairs: bool = False) -> float:
    model = fit(spec, data, seed)
    if pairs:
        return no_information_rate_pairs(model, data)
    return no_information_rate(data.labels, predict(model, data.features))


# ---------------------------------------------------------------------------
# confidence intervals


def _clamp01(lo: float, hi: float) -> tuple[float, float]:
    return max(0.0, lo), min(1.0, hi)


def ci_normal_approx(acc: float, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if not 0.0 <= acc <= 1.0 or n < 1 or not 0.0 < confidence < 1.0:
        raise DataError("need acc in [0, 1], n >= 1 and confidence in (0, 1)")
    z = normal_quantile(0.5 + confidence / 2.0)
    half = z * math.sqrt(acc * (1.0 - acc) / n)
    return _clamp01(acc - half, acc + half)


def ci_bootstrap_se(per_round: Sequence[float], confidence: float = 0.95,
                    clamp: bool = True) -> tuple[float, float]:
    """mean +/- t * SD of the rounds, SD with the b-1 denominator."""
    values = np.asarray(per_round, dtype=np.float64)
    if values.size < 2:
        raise DataError("need at least two rounds")
    if not 0.0 < confidence < 1.0:
        raise DataError("confidence must lie in (0, 1)")
    mean = float(values.mean())
    se = float(values.std(ddof=1))
    t = t_quantile(0.5 + confidence / 2.0, values.size - 1)
    lo, hi = mean - t * se, mean + t * se
    return _clamp01(lo, hi) if clamp else (lo, hi)


def ci_percentile(per_round: Sequence[float], alpha: float = 0.025) -> tuple[float, float]:
    """alpha-th and (1-alpha)-th percentiles, linear interpolation between order stats.

    Order statistic ``i`` (1-based) sits at level ``(i - 1) / (b - 1)``, numpy's
    default ``linear`` quantile method.
    """
    values = np.asarray(per_round, dtype=np.float64)
    if values.size < 2:
        raise DataError("need at least two rounds")
    if not 0.0 < alpha < 0.5:
        raise DataError("alpha must lie in (0, 0.5)")
    lower, upper = np.quantile(values, [alpha, 1.0 - alpha])
    return float(lower), float(upper)


def attach_ci(report: EvalReport, method: str, confidence: float = 0.95,
              n_test: int | None = None) -> EvalReport:
    """Return ``report`` with an interval of the requested kind."""
    if method == "none":
        return report
    if method == "normal_approx":
        n = n_test if n_test is not None else report.details.get("n_test")
        if n is None:
            raise DataError("normal approximation needs the test set size")
        lo, hi = ci_normal_approx(report.point_estimate, int(n), confidence)
    elif method == "se_t":
        lo, hi = ci_bootstrap_se(report.per_round, confidence)
    elif method == "percentile":
        lo, hi = ci_percentile(report.per_round, (1.0 - confidence) / 2.0)
    else:
        raise DataError(f"unknown CI method {method!r}")
    return report.with_ci(lo, hi, method)


# ---------------------------------------------------------------------------


def learning_curve(spec: LearnerSpec, data: Dataset, train_sizes: Sequence[int],
                   test_plan: SplitPlan, seed: SeedSpec | int = 0) -> list[LearningCurvePoint]:
    """Resubstitution and fixed-test accuracy for growing stratified training subsets."""
    sizes = [int(s) for s in train_sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise DataError("train sizes must be strictly increasing")
    _check_plan(test_plan, data)
    pool = test_plan.train_indices
    test = data.subset(test_plan.test_indices)
    seed = as_seed(seed)
    points = []
    for i, size in enumerate(sizes):
        if not 1 <= size <= pool.size:
            raise DataError(f"train size {size} exceeds the {pool.size} available examples")
        chosen = pool[stratified_subsample(data.labels[pool], size, derive_stream(seed, i))]
        train = data.subset(chosen)
        model = fit(spec, train, seed)
        points.append(LearningCurvePoint(size, score(model, train), score(model, test)))
    return points

"""Monte Carlo estimates of the Type-I error rate of the comparison tests.

Two null constructions are available:

``same_algorithm_independent_seeds``
    Every world draws fresh data from the generator.  Both "algorithms" are the
    same k-nearest-neighbour learner; each gets its own randomly drawn
    per-feature distance weights (``feature_jitter``/``feature_seed``), drawn
    independently per world and per slot.  The two learners are exchangeable, so
    neither is better on average, but on any one data set they make different
    errors.  Tests that mistake that data-set-specific difference for a
    population difference reject too often.
``same_predictions_perturbed``
    Only for the prediction-level tests.  A shared correctness vector is drawn
    per world and each model's copy is flipped independently with probability
    ``flip_rate``; the discordant counts are then exchangeable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .algo_tests import (
    combined_f_5x2cv,
    five_by_two_records,
    paired_t_5x2cv,
    paired_t_kfold,
    paired_t_resampled,
)
from .core import (
    SCHEMA_VERSION,
    CorrectnessMatrix,
    DataError,
    DegenerateStatisticError,
    LearnerSpec,
    RandomStream,
    SeedSpec,
    _canonical,
    as_seed,
    derive_stream,
    ordered_map,
)
from .learners import fit, make_blobs, make_circles, predict
from .model_tests import (
    cochrans_q,
    mcnemar_exact,
    mcnemar_table,
    mcnemar_test,
    proportions_z_test,
)
from .numerics import normal_quantile, normal_sf
from .resampling import holdout_split

NULL_MODES = ("same_algorithm_independent_seeds", "same_predictions_perturbed")
ALGORITHM_TESTS = ("resampled_t", "kfold_t", "5x2cv_t", "5x2cv_f")
PREDICTION_TESTS = ("mcnemar", "mcnemar_exact", "cochran_q", "z_prop")
GENERATORS = ("circles", "blobs")


@dataclass(frozen=True)
class SimulationConfig:
    world_count: int = 500
    null_mode: str = "same_algorithm_independent_seeds"
    alpha: float = 0.05
    tests: tuple[str, ...] = ("resampled_t", "5x2cv_t")
    generator: str = "circles"
    n: int = 300
    noise: float = 0.2
    k_neighbors: int = 3
    feature_jitter: float = 0.9
    repetitions: int = 30
    flip_rate: float = 0.1
    base_accuracy: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.world_count < 1:
            raise DataError("world_count must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise DataError("alpha must lie in (0, 1)")
        if self.null_mode not in NULL_MODES:
            raise DataError(f"unknown null_mode {self.null_mode!r}")
        if self.generator not in GENERATORS:
            raise DataError(f"unknown generator {self.generator!r}")
        allowed = ALGORITHM_TESTS + PREDICTION_TESTS
        if self.null_mode == "same_predictions_perturbed":
            allowed = PREDICTION_TESTS
        bad = [t for t in self.tests if t not in allowed]
        if bad or not self.tests:
            raise DataError(f"tests {bad or '[]'} not available under {self.null_mode}; "
                            f"choose from {', '.join(allowed)}")

    def to_dict(self) -> dict:
        return _canonical(self.__dict__)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    z = normal_quantile(0.5 + confidence / 2.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def two_proportion_z(x1: int, n1: int, x2: int, n2: int) -> tuple[float, float]:
    """Pooled z for ``p1 > p2``; returns (z, one-sided p)."""
    pooled = (x1 + x2) / (n1 + n2)
    var = pooled * (1 - pooled) * (1 / n1 + 1 / n2)
    if var == 0.0:
        return 0.0, 1.0
    z = (x1 / n1 - x2 / n2) / math.sqrt(var)
    return z, normal_sf(z)


@dataclass(frozen=True)
class RateRow:
    test: str
    rejections: int
    worlds: int
    degenerate: int
    wilson: tuple[float, float]

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.worlds if self.worlds else float("nan")

    def to_dict(self) -> dict:
        return {"test": self.test, "rejections": self.rejections, "worlds": self.worlds,
                "rejection_rate": self.rejection_rate, "wilson_lower": self.wilson[0],
                "wilson_upper": self.wilson[1], "degenerate": self.degenerate}


@dataclass(frozen=True)
class Type1Study:
    config: SimulationConfig
    rates: tuple[RateRow, ...]
    outcomes: tuple[tuple[bool | None, ...], ...] = field(repr=False, default=())

    def row(self, test: str) -> RateRow:
        for r in self.rates:
            if r.test == test:
                return r
        raise KeyError(test)

    def to_dict(self) -> dict:
        return _canonical({
            "schema_version": SCHEMA_VERSION,
            "kind": "type1_study",
            "world_count": self.config.world_count,
            "null_mode": self.config.null_mode,
            "alpha": self.config.alpha,
            "config": self.config.to_dict(),
            "rates": [r.to_dict() for r in self.rates],
        })


def _world_data(config: SimulationConfig, seed: SeedSpec):
    if config.generator == "circles":
        return make_circles(config.n, config.noise, seed)
    per_class = config.n // 2
    return make_blobs(per_class, 2, 2, spread=config.noise * 10.0, seed=seed)


def _algorithm_world(config: SimulationConfig, ws: SeedSpec) -> dict[str, Any]:
    data = _world_data(config, derive_stream(ws, 0))
    seeds = RandomStream(derive_stream(ws, 1)).next_u64(2)
    specs = [LearnerSpec("knn", {"k_neighbors": config.k_neighbors,
                                 "feature_jitter": config.feature_jitter,
                                 "feature_seed": int(s)}) for s in seeds]
    test_seed = derive_stream(ws, 2)
    alpha = config.alpha
    out: dict[str, Any] = {}
    records = None
    for name in config.tests:
        try:
            if name == "resampled_t":
                rep = paired_t_resampled(*specs, data, config.repetitions, seed=test_seed, alpha=alpha)
            elif name == "kfold_t":
                rep = paired_t_kfold(*specs, data, seed=test_seed, alpha=alpha)
            elif name in ("5x2cv_t", "5x2cv_f"):
                if records is None:
                    records = five_by_two_records(*specs, data, seed=test_seed)
                fn = paired_t_5x2cv if name == "5x2cv_t" else combined_f_5x2cv
                rep = fn(*specs, data, alpha=alpha, records=records)
            else:
                rep = _prediction_test_on_holdout(name, specs, data, test_seed, alpha)
            out[name] = rep.reject_null
        except DegenerateStatisticError:
            out[name] = None
    return out


def _prediction_test_on_holdout(name, specs, data, seed, alpha):
    split = holdout_split(data.n, data.labels, 1 / 3, True, derive_stream(seed, 0))
    train, test = data.subset(split.train_indices), data.subset(split.test_indices)
    preds = [predict(fit(s, train, derive_stream(seed, 1)), test.features) for s in specs]
    return _prediction_test(name, test.labels, preds, alpha)


def _prediction_test(name, y, preds, alpha):
    if name == "mcnemar":
        return mcnemar_test(mcnemar_table(y, *preds), corrected=True, alpha=alpha)
    if name == "mcnemar_exact":
        return mcnemar_exact(mcnemar_table(y, *preds), alpha=alpha)
    if name == "cochran_q":
        ok = np.column_stack([p == y for p in preds]).astype(np.int8)
        return cochrans_q(CorrectnessMatrix(ok), alpha=alpha)
    table = mcnemar_table(y, *preds)
    return proportions_z_test(table.accuracy1, table.accuracy2, table.n, alpha=alpha)


def _perturbed_world(config: SimulationConfig, ws: SeedSpec) -> dict[str, Any]:
    stream = RandomStream(derive_stream(ws, 0))
    n = config.n
    base = stream.uniform(n) < config.base_accuracy
    y = np.zeros(n, dtype=np.int64)
    preds = []
    for _ in range(2):
        flip = stream.uniform(n) < config.flip_rate
        correct = base ^ flip
        preds.append(np.where(correct, 0, 1).astype(np.int64))
    out: dict[str, Any] = {}
    for name in config.tests:
        try:
            out[name] = _prediction_test(name, y, preds, config.alpha).reject_null
        except DegenerateStatisticError:
            out[name] = None
    return out


def run_type1_study(config: SimulationConfig, threads: int = 1,
                    progress: Callable[[int], None] | None = None) -> Type1Study:
    """Rejection rate of every configured test over ``world_count`` null worlds.

    World ``w`` uses ``derive_stream(seed, w)``, so the table is identical for
    any ``threads``.  Worlds where a test's statistic is undefined are counted
    as degenerate and left out of that test's denominator.
    """
    root = as_seed(config.seed)
    world = (_algorithm_world if config.null_mode == "same_algorithm_independent_seeds"
             else _perturbed_world)

    def run(w: int):
        result = world(config, derive_stream(root, w))
        if progress is not None:
            progress(w)
        return tuple(result[t] for t in config.tests)

    outcomes = ordered_map(run, range(config.world_count), threads)
    rows = []
    for j, name in enumerate(config.tests):
        col = [o[j] for o in outcomes]
        valid = [v for v in col if v is not None]
        rejections = sum(valid)
        rows.append(RateRow(name, rejections, len(valid), len(col) - len(valid),
                            wilson_interval(rejections, len(valid))))
    return Type1Study(config, tuple(rows), tuple(outcomes))

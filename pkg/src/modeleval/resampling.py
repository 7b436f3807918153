"""Index plans for holdout, k-fold, repeated holdout, bootstrap and 5x2 splits.

Plans only hold indices.  Every plan is a pure function of its inputs and a
:class:`~modeleval.core.SeedSpec`.  Stratified counts use the largest-remainder
method on the training side, with ties going to the lowest class id.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .core import DataError, RandomStream, SeedSpec, as_labels, as_seed, derive_stream

DEFAULT_BOOTSTRAP_ROUNDS = 200


def _index_vector(values, n: int | None, name: str) -> np.ndarray:
    a = np.asarray(values, dtype=np.int64).ravel()
    if n is not None and a.size and (a.min() < 0 or a.max() >= n):
        raise DataError(f"{name} contains indices outside [0, {n})")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """Disjoint train/test index sets."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    n: int | None = None

    def __post_init__(self):
        train = _index_vector(self.train_indices, self.n, "train_indices")
        test = _index_vector(self.test_indices, self.n, "test_indices")
        if np.unique(train).size != train.size or np.unique(test).size != test.size:
            raise DataError("split plan contains duplicate indices")
        if np.intersect1d(train, test).size:
            raise DataError("train and test indices overlap")
        object.__setattr__(self, "train_indices", train)
        object.__setattr__(self, "test_indices", test)

    def swapped(self) -> "SplitPlan":
        return SplitPlan(self.test_indices, self.train_indices, self.n)

    def __eq__(self, other):
        return (isinstance(other, SplitPlan)
                and np.array_equal(self.train_indices, other.train_indices)
                and np.array_equal(self.test_indices, other.test_indices))

    def to_dict(self) -> dict:
        return {"train": self.train_indices.tolist(), "test": self.test_indices.tolist()}


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """``k`` pairwise-disjoint folds covering ``0..n-1``."""

    folds: tuple[np.ndarray, ...]

    def __post_init__(self):
        folds = tuple(_index_vector(f, None, "fold") for f in self.folds)
        if len(folds) < 2:
            raise DataError("a fold plan needs at least two folds")
        joined = np.concatenate(folds)
        n = joined.size
        if not np.array_equal(np.sort(joined), np.arange(n)):
            raise DataError("folds must partition 0..n-1")
        object.__setattr__(self, "folds", folds)

    @property
    def k(self) -> int:
        return len(self.folds)

    @property
    def n(self) -> int:
        return sum(f.size for f in self.folds)

    def split(self, i: int) -> SplitPlan:
        """Fold ``i`` as the test side, the rest merged as training data."""
        train = np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))
        return SplitPlan(train, self.folds[i], self.n)

    def splits(self) -> list[SplitPlan]:
        return [self.split(i) for i in range(self.k)]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for f in self.folds:
            h.update(np.asarray(f, dtype="<i8").tobytes())
            h.update(b"|")
        return h.hexdigest()

    def __eq__(self, other):
        return (isinstance(other, FoldPlan) and self.k == other.k
                and all(np.array_equal(a, b) for a, b in zip(self.folds, other.folds)))

    def to_dict(self) -> dict:
        return {"folds": [f.tolist() for f in self.folds]}


@dataclass(frozen=True, eq=False)
class BootstrapRound:
    in_bag: np.ndarray
    out_of_bag: np.ndarray


@dataclass(frozen=True, eq=False)
class BootstrapPlan:
    rounds: tuple[BootstrapRound, ...]
    n: int

    def to_dict(self) -> dict:
        return {"n": self.n,
                "rounds": [{"in_bag": r.in_bag.tolist(), "out_of_bag": r.out_of_bag.tolist()}
                           for r in self.rounds]}


# ---------------------------------------------------------------------------


def _labels_for(n: int, labels) -> np.ndarray:
    if labels is None:
        return np.zeros(n, dtype=np.int64)
    y = as_labels(labels)
    if y.size != n:
        raise DataError(f"expected {n} labels, got {y.size}")
    return y


def largest_remainder(counts: np.ndarray, total: int) -> np.ndarray:
    """Apportion ``total`` across groups proportionally to ``counts``.

    Floors first, then hands out the leftover units by descending fractional
    remainder, ties to the lowest group index.
    """
    counts = np.asarray(counts, dtype=np.int64)
    N = int(counts.sum())
    exact = [c * total for c in counts.tolist()]  # numerators over N, kept integral
    base = np.array([e // N for e in exact], dtype=np.int64)
    remainders = [e % N for e in exact]
    leftover = total - int(base.sum())
    order = sorted(range(len(counts)), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def _test_size(n: int, test_fraction: float) -> int:
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    return int(math.floor(n * test_fraction + 0.5))


def holdout_split(n: int, labels, test_fraction: float, stratify: bool,
                  seed: SeedSpec | int) -> SplitPlan:
    """Random train/test split; stratified splits keep the class proportions."""
    y = _labels_for(n, labels)
    n_test = _test_size(n, test_fraction)
    stream = RandomStream(seed)
    if not stratify:
        if n_test < 1 or n_test > n - 1:
            raise DataError(f"test_fraction {test_fraction} leaves an empty side for n={n}")
        perm = stream.permutation(n)
        return SplitPlan(np.sort(perm[n_test:]), np.sort(perm[:n_test]), n)

    counts = np.bincount(y)
    present = np.flatnonzero(counts)
    train_counts = largest_remainder(counts[present], n - n_test)
    train, test = [], []
    for cls, n_train in zip(present.tolist(), train_counts.tolist()):
        members = np.flatnonzero(y == cls)
        if n_train == 0 or n_train == members.size:
            side = "training" if n_train == 0 else "test"
            raise DataError(f"class {cls} would have no {side} examples "
                            f"(count {members.size}, test_fraction {test_fraction})")
        members = members[stream.permutation(members.size)]
        train.append(members[:n_train])
        test.append(members[n_train:])
    return SplitPlan(np.sort(np.concatenate(train)), np.sort(np.concatenate(test)), n)


def stratified_subsample(labels, size: int, seed: SeedSpec | int) -> np.ndarray:
    """Positions of a class-proportional random subset of ``labels``."""
    y = as_labels(labels)
    if not 1 <= size <= y.size:
        raise DataError(f"subsample size {size} outside [1, {y.size}]")
    if size == y.size:
        return np.arange(y.size)
    stream = RandomStream(seed)
    counts = np.bincount(y)
    present = np.flatnonzero(counts)
    take = largest_remainder(counts[present], size)
    chosen = []
    for cls, m in zip(present.tolist(), take.tolist()):
        members = np.flatnonzero(y == cls)
        chosen.append(members[stream.permutation(members.size)[:m]])
    return np.sort(np.concatenate(chosen))


def kfold_plan(n: int, labels, k: int, stratify: bool, seed: SeedSpec | int,
               shuffle: bool = True) -> FoldPlan:
    """Shuffle-then-deal k-fold assignment; ``k == n`` gives leave-one-out.

    With ``shuffle=False`` (unstratified only) the folds are contiguous blocks.
    """
    y = _labels_for(n, labels)
    if k < 2 or k > n:
        raise DataError(f"k must satisfy 2 <= k <= n, got k={k}, n={n}")
    stream = RandomStream(seed)
    buckets: list[list[int]] = [[] for _ in range(k)]
    if stratify:
        counts = np.bincount(y)
        smallest = counts[counts > 0].min()
        if k > smallest:
            raise DataError(f"stratified k={k} exceeds the smallest class count {smallest}")
        pointer = 0
        for cls in np.flatnonzero(counts).tolist():
            members = np.flatnonzero(y == cls)
            members = members[stream.permutation(members.size)]
            for j, idx in enumerate(members.tolist()):
                buckets[(pointer + j) % k].append(idx)
            pointer = (pointer + members.size) % k
    elif shuffle:
        for j, idx in enumerate(stream.permutation(n).tolist()):
            buckets[j % k].append(idx)
    else:
        return FoldPlan(tuple(np.array_split(np.arange(n), k)))
    return FoldPlan(tuple(np.sort(np.array(b, dtype=np.int64)) for b in buckets))


def loocv_plan(n: int) -> FoldPlan:
    return kfold_plan(n, None, n, False, SeedSpec(0), shuffle=False)


def repeated_holdout_plan(n: int, labels, test_fraction: float, repetitions: int,
                          stratify: bool, seed: SeedSpec | int) -> list[SplitPlan]:
    """Independent holdout splits; repetition ``r`` uses ``derive_stream(seed, r)``."""
    if repetitions < 1:
        raise DataError("repetitions must be >= 1")
    return [holdout_split(n, labels, test_fraction, stratify, derive_stream(seed, r))
            for r in range(repetitions)]


def bootstrap_plan(n: int, rounds: int = DEFAULT_BOOTSTRAP_ROUNDS,
                   seed: SeedSpec | int = 0) -> BootstrapPlan:
    if n < 1 or rounds < 1:
        raise DataError("bootstrap needs n >= 1 and rounds >= 1")
    out = []
    for r in range(rounds):
        in_bag = RandomStream(derive_stream(seed, r)).integers(n, n)
        mask = np.ones(n, dtype=bool)
        mask[in_bag] = False
        in_bag.setflags(write=False)
        oob = np.flatnonzero(mask)
        oob.setflags(write=False)
        out.append(BootstrapRound(in_bag, oob))
    return BootstrapPlan(tuple(out), n)


def five_by_two_plan(n: int, labels, seed: SeedSpec | int,
                     stratify: bool = True) -> list[tuple[SplitPlan, SplitPlan]]:
    """Five 50/50 splits, each paired with its train/test swap."""
    if n < 4:
        raise DataError("5x2 plan needs n >= 4")
    plans = []
    for i in range(5):
        first = holdout_split(n, labels, 0.5, stratify, derive_stream(seed, i))
        plans.append((first, first.swapped()))
    return plans


def inclusion_probability(n: int) -> float:
    """Chance that a given example appears in a bootstrap sample of size ``n``."""
    if n < 1:
        raise DataError("n must be >= 1")
    return 1.0 - (1.0 - 1.0 / n) ** n


def plan_seed_provenance(seed: SeedSpec | int) -> dict:
    return as_seed(seed).to_dict()

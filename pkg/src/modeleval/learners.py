"""Small reference learners and synthetic data generators.

Three learners are registered:

``knn``
    Euclidean k-nearest neighbours.  Hyperparameters: ``k_neighbors`` (default 3),
    ``feature_jitter`` and ``feature_seed`` (per-feature distance weights
    ``1 + jitter * (2u - 1)`` drawn from ``feature_seed``; off by default).
    Distance ties go to the lower training row, vote ties to the lower class id.
``softmax``
    Multinomial logistic regression fit by full-batch gradient descent from
    zero weights.  Hyperparameters: ``epochs`` (500), ``learning_rate`` (0.1),
    ``l2`` (0.0).  Gradient descent is stable for ``learning_rate < 2 / L`` with
    ``L = 0.5 * max_i ||[x_i, 1]||^2 + l2``.
``majority``
    Predicts the most frequent training class.

Every learner also accepts ``subsample`` in (0, 1]: when below one, the model
is fit to a random class-proportional subset drawn from the fit seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

import numpy as np

from .core import DataError, Dataset, LearnerSpec, RandomStream, SeedSpec, accuracy, as_seed
from .resampling import stratified_subsample

LEARNERS = ("knn", "softmax", "majority")

_DEFAULTS: dict[str, dict[str, Any]] = {
    "knn": {"k_neighbors": 3, "feature_jitter": 0.0, "feature_seed": 0, "subsample": 1.0},
    "softmax": {"epochs": 500, "learning_rate": 0.1, "l2": 0.0, "subsample": 1.0},
    "majority": {"subsample": 1.0},
}


@dataclass(frozen=True, eq=False)
class FittedModel:
    kind: str
    class_count: int
    n_features: int
    parameters: Mapping[str, Any] = field(default_factory=dict)
    loss_history: tuple[float, ...] = ()


def resolve_hyperparameters(spec: LearnerSpec) -> dict[str, Any]:
    if spec.name not in LEARNERS:
        raise DataError(f"unknown learner {spec.name!r}; registered: {', '.join(LEARNERS)}")
    params = dict(_DEFAULTS[spec.name])
    unknown = set(spec.hyperparameters) - set(params)
    if unknown:
        raise DataError(f"unknown hyperparameter(s) for {spec.name}: {sorted(unknown)}")
    params.update(spec.hyperparameters)
    if not 0.0 < float(params["subsample"]) <= 1.0:
        raise DataError("subsample must lie in (0, 1]")
    if spec.name == "knn":
        if int(params["k_neighbors"]) != params["k_neighbors"] or params["k_neighbors"] < 1:
            raise DataError("k_neighbors must be a positive integer")
        if params["feature_jitter"] < 0 or params["feature_jitter"] >= 1:
            raise DataError("feature_jitter must lie in [0, 1)")
    elif spec.name == "softmax":
        if int(params["epochs"]) != params["epochs"] or params["epochs"] < 1:
            raise DataError("epochs must be a positive integer")
        if not params["learning_rate"] > 0:
            raise DataError("learning_rate must be positive")
        if params["l2"] < 0:
            raise DataError("l2 must be non-negative")
    return params


# ---------------------------------------------------------------------------
# softmax regression


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def softmax_loss(W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray,
                 l2: float = 0.0) -> float:
    """Mean cross-entropy plus ``l2 / 2 * ||W||^2``.  ``W`` is K x d."""
    Z = X @ W.T + b
    Z = Z - Z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(Z).sum(axis=1))
    nll = log_norm - Z[np.arange(y.size), y]
    return float(nll.mean() + 0.5 * l2 * np.sum(W * W))


def softmax_gradient(W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray,
                     l2: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of :func:`softmax_loss` with respect to ``(W, b)``."""
    P = _softmax(X @ W.T + b)
    P[np.arange(y.size), y] -= 1.0
    P /= y.size
    return P.T @ X + l2 * W, P.sum(axis=0)


def _fit_softmax(X, y, K, params) -> FittedModel:
    d = X.shape[1]
    W = np.zeros((K, d))
    b = np.zeros(K)
    lr, l2 = float(params["learning_rate"]), float(params["l2"])
    history = []
    for _ in range(int(params["epochs"])):
        history.append(softmax_loss(W, b, X, y, l2))
        gW, gb = softmax_gradient(W, b, X, y, l2)
        W -= lr * gW
        b -= lr * gb
    history.append(softmax_loss(W, b, X, y, l2))
    return FittedModel("softmax", K, d, {"W": W, "b": b}, tuple(history))


# ---------------------------------------------------------------------------


def fit(spec: LearnerSpec, train: Dataset, seed: SeedSpec | int = 0) -> FittedModel:
    """Fit ``spec`` to ``train``.  Deterministic given ``seed``."""
    params = resolve_hyperparameters(spec)
    seed = as_seed(seed)
    if params["subsample"] < 1.0:
        size = max(1, int(round(params["subsample"] * train.n)))
        train = train.subset(stratified_subsample(train.labels, size, seed))
    X, y, K = train.features, train.labels, train.class_count

    if spec.name == "knn":
        k = int(params["k_neighbors"])
        if k > train.n:
            raise DataError(f"k_neighbors={k} exceeds the {train.n} training examples")
        weights = np.ones(X.shape[1])
        if params["feature_jitter"] > 0:
            u = RandomStream(SeedSpec(int(params["feature_seed"]))).uniform(X.shape[1])
            weights = 1.0 + params["feature_jitter"] * (2.0 * u - 1.0)
        return FittedModel("knn", K, X.shape[1],
                           {"X": X.copy(), "y": y.copy(), "k": k, "weights": weights})
    if spec.name == "softmax":
        return _fit_softmax(X, y, K, params)
    counts = np.bincount(y, minlength=K)
    return FittedModel("majority", K, X.shape[1], {"label": int(np.argmax(counts))})


def predict(model: FittedModel, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise DataError(f"model expects {model.n_features} features, got {X.shape[1]}")
    p = model.parameters
    if model.kind == "majority":
        return np.full(X.shape[0], p["label"], dtype=np.int64)
    if model.kind == "softmax":
        # argmax returns the first maximum, i.e. the lowest class id on ties
        return np.argmax(X @ p["W"].T + p["b"], axis=1).astype(np.int64)

    w = np.sqrt(p["weights"])
    A, B = X * w, p["X"] * w
    nearest = np.empty((X.shape[0], p["k"]), dtype=np.int64)
    chunk = max(1, 2_000_000 // max(1, B.size))
    for start in range(0, X.shape[0], chunk):
        diff = A[start:start + chunk, None, :] - B[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        nearest[start:start + chunk] = np.argsort(d2, axis=1, kind="stable")[:, : p["k"]]
    votes = np.zeros((X.shape[0], model.class_count), dtype=np.int64)
    np.add.at(votes, (np.arange(X.shape[0])[:, None], p["y"][nearest]), 1)
    return np.argmax(votes, axis=1).astype(np.int64)


def score(model: FittedModel, data: Dataset) -> float:
    return accuracy(data.labels, predict(model, data.features))


# ---------------------------------------------------------------------------
# synthetic data


def make_blobs(n_per_class: int, K: int = 2, d: int = 2, centers=None, spread: float = 1.0,
               seed: SeedSpec | int = 0) -> Dataset:
    """Isotropic Gaussian blobs, ``n_per_class`` rows per class, rows grouped by class.

    Default centers sit on a ring of radius ``4`` in the first two dimensions.
    """
    if n_per_class < 1 or K < 1 or d < 1:
        raise DataError("make_blobs needs positive sizes")
    if centers is None:
        centers = np.zeros((K, d))
        angles = 2.0 * np.pi * np.arange(K) / K
        centers[:, 0] = 4.0 * np.cos(angles)
        if d > 1:
            centers[:, 1] = 4.0 * np.sin(angles)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.shape != (K, d):
        raise DataError(f"centers must have shape ({K}, {d})")
    noise = RandomStream(seed).normal(n_per_class * K * d).reshape(n_per_class * K, d)
    X = np.repeat(centers, n_per_class, axis=0) + spread * noise
    y = np.repeat(np.arange(K), n_per_class)
    return Dataset(X, y, K)


def make_circles(n: int = 300, noise: float = 0.1, seed: SeedSpec | int = 0,
                 factor: float = 0.5) -> Dataset:
    """Two concentric circles; class 0 outer (radius 1), class 1 inner (radius ``factor``).

    Gaussian noise with standard deviation ``noise`` is added to each radius.
    Odd ``n`` gives the extra point to the outer circle.
    """
    if n < 2:
        raise DataError("make_circles needs n >= 2")
    stream = RandomStream(seed)
    n_inner = n // 2
    n_outer = n - n_inner
    angles = 2.0 * np.pi * stream.uniform(n)
    radius = np.concatenate([np.ones(n_outer), np.full(n_inner, factor)])
    radius = radius + noise * stream.normal(n)
    X = np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])
    y = np.concatenate([np.zeros(n_outer, dtype=np.int64), np.ones(n_inner, dtype=np.int64)])
    return Dataset(X, y, 2)


IRIS_SHA256 = "9cc1c345c71bcc9b486b74cbf6063fa66f4bb5e0f603a4b3c3471ec2e5e8e355"


def iris_path():
    return resources.files("modeleval") / "data" / "iris.csv"


def load_iris() -> Dataset:
    from .dataio import ingest_dataset

    with resources.as_file(iris_path()) as path:
        return ingest_dataset(path, "species")

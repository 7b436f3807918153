import numpy as np
import pytest
from importlib import resources

from modeleval.core import Dataset, correctness_matrix
from modeleval.dataio import ingest_predictions
from modeleval.learners import load_iris, make_blobs, make_circles

TABLE2 = resources.files("modeleval") / "data" / "table2_predictions.csv"


@pytest.fixture(scope="session")
def iris():
    return load_iris()


@pytest.fixture(scope="session")
def table2_predictions():
    with resources.as_file(TABLE2) as path:
        return ingest_predictions(path)


@pytest.fixture(scope="session")
def table2_matrix(table2_predictions):
    return correctness_matrix(table2_predictions.y_true, table2_predictions.predictions)


@pytest.fixture(scope="session")
def circles():
    return make_circles(300, 0.2, seed=5)


@pytest.fixture(scope="session")
def blobs():
    return make_blobs(60, K=2, d=2, spread=1.5, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def tiny_dataset(labels, d=2):
    labels = np.asarray(labels)
    X = np.arange(labels.size * d, dtype=float).reshape(labels.size, d)
    return Dataset(X, labels, int(labels.max()) + 1)

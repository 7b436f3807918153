"""Performance estimation, model selection and classifier comparison with small reference learners."""

from .core import (
    SCHEMA_VERSION,
    CorrectnessMatrix,
    DataError,
    Dataset,
    DegenerateStatisticError,
    EvalReport,
    LearnerSpec,
    ModelEvalError,
    RandomStream,
    RoundRecord,
    SeedSpec,
    TestReport,
    accuracy,
    correctness_matrix,
    derive_stream,
    error_rate,
)
from .dataio import emit_report, ingest_dataset, ingest_predictions
from .learners import fit, load_iris, make_blobs, make_circles, predict, score

__all__ = [
    "SCHEMA_VERSION",
    "CorrectnessMatrix",
    "DataError",
    "Dataset",
    "DegenerateStatisticError",
    "EvalReport",
    "LearnerSpec",
    "ModelEvalError",
    "RandomStream",
    "RoundRecord",
    "SeedSpec",
    "TestReport",
    "accuracy",
    "correctness_matrix",
    "derive_stream",
    "emit_report",
    "error_rate",
    "fit",
    "ingest_dataset",
    "ingest_predictions",
    "load_iris",
    "make_blobs",
    "make_circles",
    "predict",
    "score",
]

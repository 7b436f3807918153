"""CSV ingestion and report emission (JSON, markdown, CSV)."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, NamedTuple, Sequence

import numpy as np

from .core import SCHEMA_VERSION, DataError, Dataset, _canonical

FORMATS = ("json", "markdown", "csv")


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 ({exc})") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise DataError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    return header, rows[1:]


def _column_index(header: list[str], column: str | int) -> int:
    if isinstance(column, int) or (isinstance(column, str) and column.lstrip("-").isdigit()
                                   and column not in header):
        idx = int(column)
        if not -len(header) <= idx < len(header):
            raise DataError(f"label column index {idx} out of range")
        return idx % len(header)
    if column not in header:
        raise DataError(f"unknown label column {column!r}; columns: {', '.join(header)}")
    return header.index(column)


def encode_labels(values: Sequence[str]) -> tuple[np.ndarray, list[str]]:
    """Dictionary-encode in first-appearance order."""
    names: dict[str, int] = {}
    codes = [names.setdefault(v, len(names)) for v in values]
    return np.asarray(codes, dtype=np.int64), list(names)


def ingest_dataset(path, label_column: str | int) -> Dataset:
    """Read a UTF-8 CSV with header; every non-label column must be numeric."""
    header, rows = _read_rows(path)
    if not rows:
        raise DataError("empty dataset")
    li = _column_index(header, label_column)
    feature_cols = [j for j in range(len(header)) if j != li]
    X = np.empty((len(rows), len(feature_cols)))
    labels = []
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"row {i}: expected {len(header)} cells, found {len(row)}")
        label = row[li].strip()
        if not label:
            raise DataError(f"row {i}, column {header[li]!r}: missing label")
        labels.append(label)
        for out, j in enumerate(feature_cols):
            cell = row[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"row {i}, column {header[j]!r}: non-numeric cell {cell!r}") from None
            if not math.isfinite(value):
                raise DataError(f"row {i}, column {header[j]!r}: missing or non-finite value")
            X[i - 2, out] = value
    y, names = encode_labels(labels)
    return Dataset(X, y, len(names))


class Predictions(NamedTuple):
    y_true: np.ndarray
    predictions: list[np.ndarray]
    model_names: list[str]


def ingest_predictions(path) -> Predictions:
    """``y_true`` then one or more model columns; labels encoded jointly."""
    header, rows = _read_rows(path)
    if len(header) < 2:
        raise DataError("a predictions file needs y_true and at least one model column")
    if not rows:
        raise DataError("empty dataset")
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"row {i}: expected {len(header)} cells, found {len(row)}")
    cells = [[c.strip() for c in row] for row in rows]
    codes, _ = encode_labels([c for row in cells for c in row])
    table = codes.reshape(len(rows), len(header))
    return Predictions(table[:, 0].copy(), [table[:, j].copy() for j in range(1, len(header))],
                       header[1:])


# ---------------------------------------------------------------------------
# emission


def to_json(report: Any) -> str:
    d = report.to_dict() if hasattr(report, "to_dict") else _canonical(report)
    d.setdefault("schema_version", SCHEMA_VERSION)
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4f}" if math.isfinite(value) else str(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value)
    return "" if value is None else str(value)


def _df_text(df: Sequence[float]) -> str:
    """``(5, 0)`` prints as ``5``; ``(2, 198)`` as ``2, 198``."""
    parts = [v for i, v in enumerate(df) if i == 0 or v != 0]
    return ", ".join(f"{v:g}" for v in parts)


def markdown_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(_fmt(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(c) if isinstance(c, float) else c for c in row])
    return buf.getvalue()


def _tabulate(d: dict) -> tuple[list[str], list[list[Any]], list[str], list[list[Any]]]:
    """Split a report dict into a summary table and a per-row detail table."""
    kind = d.get("kind")
    if kind == "test_report":
        summary = [["test", d["test"]], [d["statistic_name"], d["statistic"]],
                   ["df", _df_text(d["df"])], ["p_value", d["p_value"]], ["alpha", d["alpha"]],
                   ["reject_null", d["reject_null"]]]
        summary += [["warning", w] for w in d.get("warnings", [])]
        rows = [[r["round"], r["half"], r["acc1"], r["acc2"], r["diff"]] for r in d["rounds"]]
        return ["field", "value"], summary, ["round", "half", "acc1", "acc2", "diff"], rows
    if kind == "eval_report":
        ci = d["ci"]
        summary = [["estimator", d["estimator"]], ["point_estimate", d["point"]],
                   ["ci_method", ci["method"]], ["ci_lower", ci["lower"]], ["ci_upper", ci["upper"]],
                   ["rounds", len(d["rounds"])], ["skipped_rounds", d["skipped_rounds"]]]
        summary += [["warning", w] for w in d.get("warnings", [])]
        rows = [[i, a] for i, a in enumerate(d["rounds"])]
        return ["field", "value"], summary, ["round", "accuracy"], rows
    if kind == "selection_report":
        summary = [["rule", d["rule"]], ["chosen", json.dumps(d["chosen"], sort_keys=True)],
                   ["final_test_acc", d["final_test_acc"]], ["refit_on_all", d["refit_on_all"]]]
        ranked = sorted(d["per_config"], key=lambda r: -r["mean_acc"])
        rows = [[rank + 1, json.dumps(r["config"], sort_keys=True), r["mean_acc"], r["se_acc"],
                 "*" if r["config"] == d["chosen"] else ""] for rank, r in enumerate(ranked)]
        return ["field", "value"], summary, ["rank", "config", "mean_acc", "se_acc", "chosen"], rows
    if kind == "type1_study":
        rows = [[r["test"], r["rejections"], r["worlds"], r["rejection_rate"], r["wilson_lower"],
                 r["wilson_upper"], r["degenerate"]] for r in d["rates"]]
        summary = [["worlds", d["world_count"]], ["null_mode", d["null_mode"]], ["alpha", d["alpha"]]]
        return (["field", "value"], summary,
                ["test", "rejections", "worlds", "rejection_rate", "wilson_lower", "wilson_upper",
                 "degenerate"], rows)
    if kind == "table":
        return [], [], list(d["columns"]), [list(r) for r in d["rows"]]
    return ["field", "value"], [[k, v] for k, v in sorted(d.items())], [], []


def render(report: Any, fmt: str) -> str:
    if fmt not in FORMATS:
        raise DataError(f"unknown format {fmt!r}")
    if fmt == "json":
        return to_json(report)
    d = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    sh, srows, dh, drows = _tabulate(d)
    if fmt == "csv":
        # CSV carries the per-round log when there is one, the summary otherwise
        return _csv(dh, drows) if dh else _csv(sh, srows)
    parts = []
    if sh:
        parts.append(markdown_table(sh, srows))
    if dh and drows:
        parts.append(markdown_table(dh, drows))
    return "\n".join(parts)


def emit_report(report: Any, fmt: str = "json", path=None) -> str:
    """Render ``report`` and write it to ``path`` (stdout when None)."""
    text = render(report, fmt)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc}") from exc
    return text


def write_table(columns: Sequence[str], rows: Sequence[Sequence[Any]], path) -> None:
    """Tidy CSV for external plotting."""
    try:
        Path(path).write_text(_csv(columns, rows), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc

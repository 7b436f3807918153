import csv
import io
import json
from importlib import resources

import numpy as np
import pytest

from modeleval.core import DataError, EvalReport, RoundRecord, TestReport
from modeleval.dataio import (
    emit_report,
    encode_labels,
    ingest_dataset,
    ingest_predictions,
    render,
    to_json,
    write_table,
)

IRIS = resources.files("modeleval") / "data" / "iris.csv"


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestIngestDataset:
    def test_bundled_iris(self):
        with resources.as_file(IRIS) as path:
            data = ingest_dataset(path, "species")
        assert (data.n, data.d, data.class_count) == (150, 4, 3)
        assert data.class_counts().tolist() == [50, 50, 50]

    def test_label_by_index(self):
        with resources.as_file(IRIS) as path:
            by_name = ingest_dataset(path, "species")
            by_index = ingest_dataset(path, -1)
        assert np.array_equal(by_name.features, by_index.features)
        assert np.array_equal(by_name.labels, by_index.labels)

    def test_header_only(self, tmp_path):
        with pytest.raises(DataError, match="empty dataset"):
            ingest_dataset(write(tmp_path, "a,b,label\n"), "label")

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = write(tmp_path, "a,b,label\n1,2,x\n3,abc,y\n")
        with pytest.raises(DataError, match=r"row 3, column 'b'.*'abc'"):
            ingest_dataset(path, "label")

    @pytest.mark.parametrize("cell", ["", "nan", "inf"])
    def test_missing_or_nonfinite(self, tmp_path, cell):
        with pytest.raises(DataError, match="row 2"):
            ingest_dataset(write(tmp_path, f"a,label\n{cell},x\n"), "label")

    def test_unknown_label_column(self, tmp_path):
        with pytest.raises(DataError, match="unknown label column"):
            ingest_dataset(write(tmp_path, "a,label\n1,x\n"), "class")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            ingest_dataset(tmp_path / "absent.csv", 0)

    def test_ragged_row(self, tmp_path):
        with pytest.raises(DataError, match="row 3"):
            ingest_dataset(write(tmp_path, "a,b,label\n1,2,x\n1,x\n"), "label")

    def test_first_appearance_encoding(self, tmp_path):
        data = ingest_dataset(write(tmp_path, "a,label\n1,dog\n2,cat\n3,dog\n4,emu\n"), "label")
        assert data.labels.tolist() == [0, 1, 0, 2]

    def test_encode_labels(self):
        codes, names = encode_labels(["b", "a", "b", "c"])
        assert codes.tolist() == [0, 1, 0, 2] and names == ["b", "a", "c"]


class TestIngestPredictions:
    def test_table2(self, table2_predictions):
        assert table2_predictions.model_names == ["C1", "C2", "C3"]
        assert table2_predictions.y_true.size == 100
        assert all(p.size == 100 for p in table2_predictions.predictions)

    def test_single_model_column_loads(self, tmp_path):
        preds = ingest_predictions(write(tmp_path, "y_true,m\n0,0\n1,0\n"))
        assert len(preds.predictions) == 1

    def test_needs_two_columns(self, tmp_path):
        with pytest.raises(DataError):
            ingest_predictions(write(tmp_path, "y_true\n0\n1\n"))

    def test_ragged(self, tmp_path):
        with pytest.raises(DataError, match="row 3"):
            ingest_predictions(write(tmp_path, "y_true,m1,m2\n0,0,1\n1,0\n"))

    def test_joint_encoding(self, tmp_path):
        preds = ingest_predictions(write(tmp_path, "y_true,m\ncat,dog\ndog,dog\n"))
        assert preds.y_true.tolist() == [0, 1]
        assert preds.predictions[0].tolist() == [1, 1]


def _test_report():
    rounds = tuple(RoundRecord(i, 0, 0.8 + 0.01 * i, 0.79) for i in range(3))
    return TestReport.from_p("paired_t_kfold", 2.5, "t", 2, 0.13, 0.05,
                             warnings=("note",), rounds=rounds, details={"k": 3})


class TestEmit:
    def test_json_round_trip(self):
        report = _test_report()
        assert json.loads(to_json(report)) == report.to_dict()
        assert json.loads(to_json(report))["schema_version"]

    def test_csv_rows_per_round(self):
        report = EvalReport("repeated_holdout", 0.9, [0.9] * 50)
        rows = list(csv.reader(io.StringIO(render(report, "csv"))))
        assert rows[0] == ["round", "accuracy"]
        assert len(rows) - 1 == 50

    def test_markdown_four_decimals(self):
        text = render(_test_report(), "markdown")
        assert "| t | 2.5000 |" in text and "| p_value | 0.1300 |" in text

    def test_unknown_format(self):
        with pytest.raises(DataError):
            render(_test_report(), "xml")

    def test_emit_to_file(self, tmp_path):
        path = tmp_path / "r.json"
        text = emit_report(_test_report(), "json", path)
        assert path.read_text() == text

    def test_emit_stdout(self, capsys):
        text = emit_report(_test_report(), "markdown")
        assert capsys.readouterr().out == text

    def test_unwritable(self, tmp_path):
        with pytest.raises(DataError, match="cannot write"):
            emit_report(_test_report(), "json", tmp_path / "missing" / "r.json")

    def test_write_table(self, tmp_path):
        path = tmp_path / "t.csv"
        write_table(["a", "b"], [(1, 0.5), (2, 0.25)], path)
        assert path.read_text() == "a,b\n1,0.5\n2,0.25\n"

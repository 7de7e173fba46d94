"""Tests for report writers."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from carnotgg.models import Criterion, GaussGreenReport
from carnotgg.output import CSV_COLUMNS, CsvReportWriter, JsonReportWriter, PrintReportWriter, format_float


def _reports():
    return [
        GaussGreenReport("gauss_green[res=32]", 1.0 / 3.0, 0.3333, 1e-2, meta={"resolution": np.int64(32), "domain": "ball"}),
        GaussGreenReport("trace_bound", 1.5, 1.0, 1e-10, criterion=Criterion.UPPER_BOUND, meta={"point": np.array([0.5, 0.0])}),
        GaussGreenReport("broken", math.nan, math.nan, 1e-2, meta={"error": "DomainError: boom"}),
    ]


def test_format_float_round_trips():
    for value in (1.0 / 3.0, 1e-300, 12345.678):
        assert float(format_float(value)) == value


def test_csv_columns_and_values(tmp_path):
    path = tmp_path / "out" / "report.csv"
    CsvReportWriter(str(path)).write(_reports())
    with path.open(encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert list(rows[0]) == CSV_COLUMNS
    assert rows[0]["scenario"] == "gauss_green[res=32]"
    assert float(rows[0]["lhs"]) == 1.0 / 3.0
    assert rows[0]["pass"] == "true"
    assert json.loads(rows[0]["meta"]) == {"domain": "ball", "resolution": 32}
    assert rows[1]["pass"] == "false"
    assert json.loads(rows[1]["meta"]) == {"point": [0.5, 0.0]}
    assert rows[2]["lhs"] == "nan"


def test_csv_is_byte_identical_across_writes(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    CsvReportWriter(str(first)).write(_reports())
    CsvReportWriter(str(second)).write(_reports())
    assert first.read_bytes() == second.read_bytes()


def test_json_tree(tmp_path):
    path = tmp_path / "report.json"
    JsonReportWriter(str(path)).write(_reports(), {"seed": 5})
    tree = json.loads(path.read_text(encoding="utf-8"))
    assert tree["config"] == {"seed": 5}
    assert tree["passed"] is False
    assert tree["summary"]["gauss_green"]["count"] == 1
    first = tree["reports"][0]
    assert first["criterion"] == "identity"
    assert first["tolerance"] == 1e-2
    assert tree["reports"][1]["criterion"] == "upper_bound"
    assert tree["reports"][2]["lhs"] == "nan"


def test_print_writer():
    stream = io.StringIO()
    PrintReportWriter(stream).write(_reports())
    lines = stream.getvalue().splitlines()
    assert lines[0].startswith("PASS  gauss_green[res=32]")
    assert lines[1].startswith("FAIL  trace_bound")
    assert lines[-1] == "1/3 passed"


def test_nested_non_finite_values_stay_strict_json(tmp_path):
    report = GaussGreenReport(
        "refinement",
        1.0,
        1.0,
        1e-2,
        meta={"scores": [0.1, math.nan], "study": {"rate": math.inf, "ladder": np.array([1.0, -np.inf])}},
    )
    path = tmp_path / "report.json"
    JsonReportWriter(str(path)).write([report])
    text = path.read_text(encoding="utf-8")
    assert "NaN" not in text and "Infinity" not in text
    meta = json.loads(text)["reports"][0]["meta"]
    assert meta == {"scores": [0.1, "nan"], "study": {"rate": "inf", "ladder": [1.0, "-inf"]}}

    csv_path = tmp_path / "report.csv"
    CsvReportWriter(str(csv_path)).write([report])
    with csv_path.open(newline="", encoding="utf-8") as handle:
        row = next(csv.DictReader(handle))
    assert json.loads(row["meta"])["study"]["rate"] == "inf"

"""Report writer interfaces and implementations."""

from __future__ import annotations

import csv
import json
import math
import sys
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

import numpy as np

from .metrics.convergence import summarize_reports
from .models import GaussGreenReport

CSV_COLUMNS = ["scenario", "lhs", "rhs", "residual", "rel_residual", "pass", "meta"]


class ReportWriter(ABC):
    """Base interface for report sinks."""

    @abstractmethod
    def write(self, reports: List[GaussGreenReport], config: Optional[Dict[str, Any]] = None) -> None:
        """Persist reports (and the resolved configuration, where the sink keeps it)."""


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return format(float(value), ".17g")


def _csv_row(report: GaussGreenReport) -> Dict[str, str]:
    row = report.to_row()
    return {
        "scenario": row["scenario"],
        "lhs": format_float(row["lhs"]),
        "rhs": format_float(row["rhs"]),
        "residual": format_float(row["residual"]),
        "rel_residual": format_float(row["rel_residual"]),
        "pass": "true" if row["pass"] else "false",
        "meta": json.dumps(_finite_or_string(row["meta"]), sort_keys=True, default=_jsonable, allow_nan=False),
    }


# --------------------------------------------------------------------------- #
# Writers
# --------------------------------------------------------------------------- #
class PrintReportWriter(ReportWriter):
    def __init__(self, stream: Optional[TextIO] = None) -> None:
        self.stream = stream

    def write(self, reports: List[GaussGreenReport], config: Optional[Dict[str, Any]] = None) -> None:
        stream = self.stream or sys.stdout
        width = max([len(r.scenario) for r in reports] + [8])
        for report in reports:
            verdict = "PASS" if report.passed else "FAIL"
            stream.write(
                f"{verdict}  {report.scenario:<{width}}  lhs={report.lhs: .6e}  rhs={report.rhs: .6e}  "
                f"rel={report.rel_residual:.3e}\n"
            )
        passed = sum(r.passed for r in reports)
        stream.write(f"{passed}/{len(reports)} passed\n")


class CsvReportWriter(ReportWriter):
    """``scenario,lhs,rhs,residual,rel_residual,pass,meta``; byte-identical for identical reports."""

    def __init__(self, path: str = "report.csv") -> None:
        self.path = Path(path)

    def write(self, reports: List[GaussGreenReport], config: Optional[Dict[str, Any]] = None) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for report in reports:
                writer.writerow(_csv_row(report))


class JsonReportWriter(ReportWriter):
    """Structured tree: resolved configuration, every report in full, per-kind summary."""

    def __init__(self, path: str = "report.json") -> None:
        self.path = Path(path)

    def write(self, reports: List[GaussGreenReport], config: Optional[Dict[str, Any]] = None) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tree = {
            "config": _finite_or_string(config or {}),
            "passed": all(r.passed for r in reports),
            "summary": _finite_or_string(summarize_reports(reports)),
            "reports": [_finite_or_string(r.to_dict()) for r in reports],
        }
        with self.path.open("w", encoding="utf-8") as handle:
            json.dump(tree, handle, ensure_ascii=False, indent=2, sort_keys=True, default=_jsonable, allow_nan=False)


def _finite_or_string(value: Any) -> Any:
    """Replace non-finite numbers anywhere in the tree by strings so it stays strict JSON."""
    if isinstance(value, dict):
        return {key: _finite_or_string(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_string(item) for item in value]
    if isinstance(value, np.ndarray):
        return _finite_or_string(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value

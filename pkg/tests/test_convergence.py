"""Tests for convergence helpers."""

from __future__ import annotations

import math

import pytest

from carnotgg.metrics.convergence import is_nonincreasing, observed_order, step_ratios, summarize_reports
from carnotgg.models import GaussGreenReport


@pytest.mark.parametrize(
    "values, expected",
    [
        ([0.4, 0.2, 0.05], [0.5, 0.25]),
        ([0.0, 0.0], [0.0]),
        ([0.0, 1e-3], [math.inf]),
        ([1.0], []),
    ],
)
def test_step_ratios(values, expected):
    assert step_ratios(values) == pytest.approx(expected)


@pytest.mark.parametrize(
    "values, slack, expected",
    [
        ([0.4, 0.2, 0.05], 0.0, True),
        ([0.1, 0.105], 0.1, True),
        ([0.1, 0.2], 0.1, False),
        ([1e-16, 5e-15], 0.0, True),
    ],
)
def test_is_nonincreasing(values, slack, expected):
    assert is_nonincreasing(values, slack) is expected


def test_observed_order():
    orders = observed_order([1e-2, 2.5e-3, 0.0], [0.2, 0.1, 0.05])
    assert orders[0] == pytest.approx(2.0)
    assert math.isnan(orders[1])


def test_summarize_reports_groups_by_scenario_kind():
    reports = [
        GaussGreenReport("gauss_green[res=32]", 1.02, 1.0, 0.01),
        GaussGreenReport("gauss_green[res=64]", 1.005, 1.0, 0.01),
        GaussGreenReport("haar", 2.0, 2.0, 0.01),
    ]
    summary = summarize_reports(reports)
    assert summary["gauss_green"]["count"] == 2
    assert summary["gauss_green"]["passed"] == 1
    assert summary["gauss_green"]["max_rel_residual"] == pytest.approx(0.02)
    assert summary["haar"]["mean_rel_residual"] == 0.0

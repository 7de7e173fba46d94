"""Tests for the Gauss-Green, Green and trace checks."""

from __future__ import annotations

import math

import numpy as np
import pytest

from carnotgg.algebra import load_preset
from carnotgg.domains import box_domain, complement_domain, euclidean_ball, half_space, koranyi_ball, sample_boundary, volume_integral
from carnotgg.errors import AlignmentError, DomainError, SupportError
from carnotgg.expressions import parse_expression, symbolic_horizontal_field, symbolic_scalar_field
from carnotgg.fields import bump, frame_field, sin_example_field
from carnotgg.gaussgreen import (
    half_density_values,
    normal_traces,
    refinement_study,
    verify_divergence_free_example,
    verify_gauss_green,
    verify_green_first,
    verify_green_second,
    verify_half_density,
    verify_integration_by_parts,
    verify_trace_bound,
    verify_trace_locality,
)
from carnotgg.metric import HomogeneousNorm
from carnotgg.models import BoxRegion, Criterion, GaussGreenReport, QuadratureKind, QuadratureSpec, ScalarField
from carnotgg.mollify import Mollifier

# box volumes are integrated on a midpoint grid laid on the box itself
BOX_QUAD = QuadratureSpec(resolution=30)


@pytest.fixture(scope="module")
def h1():
    return load_preset("heisenberg1")


@pytest.fixture(scope="module")
def unit_box(h1):
    return box_domain(h1, [-1.0] * 3, [1.0] * 3)


def _scalar(a, text):
    return symbolic_scalar_field(a, parse_expression(text, a), name=text)


def _field(a, *texts):
    return symbolic_horizontal_field(a, [parse_expression(t, a) for t in texts])


def test_gauss_green_on_the_box_is_exact(h1, unit_box):
    F = _field(h1, "x*z", "y")
    report = verify_gauss_green(h1, F, unit_box, 8, BOX_QUAD, tolerance=1e-9)
    assert report.lhs == pytest.approx(8.0)
    assert report.passed
    assert report.meta["boundary_source"] == "chart"
    assert report.terms == {"volume": report.lhs, "flux": report.rhs}


def test_gauss_green_on_the_ball(h1):
    F = _field(h1, "x", "0")
    report = verify_gauss_green(h1, F, euclidean_ball(h1), 48)
    assert report.lhs == pytest.approx(4.0 * math.pi / 3.0, rel=1e-2)
    assert report.rhs == pytest.approx(4.0 * math.pi / 3.0, rel=1e-2)
    assert report.passed
    assert report.meta["boundary_source"] == "mesh"


def test_green_first(h1, unit_box):
    report = verify_green_first(h1, _scalar(h1, "x^2"), _scalar(h1, "1"), unit_box, 8, BOX_QUAD)
    assert report.lhs == pytest.approx(16.0)
    assert report.terms["gradient_pairing"] == pytest.approx(0.0, abs=1e-12)
    assert report.passed


def test_green_second(h1, unit_box):
    report = verify_green_second(h1, _scalar(h1, "x^2"), _scalar(h1, "y^2"), unit_box, 16, BOX_QUAD)
    assert abs(report.lhs) < 1e-10
    assert abs(report.rhs) < 1e-10
    assert report.passed


def test_integration_by_parts(h1, unit_box):
    report = verify_integration_by_parts(h1, _field(h1, "x", "0"), _scalar(h1, "x^2 + 1"), unit_box, 8, BOX_QUAD)
    assert report.rhs == pytest.approx(16.0)
    assert report.passed


def test_trace_bound(h1):
    ball = euclidean_ball(h1)
    report = verify_trace_bound(h1, frame_field(h1, 0), ball, 24, QuadratureSpec(resolution=16))
    assert report.criterion == Criterion.UPPER_BOUND
    assert report.rhs == pytest.approx(1.0)
    assert report.lhs <= 1.0 + 1e-12
    assert report.passed
    assert report.meta["declared_bound"] == 1.0
    assert verify_trace_bound(h1, sin_example_field(h1), ball, 24, QuadratureSpec(resolution=16)).passed


def test_normal_traces_vanish_at_characteristic_samples(h1):
    samples = sample_boundary(h1, half_space(h1, 2, 0.0), 8)
    traces = normal_traces(samples, frame_field(h1, 1))
    # X2 paired with the z-plane normal gives x / sqrt(x^2 + y^2)
    p = samples.points
    np.testing.assert_allclose(traces, p[:, 0] / np.hypot(p[:, 0], p[:, 1]))


def _on_face(points):
    return np.abs(points[:, 0] - 1.0) < 1e-9


def test_trace_locality_opposite_normals(h1, unit_box):
    neighbour = box_domain(h1, [1.0, -1.0, -1.0], [3.0, 1.0, 1.0])
    report = verify_trace_locality(h1, _field(h1, "x*z", "y^2"), unit_box, neighbour, _on_face, 8)
    assert report.meta["orientation"] == "opposite"
    assert report.meta["patch_samples"] == 64
    assert report.lhs < 1e-12
    assert report.passed


def test_trace_locality_same_normals(h1, unit_box):
    other = half_space(h1, 0, 1.0, BoxRegion([-2.0, -1.0, -1.0], [2.0, 1.0, 1.0]))
    report = verify_trace_locality(h1, sin_example_field(h1), unit_box, other, _on_face, 8)
    assert report.meta["orientation"] == "same"
    assert report.passed


def test_trace_locality_alignment_errors(h1, unit_box):
    F = frame_field(h1, 0)
    taller = box_domain(h1, [-1.0, -1.0, -1.0], [1.0, 1.0, 2.0])
    with pytest.raises(AlignmentError):
        verify_trace_locality(h1, F, unit_box, taller, _on_face, 8)
    with pytest.raises(AlignmentError):
        verify_trace_locality(h1, F, unit_box, complement_domain(unit_box), lambda p: p[:, 0] > 5.0, 8)


def test_divergence_free_example(h1):
    quad = QuadratureSpec(QuadratureKind.GAUSS_LEGENDRE, 24)
    bumps = [bump([1.0, 0.0, 0.0], 0.3, name="right"), bump([-0.5, 0.6, 0.2], 0.3, name="left")]
    reports = verify_divergence_free_example(h1, quad, bumps)
    assert [r.scenario for r in reports] == ["divergence_free[right]", "divergence_free[left]"]
    assert all(r.passed for r in reports)
    assert reports[0].meta["plane_gap"] == pytest.approx(0.4)


@pytest.mark.parametrize(
    "phi",
    [
        bump([0.0, 0.0, 0.0], 0.3),
        bump([0.6, 0.0, 0.0], 0.3),
        ScalarField(eval=lambda x: np.ones(x.shape[0]), name="unbounded"),
    ],
)
def test_divergence_free_example_needs_separated_supports(h1, phi):
    with pytest.raises(SupportError):
        verify_divergence_free_example(h1, QuadratureSpec(resolution=8), [phi])


@pytest.fixture(scope="module")
def mollifier(h1):
    return Mollifier(HomogeneousNorm(h1), "linear", stencil=QuadratureSpec(resolution=12), check_samples=0)


def test_half_density_on_a_half_space(h1, mollifier):
    d = half_space(h1, 0, 0.0)
    np.testing.assert_allclose(half_density_values(mollifier, d, [0.2, 0.1], 8), 0.5, atol=1e-12)
    reports = verify_half_density(mollifier, d, [0.2, 0.1], 8)
    assert [r.scenario for r in reports] == ["half_density[trend eps=0.1]", "half_density[limit]"]
    assert all(r.passed for r in reports)
    assert reports[-1].terms == {"A[eps=0.2]": pytest.approx(0.5), "A[eps=0.1]": pytest.approx(0.5)}


def test_half_density_validates_its_inputs(h1, mollifier):
    d = half_space(h1, 0, 0.0)
    with pytest.raises(DomainError):
        verify_half_density(mollifier, d, [0.1, 0.2], 8)
    tight = euclidean_ball(h1, 1.0, margin=0.1)
    with pytest.raises(DomainError):
        half_density_values(mollifier, tight, [0.2], 16)


def _fake_run(residual):
    return lambda r: GaussGreenReport("fake", 1.0 + residual(r), 1.0, 0.05)


def test_refinement_study_accepts_shrinking_residuals():
    study = refinement_study(_fake_run(lambda r: 1.0 / r), [10, 20, 40])
    assert study.monotone and study.passed
    assert study.ratios == pytest.approx([0.5, 0.5])
    verdict = study.verdict("fake")
    assert verdict.scenario == "fake[refinement]"
    assert verdict.passed
    assert verdict.meta["resolutions"] == [10, 20, 40]


def test_refinement_study_flags_growth():
    study = refinement_study(_fake_run(lambda r: r / 1000.0), [10, 20])
    assert not study.monotone
    assert not study.verdict("fake").passed


def test_frame_fields_on_the_ball_use_an_absolute_verdict(h1):
    ball = euclidean_ball(h1)
    for j in range(h1.m):
        report = verify_gauss_green(h1, frame_field(h1, j), ball, 64, criterion=Criterion.ABSOLUTE, tolerance=1e-3)
        # div X_j vanishes identically, only the mesh flux is left
        assert report.lhs == 0.0
        assert report.criterion == Criterion.ABSOLUTE
        assert report.score == report.residual
        assert report.passed


def test_absolute_criterion_ignores_the_size_of_the_sides():
    absolute = GaussGreenReport("flux", 0.0, 3e-4, 1e-3, Criterion.ABSOLUTE)
    relative = GaussGreenReport("flux", 0.0, 3e-4, 1e-2)
    assert absolute.passed
    assert relative.rel_residual == pytest.approx(1.0)
    assert not relative.passed
    assert relative.score == relative.rel_residual
    assert not GaussGreenReport("flux", math.nan, 0.0, 1e-3, Criterion.ABSOLUTE).passed


def test_koranyi_flux_has_a_nonzero_volume_side(h1):
    F = _field(h1, "x + y*z", "y")
    report = verify_gauss_green(h1, F, koranyi_ball(h1), 48)
    # div F = 2 - y^2 on (x^2 + y^2)^2 + z^2 < 1
    assert report.lhs == pytest.approx(math.pi ** 2 - math.pi / 3.0, rel=1e-6)
    assert report.lhs > 8.0
    assert report.passed


def test_ball_volume_is_integrated_on_a_cone_rule(h1):
    ball = euclidean_ball(h1)
    one = lambda x: np.ones(x.shape[0])
    assert volume_integral(h1, ball, one, QuadratureSpec(resolution=32)) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-8)
    gl = QuadratureSpec(QuadratureKind.GAUSS_LEGENDRE, 16)
    assert volume_integral(h1, ball, lambda x: x[:, 0] ** 2, gl) == pytest.approx(4.0 * math.pi / 15.0, rel=1e-8)


def test_gauss_green_on_the_ball_refines_monotonically(h1):
    F = _field(h1, "x", "0")
    ball = euclidean_ball(h1)
    study = refinement_study(lambda r: verify_gauss_green(h1, F, ball, r), [24, 48])
    assert study.monotone
    assert study.reports[-1].rel_residual < study.reports[0].rel_residual
    assert study.passed


def test_gauss_legendre_on_a_heisenberg2_box_is_exact():
    h2 = load_preset("heisenberg2")
    F = _field(h2, "x1*x5", "x2^2", "x3", "x4*x1")
    box = box_domain(h2, [-1.0] * 5, [1.0] * 5)
    report = verify_gauss_green(h2, F, box, 6, QuadratureSpec(QuadratureKind.GAUSS_LEGENDRE, 8))
    assert report.lhs == pytest.approx(32.0, abs=1e-9)


def test_complement_negates_the_flux(h1, unit_box):
    F = _field(h1, "x*z", "y")
    inside = verify_gauss_green(h1, F, unit_box, 8, BOX_QUAD)
    outside = verify_gauss_green(h1, F, complement_domain(unit_box), 8, BOX_QUAD)
    assert outside.rhs == pytest.approx(-inside.rhs, rel=1e-12)
    ball = euclidean_ball(h1)
    G = _field(h1, "x", "y*z")
    forward = verify_gauss_green(h1, G, ball, 24, QuadratureSpec(resolution=16))
    backward = verify_gauss_green(h1, G, complement_domain(ball), 24, QuadratureSpec(resolution=16))
    assert backward.rhs == pytest.approx(-forward.rhs, rel=1e-9)
    assert backward.meta["boundary_samples"] == forward.meta["boundary_samples"]


def test_green_second_with_equal_functions_is_exactly_zero(h1):
    u = _scalar(h1, "x^2 + y*z")
    report = verify_green_second(h1, u, u, euclidean_ball(h1), 24, QuadratureSpec(resolution=16))
    assert report.lhs == 0.0
    assert report.rhs == 0.0
    assert report.passed


def test_green_identities_on_the_box_with_gauss_legendre(h1, unit_box):
    gl = QuadratureSpec(QuadratureKind.GAUSS_LEGENDRE, 8)
    u = _scalar(h1, "x^2 + y*z")
    first = verify_green_first(h1, u, _scalar(h1, "x + 1"), unit_box, 32, gl)
    assert first.lhs == pytest.approx(64.0 / 3.0, rel=1e-10)
    assert first.terms["gradient_pairing"] == pytest.approx(-8.0 / 3.0, rel=1e-10)
    assert first.passed
    second = verify_green_second(h1, u, _scalar(h1, "x^3 + y^2"), unit_box, 32, gl)
    assert second.lhs == pytest.approx(3.2, rel=1e-10)
    assert second.passed


def test_trace_locality_where_a_ball_touches_a_half_space(h1):
    window = BoxRegion([0.9995, -9e-4, -9e-4], [1.0005, 9e-4, 9e-4])
    ball = euclidean_ball(h1, 1.0, window=window)
    plane = half_space(h1, 0, 1.0, window)
    report = verify_trace_locality(h1, frame_field(h1, 0), ball, plane, window.contains, 16, tolerance=1e-5, align_cells=1.0)
    assert report.meta["orientation"] == "same"
    assert report.meta["align_tol"] == pytest.approx(1.8e-3 / 16)
    assert report.lhs < 1e-5
    assert report.passed
    with pytest.raises(AlignmentError):
        verify_trace_locality(h1, frame_field(h1, 0), ball, plane, window.contains, 16)

"""Tests for group-convolution mollifiers."""

from __future__ import annotations

import numpy as np
import pytest

from carnotgg.algebra import load_preset
from carnotgg.domains import euclidean_ball, half_space
from carnotgg.errors import DomainError, PresetNotFoundError
from carnotgg.expressions import parse_expression, symbolic_scalar_field
from carnotgg.fields import bump
from carnotgg.metric import HomogeneousNorm
from carnotgg.models import BoxRegion, NormKind, QuadratureKind, QuadratureSpec
from carnotgg.mollify import PROFILES, Mollifier, right_ball_average

STENCIL = QuadratureSpec(resolution=12)


@pytest.fixture(scope="module")
def h1():
    return load_preset("heisenberg1")


@pytest.fixture(scope="module")
def mollifier(h1):
    return Mollifier(HomogeneousNorm(h1), "linear", stencil=STENCIL, check_samples=20_000, seed=1)


@pytest.mark.parametrize("profile", sorted(PROFILES))
@pytest.mark.parametrize("kind", [NormKind.GAUGE, NormKind.BOX])
def test_kernel_is_normalised(h1, profile, kind):
    m = Mollifier(HomogeneousNorm(h1, kind), profile, stencil=STENCIL, check_samples=50_000, seed=2)
    estimate, std_error = m.normalization_check
    assert abs(estimate - 1.0) < 4.0 * std_error + 1e-9
    assert m.symmetry_defect == 0.0
    nodes, weights = m.stencil()
    assert weights.sum() == pytest.approx(1.0)
    assert np.all(HomogeneousNorm(h1, kind)(nodes) < 1.0)


def test_profile_validation(h1):
    norm = HomogeneousNorm(h1)
    with pytest.raises(PresetNotFoundError):
        Mollifier(norm, "gaussian", stencil=STENCIL, check_samples=0)
    with pytest.raises(DomainError):
        Mollifier(norm, lambda t: 1.0 + 0.0 * t, stencil=STENCIL, check_samples=0)


def test_mollified_constant_and_linear_fields(h1, mollifier):
    p = np.array([[0.3, -0.4, 0.2], [1.0, 1.0, -1.0]])
    np.testing.assert_allclose(mollifier.mollify_scalar(0.2, lambda x: np.full(x.shape[0], 3.0), p), 3.0)
    np.testing.assert_allclose(mollifier.mollify_scalar(0.2, lambda x: x[:, 0], p), p[:, 0], atol=1e-12)
    single = mollifier.mollify_scalar(0.2, lambda x: x[:, 2], p[0])
    assert isinstance(single, float)
    assert single == pytest.approx(p[0, 2], abs=1e-12)


@pytest.mark.parametrize(
    "make",
    [
        lambda a: symbolic_scalar_field(a, parse_expression("z", a)),
        lambda a: symbolic_scalar_field(a, parse_expression("x*y + sin(z)", a)),
        lambda a: bump(np.zeros(3), 1.0),
    ],
)
def test_mollification_commutes_with_the_frame(h1, mollifier, make):
    f = make(h1)
    p = np.array([0.1, -0.2, 0.3])
    for j in range(h1.m):
        assert mollifier.commutation_residual(0.2, f, j, p) < 1e-6


def test_pointwise_errors_shrink_for_smooth_fields(h1, mollifier):
    f = symbolic_scalar_field(h1, parse_expression("x^2", h1))
    errors = mollifier.pointwise_limit_errors(f, np.array([0.5, 0.2, 0.1]), [0.2, 0.1, 0.05])
    assert errors[0] > errors[1] > errors[2]
    assert errors[-1] < 1e-2


def test_inner_set_is_enforced(h1, mollifier):
    f = lambda x: x[:, 0]
    with pytest.raises(DomainError):
        mollifier.mollify_scalar(0.2, f, np.array([0.95, 0.0, 0.0]), region=BoxRegion.cube(3, 1.0))
    with pytest.raises(DomainError):
        mollifier.mollify_scalar(0.0, f, np.zeros(3))


def test_half_space_indicator_has_density_one_half(h1, mollifier):
    domain = half_space(h1, 0, 0.0)
    points = np.array([[0.0, 0.3, -0.2], [0.0, -0.5, 0.5]])
    np.testing.assert_allclose(mollifier.mollify_indicator(0.1, domain, points), 0.5, atol=1e-12)
    np.testing.assert_allclose(mollifier.mollify_indicator(0.1, domain, np.array([[-0.5, 0.0, 0.0]])), 1.0)


def test_mollified_gradient_vanishes_off_the_band(h1, mollifier):
    domain = half_space(h1, 0, 0.0)
    grad = mollifier.mollified_gradient(0.05, domain, np.array([[0.5, 0.0, 0.0], [-0.5, 0.2, 0.1]]))
    assert np.all(grad == 0.0)


def test_total_variation_is_bounded_by_perimeter(h1, mollifier):
    window = BoxRegion([-0.1, -1.0, -2.0], [0.1, 1.0, 2.0])
    domain = half_space(h1, 0, 0.0, window)
    lhs, rhs = mollifier.total_variation_bound_check(
        0.02, domain, window, resolution=(40, 4, 4), boundary_resolution=8, quad=QuadratureSpec(resolution=24)
    )
    assert rhs == pytest.approx(8.0)
    assert 0.8 * rhs <= lhs <= 1.1 * rhs


def test_right_ball_average(h1):
    norm = HomogeneousNorm(h1)
    assert right_ball_average(norm, lambda x: np.full(x.shape[0], 2.0), np.zeros(3), 0.1, STENCIL) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        right_ball_average(norm, lambda x: x[:, 0], np.zeros(3), 0.0)


def test_describe(mollifier):
    info = mollifier.describe()
    assert info["profile"] == "linear"
    assert info["stencil"]["resolution"] == 12
    assert info["stencil_nodes"] > 0


def test_kernel_commutation_residual_shrinks_with_the_grid(h1):
    m = Mollifier(HomogeneousNorm(h1), "cosine", stencil=STENCIL, check_samples=0)
    f = symbolic_scalar_field(h1, parse_expression("z", h1))
    p = np.array([0.1, -0.2, 0.3])
    residuals = [
        max(m.commutation_residual(0.2, f, j, p, QuadratureSpec(resolution=r), method="kernel") for j in range(h1.m))
        for r in (8, 32)
    ]
    assert residuals[-1] < residuals[0]
    assert residuals[-1] < 0.05
    with pytest.raises(DomainError):
        m.commutation_residual(0.2, f, 0, p, method="spectral")


def test_pointwise_errors_at_a_kink_are_first_order(h1, mollifier):
    f = symbolic_scalar_field(h1, parse_expression("abs(x)", h1))
    errors = mollifier.pointwise_limit_errors(f, np.array([0.0, 0.1, 0.0]), [0.2, 0.1, 0.05, 0.025])
    assert all(e > 1e-4 for e in errors)
    ratios = [b / a for a, b in zip(errors, errors[1:])]
    assert all(0.3 <= r <= 0.7 for r in ratios)
    assert errors[-1] < 1e-2


def test_total_variation_ball_stays_below_the_perimeter(h1, mollifier):
    region = BoxRegion([0.4, -0.4, -1.0], [1.4, 0.4, 1.0])
    lhs, rhs = mollifier.total_variation_bound_check(
        0.1, euclidean_ball(h1), region, resolution=(40, 4, 10), boundary_resolution=24, quad=QuadratureSpec(resolution=8)
    )
    assert rhs > 0.0
    assert 0.0 < lhs <= rhs


def test_total_variation_is_zero_when_the_inner_set_is_empty(h1, mollifier):
    window = BoxRegion([-0.1, -1.0, -2.0], [0.1, 1.0, 2.0])
    lhs, rhs = mollifier.total_variation_bound_check(0.2, half_space(h1, 0, 0.0, window), window, resolution=(8, 4, 4), boundary_resolution=8)
    assert lhs == 0.0
    assert rhs == pytest.approx(8.0)


def test_right_ball_average_of_a_half_space_indicator(h1):
    norm = HomogeneousNorm(h1)
    chi = lambda x: (x[:, 0] < 0.0).astype(float)
    assert right_ball_average(norm, chi, np.zeros(3), 0.1, STENCIL) == pytest.approx(0.5, abs=1e-12)
    mc = QuadratureSpec(QuadratureKind.MONTE_CARLO, samples=20_000, seed=3)
    assert abs(right_ball_average(norm, chi, np.zeros(3), 0.1, mc) - 0.5) < 0.02


def test_right_ball_average_converges_for_continuous_fields(h1):
    norm = HomogeneousNorm(h1)
    p = np.array([0.3, -0.2, 0.1])
    f = lambda x: x[:, 0] ** 2 + x[:, 2]
    errors = [abs(right_ball_average(norm, f, p, r, STENCIL) - (p[0] ** 2 + p[2])) for r in (0.2, 0.1, 0.05, 0.025)]
    assert errors[0] > errors[1] > errors[2] > errors[3] > 0.0
    # the error is the second moment of the dilated ball, exactly quadratic in r
    assert errors[1] / errors[0] == pytest.approx(0.25, rel=1e-6)

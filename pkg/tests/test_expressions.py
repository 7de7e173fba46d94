"""Tests for the expression grammar and symbolic fields."""

from __future__ import annotations

import numpy as np
import pytest

from carnotgg.algebra import load_preset
from carnotgg.errors import ConfigError
from carnotgg.expressions import apply_frame, parse_expression, symbolic_horizontal_field, symbolic_scalar_field, vectorize


@pytest.fixture
def h1():
    return load_preset("heisenberg1")


@pytest.mark.parametrize("text", ["x^2 + y**2", "x1^2 + x2**2", "sqrt(x^4) + y^2"])
def test_parse_accepts_aliases_and_powers(h1, text):
    expr = parse_expression(text, h1)
    fn = vectorize(expr, h1.symbols)
    np.testing.assert_allclose(fn(np.array([[1.0, 2.0, 3.0]])), [5.0])


@pytest.mark.parametrize("text", ["x +", "w * x", "import os", ["x"]])
def test_parse_rejects_bad_input(h1, text):
    with pytest.raises(ConfigError):
        parse_expression(text, h1, path="field.expr")


def test_unknown_variable_names_the_alternatives(h1):
    with pytest.raises(ConfigError, match="x1..x3"):
        parse_expression("t + x", h1)


def test_constant_expression_broadcasts(h1):
    fn = vectorize(parse_expression("2*pi", h1), h1.symbols)
    np.testing.assert_allclose(fn(np.zeros((4, 3))), np.full(4, 2 * np.pi))


def test_apply_frame_on_heisenberg(h1):
    z = parse_expression("z", h1)
    assert str(apply_frame(h1, z, 0)) == "-y"
    assert str(apply_frame(h1, z, 1)) == "x"


def test_symbolic_scalar_field_derivatives(h1):
    field = symbolic_scalar_field(h1, parse_expression("x*y + z^2", h1))
    p = np.array([[0.5, -1.0, 2.0]])
    # X1 = d_x - y d_z, X2 = d_y + x d_z
    np.testing.assert_allclose(field.gradient(p), [[-1.0 + 2.0 * 2.0 * 1.0, 0.5 + 2.0 * 2.0 * 0.5]])
    np.testing.assert_allclose(field.euclidean_gradient(p), [[-1.0, 0.5, 4.0]])
    assert field.smoothness == "C2"


def test_abs_makes_a_lipschitz_field_without_derivatives(h1):
    field = symbolic_scalar_field(h1, parse_expression("abs(x)", h1))
    assert field.smoothness == "Lip"
    assert field.gradient is None and field.sublaplacian is None


def test_symbolic_horizontal_field_divergence(h1):
    F = symbolic_horizontal_field(h1, [parse_expression("z", h1), parse_expression("z", h1)])
    p = np.array([[0.3, 0.7, 1.0]])
    np.testing.assert_allclose(F.divergence(p), [-0.7 + 0.3])
    with pytest.raises(ConfigError):
        symbolic_horizontal_field(h1, [parse_expression("z", h1)])

"""Tests for stratified algebras and the group law."""

from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from carnotgg.algebra import AlgebraAssumptionWarning, StratifiedAlgebra, load_preset, preset_names
from carnotgg.errors import AlgebraError, DomainError, PresetNotFoundError, ShapeError, UnsupportedStepError

PRESETS = ["heisenberg1", "heisenberg2", "engel"]


def _points(q: int):
    return arrays(np.float64, (q,), elements=st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False))


def test_preset_names_are_sorted():
    assert preset_names() == sorted(PRESETS)


@pytest.mark.parametrize(
    "name, layer_dims, Q",
    [("heisenberg1", (2, 1), 4), ("heisenberg2", (4, 1), 6), ("engel", (2, 1, 1), 7)],
)
def test_preset_dimensions(name, layer_dims, Q):
    a = load_preset(name)
    assert a.layer_dims == layer_dims
    assert a.hom_dimension == Q
    assert a.q == sum(layer_dims)
    assert a.jacobi_residual() == 0.0
    assert a.generativity_defect() == []


def test_unknown_preset():
    with pytest.raises(PresetNotFoundError):
        load_preset("nope")


def test_heisenberg_frame_rows():
    a = load_preset("heisenberg1")
    assert a.frame_rows() == ["(1,0,-y)", "(0,1,x)"]


def test_heisenberg_product_closed_form():
    a = load_preset("heisenberg1")
    p = np.array([1.0, 2.0, 3.0])
    q = np.array([-0.5, 0.25, 1.0])
    expected = np.array([0.5, 2.25, 3.0 + 1.0 + (1.0 * 0.25 - 2.0 * -0.5)])
    np.testing.assert_allclose(a.group_product(p, q), expected)


@pytest.mark.parametrize("name", PRESETS)
@hsettings(max_examples=30, deadline=None)
@given(data=st.data())
def test_group_axioms(name, data):
    a = load_preset(name)
    x, y, z = (data.draw(_points(a.q)) for _ in range(3))
    left = a.group_product(a.group_product(x, y), z)
    right = a.group_product(x, a.group_product(y, z))
    np.testing.assert_allclose(left, right, atol=1e-10)
    np.testing.assert_allclose(a.group_product(x, a.identity), x)
    np.testing.assert_allclose(a.group_product(x, a.group_inverse(x)), np.zeros(a.q), atol=1e-12)


@pytest.mark.parametrize("name", PRESETS)
@hsettings(max_examples=30, deadline=None)
@given(data=st.data(), r=st.floats(0.1, 3.0))
def test_dilation_is_an_automorphism(name, data, r):
    a = load_preset(name)
    x, y = data.draw(_points(a.q)), data.draw(_points(a.q))
    np.testing.assert_allclose(
        a.dilate(r, a.group_product(x, y)), a.group_product(a.dilate(r, x), a.dilate(r, y)), atol=1e-9
    )


def test_dilate_rejects_nonpositive():
    with pytest.raises(DomainError):
        load_preset("heisenberg1").dilate(0.0, [1.0, 0.0, 0.0])


def test_group_product_broadcasts():
    a = load_preset("engel")
    rng = np.random.default_rng(0)
    p = rng.normal(size=(5, 4))
    out = a.group_product(p[:, None, :], p[None, :, :])
    assert out.shape == (5, 5, 4)
    np.testing.assert_allclose(out[2, 3], a.group_product(p[2], p[3]))


def test_frame_matches_flow_derivative():
    a = load_preset("engel")
    p = np.array([0.3, -0.7, 0.2, 1.1])
    h = 1e-6
    frame = a.frame_coefficients(p)
    for j in range(a.m):
        numeric = (a.group_product(p, a.exp_horizontal(j, h)) - a.group_product(p, a.exp_horizontal(j, -h))) / (2 * h)
        np.testing.assert_allclose(numeric, frame[j], atol=1e-8)


@pytest.mark.parametrize("bad", [[1.0, 2.0], [[1.0, 2.0]], [np.nan, 0.0, 0.0]])
def test_coords_validation(bad):
    with pytest.raises(ShapeError):
        load_preset("heisenberg1").coords(bad)


def test_exp_horizontal_rejects_vertical_index():
    with pytest.raises(ShapeError):
        load_preset("heisenberg1").exp_horizontal(2, 1.0)


def test_from_config_fills_antisymmetric_partner():
    a = StratifiedAlgebra.from_config({"layer_dims": [2, 1], "brackets": [{"i": 1, "j": 2, "coeffs": {3: 2.0}}]})
    assert a.structure_constants[1, 0, 2] == -2.0
    np.testing.assert_allclose(a.bracket([1, 0, 0], [0, 1, 0]), [0, 0, 2])


@pytest.mark.parametrize(
    "payload",
    [
        {"layer_dims": [2, 1], "brackets": [{"i": 1, "j": 1, "coeffs": {3: 1.0}}]},
        {"layer_dims": [2, 1], "brackets": [{"i": 1, "j": 3, "coeffs": {2: 1.0}}]},
        {"layer_dims": [2, 1], "brackets": [{"i": 1, "j": 2, "coeffs": {7: 1.0}}]},
        {"layer_dims": [2, 1], "step": 3},
        {"layer_dims": "two"},
    ],
)
def test_from_config_rejects_invalid_algebras(payload):
    with pytest.raises(AlgebraError):
        StratifiedAlgebra.from_config(payload)


def test_missing_generativity_only_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        a = StratifiedAlgebra.from_config({"layer_dims": [2, 1]})
    assert a.generativity_defect() == [2]
    assert any(issubclass(w.category, AlgebraAssumptionWarning) for w in caught)


def test_step_beyond_bch_truncation_is_rejected():
    filiform = StratifiedAlgebra.from_config(
        {
            "layer_dims": [2, 1, 1, 1, 1],
            "brackets": [
                {"i": 1, "j": 2, "coeffs": {3: 1.0}},
                {"i": 1, "j": 3, "coeffs": {4: 1.0}},
                {"i": 1, "j": 4, "coeffs": {5: 1.0}},
                {"i": 1, "j": 5, "coeffs": {6: 1.0}},
            ],
        },
        name="filiform5",
    )
    with pytest.raises(UnsupportedStepError):
        filiform.group_product(np.zeros(6), np.zeros(6))


def test_describe_lists_brackets():
    info = load_preset("heisenberg1").describe()
    assert info["brackets"] == ["[e1,e2] = 2*e3"]
    assert info["Q"] == 4
    assert info["coordinates"] == ["x", "y", "z"]

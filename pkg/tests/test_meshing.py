"""Tests for marching tetrahedra."""

from __future__ import annotations

import math

import numpy as np
import pytest

from carnotgg.errors import BoundaryError, EmptyBoundaryError
from carnotgg.meshing import marching_tetrahedra, triangle_areas
from carnotgg.models import BoxRegion

BOX = BoxRegion.cube(3, 1.75)


def sphere(x):
    return np.sum(x ** 2, axis=-1) - 1.0


@pytest.mark.parametrize("resolution", [24, 48])
def test_sphere_area(resolution):
    triangles = marching_tetrahedra(sphere, BOX, resolution)
    assert triangles.shape[1:] == (3, 3)
    np.testing.assert_allclose(np.linalg.norm(triangles, axis=-1), 1.0, atol=0.02)
    assert triangle_areas(triangles).sum() == pytest.approx(4.0 * math.pi, rel=0.03)


def test_complement_mesh_is_identical():
    triangles = marching_tetrahedra(sphere, BOX, 21)
    flipped = marching_tetrahedra(lambda x: -sphere(x), BOX, 21)
    assert np.array_equal(triangles, flipped)


def test_mesh_is_deterministic():
    shifted = lambda x: np.sum((x - 0.1) ** 2, axis=-1) - 0.8
    assert np.array_equal(marching_tetrahedra(shifted, BOX, 16), marching_tetrahedra(shifted, BOX, 16))


def test_plane_is_meshed_exactly():
    triangles = marching_tetrahedra(lambda x: x[..., 0] - 0.3, BoxRegion.cube(3, 1.0), 10)
    np.testing.assert_allclose(triangles[..., 0], 0.3, atol=1e-12)
    assert triangle_areas(triangles).sum() == pytest.approx(4.0)


def test_no_crossing_raises():
    with pytest.raises(EmptyBoundaryError):
        marching_tetrahedra(lambda x: np.sum(x ** 2, axis=-1) + 1.0, BOX, 8)


@pytest.mark.parametrize(
    "bbox, resolution",
    [(BoxRegion.cube(2, 1.0), 8), (BoxRegion.cube(4, 1.0), 8), (BOX, 1)],
)
def test_invalid_grids(bbox, resolution):
    with pytest.raises(BoundaryError):
        marching_tetrahedra(lambda x: np.sum(x ** 2, axis=-1) - 0.5, bbox, resolution)


def test_non_finite_level_values():
    with pytest.raises(BoundaryError):
        marching_tetrahedra(lambda x: np.log(x[..., 0]), BOX, 8)

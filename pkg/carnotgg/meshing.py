"""Marching tetrahedra for three-dimensional level sets.

Each grid cube is split into the six Kuhn tetrahedra around its main
diagonal, which makes neighbouring cubes agree on shared faces. Crossing
points are keyed by their grid edge (lower vertex id first) and every
triangle is stored with its edges in sorted order, so the mesh of {-f < 0}
is the mesh of {f < 0} triangle for triangle.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .config import settings
from .errors import BoundaryError, EmptyBoundaryError
from .models import BoxRegion
from .utils.logging_utils import get_logger

logger = get_logger(__name__)

_CORNERS = np.array([[(c >> 0) & 1, (c >> 1) & 1, (c >> 2) & 1] for c in range(8)])
_TETS = np.array(
    [
        [0, 1, 3, 7],
        [0, 2, 3, 7],
        [0, 2, 6, 7],
        [0, 4, 6, 7],
        [0, 4, 5, 7],
        [0, 1, 5, 7],
    ]
)


def _grid_values(level: Callable[[np.ndarray], np.ndarray], axes: list) -> np.ndarray:
    shape = tuple(len(a) for a in axes)
    total = int(np.prod(shape))
    values = np.empty(total)
    chunk = max(1, settings.eval_chunk // 3)
    for start in range(0, total, chunk):
        index = np.unravel_index(np.arange(start, min(start + chunk, total)), shape)
        pts = np.stack([axis[i] for axis, i in zip(axes, index)], axis=-1)
        values[start : start + len(index[0])] = np.asarray(level(pts), dtype=float)
    return values.reshape(shape)


def marching_tetrahedra(
    level: Callable[[np.ndarray], np.ndarray], bbox: BoxRegion, resolution: int
) -> np.ndarray:
    """Triangles (T, 3, 3) approximating {level = 0} inside ``bbox``.

    ``resolution`` is the number of cubes per axis.
    """
    if bbox.dim != 3:
        raise BoundaryError(f"marching tetrahedra needs a 3-dimensional box, got dimension {bbox.dim}")
    n = int(resolution)
    if n < 2:
        raise BoundaryError("mesh resolution must be at least 2")
    axes = [np.linspace(lo, hi, n + 1) for lo, hi in zip(bbox.lower, bbox.upper)]
    values = _grid_values(level, axes)
    if not np.all(np.isfinite(values)):
        raise BoundaryError("level function returned non-finite values on the grid")

    inside = values < 0.0
    corner_inside = np.stack([inside[dx : dx + n, dy : dy + n, dz : dz + n] for dx, dy, dz in _CORNERS])
    active = corner_inside.any(axis=0) & ~corner_inside.all(axis=0)
    cubes = np.argwhere(active)
    if cubes.shape[0] == 0:
        raise EmptyBoundaryError(f"level set has no zero crossing inside {bbox.to_dict()}")

    corner_ids = cubes[:, None, :] + _CORNERS[None, :, :]
    flat_ids = np.ravel_multi_index((corner_ids[..., 0], corner_ids[..., 1], corner_ids[..., 2]), (n + 1,) * 3)
    tet_ids = flat_ids[:, _TETS].reshape(-1, 4)
    flat_values = values.reshape(-1)
    tet_inside = flat_values[tet_ids] < 0.0
    count = tet_inside.sum(axis=1)
    keep = (count > 0) & (count < 4)
    tet_ids, tet_inside, count = tet_ids[keep], tet_inside[keep], count[keep]

    edges = []
    # one vertex alone on its side: a single triangle
    single = count != 2
    if np.any(single):
        ids, ins, cnt = tet_ids[single], tet_inside[single], count[single]
        minority = np.where((cnt == 1)[:, None], ins, ~ins)
        order = np.argsort(minority, axis=1, kind="stable")
        lone = np.take_along_axis(ids, order[:, 3:4], axis=1)
        others = np.take_along_axis(ids, order[:, :3], axis=1)
        edges.append(np.stack([np.broadcast_to(lone, others.shape), others], axis=-1))
    # two and two: a quad split along the diagonal ac-bd
    double = count == 2
    if np.any(double):
        ids, ins = tet_ids[double], tet_inside[double]
        pair_in = np.take_along_axis(ids, np.argsort(~ins, axis=1, kind="stable")[:, :2], axis=1)
        pair_out = np.take_along_axis(ids, np.argsort(ins, axis=1, kind="stable")[:, :2], axis=1)
        a, b = pair_in[:, 0], pair_in[:, 1]
        c, d = pair_out[:, 0], pair_out[:, 1]
        first = np.stack([np.stack([a, c], -1), np.stack([a, d], -1), np.stack([b, d], -1)], axis=1)
        second = np.stack([np.stack([a, c], -1), np.stack([b, d], -1), np.stack([b, c], -1)], axis=1)
        edges.extend([first, second])

    tri_edges = np.concatenate(edges).astype(np.int64)
    tri_edges = np.sort(tri_edges, axis=-1)
    n_vertices = (n + 1) ** 3
    keys = tri_edges[..., 0] * n_vertices + tri_edges[..., 1]
    order = np.argsort(keys, axis=1)
    tri_edges = np.take_along_axis(tri_edges, order[..., None], axis=1)
    keys = np.take_along_axis(keys, order, axis=1)
    tri_edges = tri_edges[np.lexsort(keys.T[::-1])]

    coords = np.stack(np.unravel_index(tri_edges, (n + 1,) * 3), axis=-1)
    points = np.stack([axes[i][coords[..., i]] for i in range(3)], axis=-1)
    vu = flat_values[tri_edges[..., 0]]
    vv = flat_values[tri_edges[..., 1]]
    t = vu / (vu - vv)
    vertices = points[..., 0, :] + t[..., None] * (points[..., 1, :] - points[..., 0, :])
    logger.debug("marching tetrahedra: %d active cubes, %d triangles", cubes.shape[0], vertices.shape[0])
    return vertices


def triangle_areas(vertices: np.ndarray) -> np.ndarray:
    cross = np.cross(vertices[:, 1] - vertices[:, 0], vertices[:, 2] - vertices[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=-1)

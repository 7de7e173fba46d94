"""Horizontal derivatives along the left-invariant frame.

X_j f(p) is the derivative at t = 0 of t -> f(p . exp(t e_j)); every finite
difference in this module is taken along that flow line rather than along
a coordinate axis.
"""

from __future__ import annotations

from typing import Callable, Optional, Union

import numpy as np

from .algebra import StratifiedAlgebra
from .config import settings
from .errors import ShapeError, SupportError
from .models import BoxRegion, HorizontalField, PointLike, QuadratureSpec, ScalarField
from .quadrature import QuadratureRule
from .utils.logging_utils import get_logger

logger = get_logger(__name__)

FieldLike = Union[ScalarField, Callable[[np.ndarray], np.ndarray]]


def evaluate(f: FieldLike, points: np.ndarray) -> np.ndarray:
    """Evaluate a vectorised scalar callable on points of any leading shape."""
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, pts.shape[-1])
    values = np.asarray(f(flat), dtype=float)
    return np.broadcast_to(values, flat.shape[:1]).reshape(pts.shape[:-1])


def _flow(a: StratifiedAlgebra, pts: np.ndarray, j: int, t: float) -> np.ndarray:
    return a.group_product(pts, a.exp_horizontal(j, t))


def x_derivative(
    a: StratifiedAlgebra,
    f: FieldLike,
    j: int,
    p: PointLike,
    h: Optional[float] = None,
    richardson: bool = False,
) -> np.ndarray:
    """Central difference of t -> f(p . exp(t e_j)) at t = 0 (j is zero-based)."""
    if not 0 <= j < a.m:
        raise ShapeError(f"frame index {j} outside 0..{a.m - 1}")
    pts = a.coords(p)
    h = float(h or settings.fd_step)

    def central(step: float) -> np.ndarray:
        return (evaluate(f, _flow(a, pts, j, step)) - evaluate(f, _flow(a, pts, j, -step))) / (2.0 * step)

    value = central(h)
    if richardson:
        value = (4.0 * central(0.5 * h) - value) / 3.0
    return value


def euclidean_gradient(f: FieldLike, p: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """Coordinate gradient (..., q); analytic when ``f`` carries one."""
    pts = np.asarray(p, dtype=float)
    if isinstance(f, ScalarField) and f.euclidean_gradient is not None:
        flat = pts.reshape(-1, pts.shape[-1])
        return np.asarray(f.euclidean_gradient(flat), dtype=float).reshape(pts.shape)
    h = float(h or settings.fd_step)
    out = np.empty(pts.shape)
    for i in range(pts.shape[-1]):
        shift = np.zeros(pts.shape[-1])
        shift[i] = h
        out[..., i] = (evaluate(f, pts + shift) - evaluate(f, pts - shift)) / (2.0 * h)
    return out


def horizontal_gradient(a: StratifiedAlgebra, f: FieldLike, p: PointLike, h: Optional[float] = None) -> np.ndarray:
    """(X_1 f, ..., X_m f) at p, shape (..., m).

    Precedence: analytic horizontal gradient, then the frame applied to an
    analytic Euclidean gradient, then finite differences along the frame.
    """
    pts = a.coords(p)
    if isinstance(f, ScalarField):
        if f.gradient is not None:
            flat = pts.reshape(-1, a.q)
            return np.asarray(f.gradient(flat), dtype=float).reshape(pts.shape[:-1] + (a.m,))
        if f.euclidean_gradient is not None:
            return np.einsum("...mq,...q->...m", a.frame_coefficients(pts), euclidean_gradient(f, pts))
    return np.stack([x_derivative(a, f, j, pts, h) for j in range(a.m)], axis=-1)


def horizontal_divergence(
    a: StratifiedAlgebra,
    F: HorizontalField,
    p: PointLike,
    h: Optional[float] = None,
    use_analytic: bool = True,
) -> np.ndarray:
    """sum_j X_j F_j at p."""
    pts = a.coords(p)
    if use_analytic and F.divergence is not None:
        return evaluate(F.divergence, pts)
    total = np.zeros(pts.shape[:-1])
    for j in range(a.m):
        component = lambda x, j=j: F(x)[..., j]
        total = total + x_derivative(a, component, j, pts, h)
    return total


def sub_laplacian(
    a: StratifiedAlgebra,
    u: FieldLike,
    p: PointLike,
    h: Optional[float] = None,
    use_analytic: bool = True,
) -> np.ndarray:
    """sum_j X_j X_j u at p by second differences along each flow line."""
    pts = a.coords(p)
    if use_analytic and isinstance(u, ScalarField) and u.sublaplacian is not None:
        return evaluate(u.sublaplacian, pts)
    h = float(h or settings.fd_step_second)
    centre = evaluate(u, pts)
    total = np.zeros(pts.shape[:-1])
    for j in range(a.m):
        forward = evaluate(u, _flow(a, pts, j, h))
        backward = evaluate(u, _flow(a, pts, j, -h))
        total = total + (forward - 2.0 * centre + backward) / (h * h)
    return total


def face_nodes(region: BoxRegion, per_axis: int = 12) -> np.ndarray:
    """Grid nodes on the 2q faces of ``region`` (used for support checks)."""
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(region.lower, region.upper)]
    nodes = []
    for i in range(region.dim):
        others = [axes[k] for k in range(region.dim) if k != i]
        grid = np.stack(np.meshgrid(*others, indexing="ij"), axis=-1).reshape(-1, region.dim - 1) if others else np.zeros((1, 0))
        for bound in (region.lower[i], region.upper[i]):
            face = np.insert(grid, i, bound, axis=1)
            nodes.append(face)
    return np.concatenate(nodes)


def check_support(phi: FieldLike, region: BoxRegion, per_axis: int = 12, atol: float = 1e-12) -> None:
    """Raise :class:`SupportError` if ``phi`` is visibly nonzero on the boundary of ``region``."""
    values = np.abs(evaluate(phi, face_nodes(region, per_axis)))
    if values.size and float(values.max()) > atol:
        name = getattr(phi, "name", "phi")
        raise SupportError(f"{name} is not compactly supported in {region.to_dict()} (max |phi| on faces {values.max():.3g})")


def _pairing_region(phi: FieldLike, quad: QuadratureSpec) -> BoxRegion:
    region = quad.region
    if region is None and isinstance(phi, ScalarField):
        region = phi.support
    if region is None:
        raise SupportError("pairing needs a quadrature region or a test function with a declared support box")
    return region


def distributional_divergence_pairing(
    a: StratifiedAlgebra, F: HorizontalField, phi: FieldLike, quad: QuadratureSpec
) -> float:
    """-int <F, grad_H phi> dx; equals int phi div F for C^1_H fields."""
    region = _pairing_region(phi, quad)
    check_support(phi, region)
    rule = QuadratureRule(quad, region, label="pairing")

    def integrand(x: np.ndarray) -> np.ndarray:
        return np.einsum("nm,nm->n", F(x), horizontal_gradient(a, phi, x))

    return -float(rule.integrate(integrand))


def euclidean_divergence_pairing(
    a: StratifiedAlgebra, F: HorizontalField, phi: FieldLike, quad: QuadratureSpec
) -> float:
    """-int <sum_j F_j X_j, grad phi>_{R^q} dx with the Euclidean gradient of phi."""
    region = _pairing_region(phi, quad)
    check_support(phi, region)
    rule = QuadratureRule(quad, region, label="pairing")

    def integrand(x: np.ndarray) -> np.ndarray:
        full = np.einsum("nm,nmq->nq", F(x), a.frame_coefficients(x))
        return np.einsum("nq,nq->n", full, euclidean_gradient(phi, x))

    return -float(rule.integrate(integrand))


def divergence_integral(a: StratifiedAlgebra, F: HorizontalField, phi: FieldLike, quad: QuadratureSpec) -> float:
    """int phi div F dx over the pairing region (pointwise divergence)."""
    region = _pairing_region(phi, quad)
    rule = QuadratureRule(quad, region, label="pairing")
    return float(rule.integrate(lambda x: evaluate(phi, x) * horizontal_divergence(a, F, x)))

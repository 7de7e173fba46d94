"""Built-in scalar and horizontal fields, addressable by name from configuration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from .algebra import StratifiedAlgebra
from .errors import ConfigError, PresetNotFoundError
from .expressions import parse_expression, parse_many, symbolic_horizontal_field, symbolic_scalar_field
from .metric import HomogeneousNorm, smooth_gauge_power
from .models import BoxRegion, HorizontalField, ScalarField
from .utils.config_utils import ensure_float, ensure_float_list, ensure_mapping


def _bump_profile(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """b(t) = exp(-1 / (1 - t^2)) on |t| < 1 and its derivative."""
    inside = np.abs(t) < 1.0
    value = np.zeros_like(t)
    deriv = np.zeros_like(t)
    ti = t[inside]
    gap = 1.0 - ti * ti
    value[inside] = np.exp(-1.0 / gap)
    deriv[inside] = value[inside] * (-2.0 * ti / (gap * gap))
    return value, deriv


def bump(center: Sequence[float], radius: Sequence[float] | float, name: str = "bump") -> ScalarField:
    """Smooth product bump supported in the box center +- radius."""
    c = np.asarray(center, dtype=float)
    s = np.broadcast_to(np.asarray(radius, dtype=float), c.shape).copy()

    def parts(x: np.ndarray):
        return _bump_profile((x - c) / s)

    def value(x: np.ndarray) -> np.ndarray:
        v, _ = parts(x)
        return np.prod(v, axis=-1)

    def gradient(x: np.ndarray) -> np.ndarray:
        v, d = parts(x)
        out = np.empty_like(x)
        for i in range(x.shape[-1]):
            others = np.prod(np.delete(v, i, axis=-1), axis=-1)
            out[..., i] = d[..., i] / s[i] * others
        return out

    return ScalarField(
        eval=value,
        euclidean_gradient=gradient,
        smoothness="Cinf",
        name=name,
        support=BoxRegion(c - s, c + s),
    )


def rotated_bump(
    center: Sequence[float], radius: Sequence[float] | float, angle: float, name: str = "rotated_bump"
) -> ScalarField:
    """Product bump whose first two axes are rotated by ``angle`` about ``center``."""
    c = np.asarray(center, dtype=float)
    s = np.broadcast_to(np.asarray(radius, dtype=float), c.shape).copy()
    cos, sin = np.cos(angle), np.sin(angle)
    rot = np.eye(c.shape[0])
    rot[:2, :2] = [[cos, sin], [-sin, cos]]
    base = bump(np.zeros_like(c), s, name=name)

    def value(x: np.ndarray) -> np.ndarray:
        return base.eval((x - c) @ rot.T)

    def gradient(x: np.ndarray) -> np.ndarray:
        return base.euclidean_gradient((x - c) @ rot.T) @ rot  # type: ignore[misc]

    half = s.copy()
    half[0] = abs(cos) * s[0] + abs(sin) * s[1]
    half[1] = abs(sin) * s[0] + abs(cos) * s[1]
    return ScalarField(
        eval=value, euclidean_gradient=gradient, smoothness="Cinf", name=name, support=BoxRegion(c - half, c + half)
    )


def gauge_bump(algebra: StratifiedAlgebra, center: Optional[Sequence[float]], radius: float, name: str = "gauge_bump") -> ScalarField:
    """exp(-1 / (1 - P(c^{-1} x) / R^k)) with P the smooth gauge power of degree k.

    Supported in the left translate by c of the smooth-gauge ball of radius R.
    """
    c = np.zeros(algebra.q) if center is None else algebra.coords(center)
    top = 2 * int(np.prod(np.arange(1, algebra.step + 1)))
    scale = float(radius) ** top

    def local(x: np.ndarray) -> np.ndarray:
        return algebra.group_product(-c, x)

    def value(x: np.ndarray) -> np.ndarray:
        p, _ = smooth_gauge_power(algebra, local(x))
        s = p / scale
        out = np.zeros_like(s)
        inside = s < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - s[inside]))
        return out

    def gradient(x: np.ndarray) -> np.ndarray:
        y = local(x)
        p, grad_p = smooth_gauge_power(algebra, y)
        s = p / scale
        factor = np.zeros_like(s)
        inside = s < 1.0
        gap = 1.0 - s[inside]
        factor[inside] = np.exp(-1.0 / gap) * (-1.0 / (gap * gap)) / scale
        grad_y = factor[:, None] * grad_p
        if not np.any(c):
            return grad_y
        # chain rule through y = c^{-1} x
        jac = _left_translation_jacobian(algebra, -c, x)
        return np.einsum("nk,nki->ni", grad_y, jac)

    # c . y is affine in y for step 2, so the image of the box corners bounds the support
    half = float(radius) ** algebra.degrees.astype(float)
    corners = _box_corners(-half, half)
    images = algebra.group_product(c, corners)
    support = BoxRegion(images.min(axis=0) - 1e-12, images.max(axis=0) + 1e-12) if algebra.step == 2 else None
    return ScalarField(
        eval=value, euclidean_gradient=gradient, smoothness="Cinf", name=name, support=support
    )


def _box_corners(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    grids = np.meshgrid(*[[lo, hi] for lo, hi in zip(lower, upper)], indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=-1)


def _left_translation_jacobian(algebra: StratifiedAlgebra, c: np.ndarray, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """d(c . x)_k / dx_i by central differences, shape (N, q, q)."""
    out = np.empty(x.shape[:1] + (algebra.q, algebra.q))
    for i in range(algebra.q):
        shift = np.zeros(algebra.q)
        shift[i] = h
        out[:, :, i] = (algebra.group_product(c, x + shift) - algebra.group_product(c, x - shift)) / (2 * h)
    return out


def half_space_indicator(axis: int, offset: float = 0.0, name: str = "half_space") -> ScalarField:
    """chi_{x_axis < offset} (zero-based axis)."""
    return ScalarField(eval=lambda x: (x[:, axis] < offset).astype(float), smoothness="BV", name=name)


def gauge_norm_field(norm: HomogeneousNorm, name: str = "gauge_norm") -> ScalarField:
    return ScalarField(eval=lambda x: norm.norm(x), smoothness="Lip", name=name)


def frame_field(algebra: StratifiedAlgebra, j: int) -> HorizontalField:
    """The constant-coefficient field X_j (zero-based j)."""
    if not 0 <= j < algebra.m:
        raise ConfigError(f"frame index must be in 1..{algebra.m}", path="field.index")

    def coeffs(x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[:1] + (algebra.m,))
        out[:, j] = 1.0
        return out

    return HorizontalField(coeffs=coeffs, divergence=lambda x: np.zeros(x.shape[0]), bound=1.0, name=f"X{j + 1}")


def sin_example_field(algebra: StratifiedAlgebra) -> HorizontalField:
    """F = sin(1 / (x1 - x2)) (X_1 + X_2); divergence-free off the plane x1 = x2."""
    if algebra.m < 2:
        raise ConfigError("heisenberg_sin_example needs at least two horizontal directions", path="field.name")

    def coeffs(x: np.ndarray) -> np.ndarray:
        gap = x[:, 0] - x[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            value = np.where(gap != 0.0, np.sin(1.0 / np.where(gap != 0.0, gap, 1.0)), 0.0)
        out = np.zeros(x.shape[:1] + (algebra.m,))
        out[:, 0] = value
        out[:, 1] = value
        return out

    return HorizontalField(
        coeffs=coeffs, divergence=lambda x: np.zeros(x.shape[0]), bound=float(np.sqrt(2.0)), name="heisenberg_sin_example"
    )


# --------------------------------------------------------------------------- #
# Registry
# --------------------------------------------------------------------------- #
@dataclass(frozen=True)
class FieldPreset:
    name: str
    kind: str
    description: str
    build: Callable[[StratifiedAlgebra, Mapping[str, Any], str], Any]


def _expr_scalar(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> ScalarField:
    if "expr" not in spec:
        raise ConfigError("missing key 'expr'", path=f"{path}.expr")
    expr = parse_expression(spec["expr"], a, path=f"{path}.expr")
    field = symbolic_scalar_field(a, expr, name=str(spec.get("label", spec["expr"])))
    if "support" in spec:
        box = ensure_mapping(spec["support"], f"{path}.support")
        field.support = BoxRegion(ensure_float_list(box.get("lower"), a.q, f"{path}.support.lower"),
                                  ensure_float_list(box.get("upper"), a.q, f"{path}.support.upper"))
    return field


def _bump_scalar(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> ScalarField:
    center = ensure_float_list(spec.get("center", [0.0] * a.q), a.q, f"{path}.center")
    radius = spec.get("radius", 0.5)
    radius = ensure_float(radius, f"{path}.radius") if not isinstance(radius, list) else ensure_float_list(radius, a.q, f"{path}.radius")
    return bump(center, radius, name=str(spec.get("label", "bump")))


def _rotated_bump_scalar(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> ScalarField:
    center = ensure_float_list(spec.get("center", [0.0] * a.q), a.q, f"{path}.center")
    radius = spec.get("radius", 0.5)
    radius = ensure_float(radius, f"{path}.radius") if not isinstance(radius, list) else ensure_float_list(radius, a.q, f"{path}.radius")
    return rotated_bump(center, radius, ensure_float(spec.get("angle", np.pi / 4), f"{path}.angle"), name=str(spec.get("label", "rotated_bump")))


def _gauge_bump_scalar(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> ScalarField:
    center = spec.get("center")
    if center is not None:
        center = ensure_float_list(center, a.q, f"{path}.center")
    return gauge_bump(a, center, ensure_float(spec.get("radius", 0.5), f"{path}.radius"))


def _half_space_scalar(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> ScalarField:
    axis = int(spec.get("axis", 1)) - 1
    if not 0 <= axis < a.q:
        raise ConfigError(f"axis must be in 1..{a.q}", path=f"{path}.axis")
    return half_space_indicator(axis, ensure_float(spec.get("offset", 0.0), f"{path}.offset"))


def _gauge_norm_scalar(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> ScalarField:
    return gauge_norm_field(HomogeneousNorm(a, spec.get("kind", "gauge")))


def _frame_vector(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> HorizontalField:
    return frame_field(a, int(spec.get("index", 1)) - 1)


def _poly_vector(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> HorizontalField:
    coeffs = spec.get("coeffs")
    if not isinstance(coeffs, list):
        raise ConfigError("coeffs must be a list of expressions, one per horizontal direction", path=f"{path}.coeffs")
    exprs = parse_many([str(c) for c in coeffs], a, path=f"{path}.coeffs")
    return symbolic_horizontal_field(a, exprs, name="poly[" + ",".join(str(c) for c in coeffs) + "]")


def _sin_example_vector(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> HorizontalField:
    return sin_example_field(a)


SCALAR_FIELDS: Dict[str, FieldPreset] = {
    preset.name: preset
    for preset in (
        FieldPreset("expr", "scalar", "expression field {expr, support?}", _expr_scalar),
        FieldPreset("bump", "scalar", "smooth product bump {center, radius}", _bump_scalar),
        FieldPreset("rotated_bump", "scalar", "bump rotated in the first two axes {center, radius, angle}", _rotated_bump_scalar),
        FieldPreset("gauge_bump", "scalar", "smooth bump of the Koranyi-type gauge {center?, radius}", _gauge_bump_scalar),
        FieldPreset("half_space_indicator", "scalar", "chi of {x_axis < offset} {axis, offset}", _half_space_scalar),
        FieldPreset("gauge_norm", "scalar", "homogeneous norm as a Lipschitz field {kind?}", _gauge_norm_scalar),
    )
}

HORIZONTAL_FIELDS: Dict[str, FieldPreset] = {
    preset.name: preset
    for preset in (
        FieldPreset("frame", "horizontal", "constant field X_index {index}", _frame_vector),
        FieldPreset("poly", "horizontal", "expression coefficients {coeffs: [F_1, ..., F_m]}", _poly_vector),
        FieldPreset("heisenberg_sin_example", "horizontal", "sin(1/(x1 - x2)) (X_1 + X_2)", _sin_example_vector),
    )
}


def _lookup(registry: Dict[str, FieldPreset], spec: Any, path: str) -> tuple[FieldPreset, Mapping[str, Any]]:
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, Mapping) or "name" not in spec:
        raise ConfigError("field entry must be a mapping with a 'name'", path=path)
    name = str(spec["name"])
    if name not in registry:
        raise PresetNotFoundError(f"unknown field '{name}'; known: {sorted(registry)}", path=f"{path}.name")
    return registry[name], spec


def build_scalar_field(algebra: StratifiedAlgebra, spec: Any, path: str = "field") -> ScalarField:
    preset, params = _lookup(SCALAR_FIELDS, spec, path)
    return preset.build(algebra, params, path)


def build_horizontal_field(algebra: StratifiedAlgebra, spec: Any, path: str = "field") -> HorizontalField:
    preset, params = _lookup(HORIZONTAL_FIELDS, spec, path)
    return preset.build(algebra, params, path)


def field_names() -> List[str]:
    return sorted(SCALAR_FIELDS) + sorted(HORIZONTAL_FIELDS)


def describe_field(name: str) -> Dict[str, str]:
    preset = SCALAR_FIELDS.get(name) or HORIZONTAL_FIELDS.get(name)
    if preset is None:
        raise PresetNotFoundError(f"unknown field '{name}'", path="describe")
    return {"name": preset.name, "kind": preset.kind, "description": preset.description}

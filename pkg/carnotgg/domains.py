"""Level-set domains, boundary samples and the h-perimeter measure.

For a set E with Euclidean-regular boundary and outward unit normal N_E,
|D_H chi_E| = |pi_H N_E| H^{q-1} restricted to the boundary, where
pi_H N_E has the frame coefficients <N_E, X_j>. Every boundary integral here
is a sum over samples of value * density * area.
"""

from __future__ import annotations

from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import sympy

from .algebra import StratifiedAlgebra
from .config import settings
from .errors import BoundaryError, ConfigError, DomainError, EmptyBoundaryError, NonRegularLevelSetError, PresetNotFoundError
from .expressions import parse_expression, vectorize, vectorize_many
from .hcalc import euclidean_gradient
from .meshing import marching_tetrahedra, triangle_areas
from .metric import smooth_gauge_power
from .models import BoundarySample, BoundarySampleSet, BoxRegion, ChartFn, DomainSpec, QuadratureKind, QuadratureSpec, ScalarField, SolidFn
from .quadrature import QuadratureRule, gauss_legendre_axis
from .utils.config_utils import ensure_float, ensure_float_list, ensure_mapping, ensure_positive
from .utils.logging_utils import get_logger

logger = get_logger(__name__)

SampleFn = Callable[[BoundarySampleSet], np.ndarray]


# --------------------------------------------------------------------------- #
# Charts
# --------------------------------------------------------------------------- #
def face_chart(
    lower: np.ndarray, upper: np.ndarray, axis: int, value: float, sign: float
) -> ChartFn:
    """Midpoint samples on the face {x_axis = value} of a box; normal sign * e_axis."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    def chart(resolution: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        dim = lower.shape[0]
        others = [k for k in range(dim) if k != axis]
        if others:
            spec = QuadratureSpec(resolution=int(resolution))
            rule = QuadratureRule(spec, BoxRegion(lower[others], upper[others]), label="face")
            inner, area = rule.nodes_and_weights()
            points = np.insert(inner, axis, value, axis=1)
        else:
            points, area = np.full((1, 1), value), np.ones(1)
        normals = np.zeros_like(points)
        normals[:, axis] = sign
        return points, normals, area

    return chart


def box_charts(lower: np.ndarray, upper: np.ndarray) -> List[ChartFn]:
    charts: List[ChartFn] = []
    for axis in range(len(lower)):
        charts.append(face_chart(lower, upper, axis, float(lower[axis]), -1.0))
        charts.append(face_chart(lower, upper, axis, float(upper[axis]), 1.0))
    return charts


# --------------------------------------------------------------------------- #
# Interior volume rules
# --------------------------------------------------------------------------- #
def box_solid(lower: np.ndarray, upper: np.ndarray) -> SolidFn:
    """The requested tensor rule laid on the box itself."""
    region = BoxRegion(lower, upper)

    def solid(quad: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
        spec = QuadratureSpec(quad.kind, quad.resolution, quad.samples, quad.seed)
        return QuadratureRule(spec, region, label="solid").nodes_and_weights()

    return solid


def _radial_order(quad: QuadratureSpec, dim: int) -> int:
    if quad.kind == QuadratureKind.MONTE_CARLO:
        return 32
    n = max(quad.axis_resolution(dim))
    return n if quad.kind == QuadratureKind.GAUSS_LEGENDRE else max(4, (n + 1) // 2)


def star_solid(level: ScalarField, center: np.ndarray, bbox: BoxRegion, bisections: int = 60) -> SolidFn:
    """Gauss-Legendre rule on a set star-shaped about ``center``.

    Every point is c + s u with u on a face of the cube [-1, 1]^q, so that
    dx = s^(q-1) ds dA(u). The radius sigma(u) where the ray leaves E is found
    by bisection against the level function, and the rule integrates
    int_face int_0^sigma(u) f(c + s u) s^(q-1) ds dA(u) face by face. Each
    inner integrand is smooth, hence the choice of Gauss-Legendre whatever
    kind the caller asked for.
    """
    c = np.asarray(center, dtype=float)
    dim = c.shape[0]
    if not float(level(c[None, :])[0]) < 0.0:
        raise DomainError(f"star centre {c.tolist()} is not inside the domain")

    def solid(quad: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
        n = _radial_order(quad, dim)
        face_spec = QuadratureSpec(QuadratureKind.GAUSS_LEGENDRE, n)
        inner, area = QuadratureRule(face_spec, BoxRegion.cube(dim - 1, 1.0), label="solid_face").nodes_and_weights()
        rays = np.concatenate([np.insert(inner, axis, sign, axis=1) for axis in range(dim) for sign in (-1.0, 1.0)])
        ray_area = np.tile(area, 2 * dim)

        with np.errstate(divide="ignore", invalid="ignore"):
            reach = np.where(rays > 0, (bbox.upper - c) / rays, np.where(rays < 0, (bbox.lower - c) / rays, np.inf))
        lo, hi = np.zeros(len(rays)), reach.min(axis=1)
        if np.any(level(c + hi[:, None] * rays) < 0.0):
            raise DomainError("domain reaches the edge of its window; enlarge the margin")
        for _ in range(bisections):
            mid = 0.5 * (lo + hi)
            inside = level(c + mid[:, None] * rays) < 0.0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        sigma = 0.5 * (lo + hi)

        t, w = gauss_legendre_axis(0.0, 1.0, n)
        radius = sigma[:, None] * t[None, :]
        nodes = c + radius[..., None] * rays[:, None, :]
        weights = ray_area[:, None] * w[None, :] * sigma[:, None] * radius ** (dim - 1)
        return nodes.reshape(-1, dim), weights.reshape(-1)

    return solid


def _cell_fraction(domain: DomainSpec, nodes: np.ndarray, cell: np.ndarray) -> np.ndarray:
    """Share of each grid cell inside E, from the level set linearised at the cell centre."""
    value = np.asarray(domain.level_fn(nodes), dtype=float)
    spread = 0.5 * np.abs(euclidean_gradient(domain.level_fn, nodes)) @ cell
    fraction = (value < 0.0).astype(float)
    band = spread > np.abs(value)
    fraction[band] = 0.5 - 0.5 * value[band] / spread[band]
    return fraction


# --------------------------------------------------------------------------- #
# Presets
# --------------------------------------------------------------------------- #
def euclidean_ball(
    algebra: StratifiedAlgebra,
    r: float = 1.0,
    center: Optional[List[float]] = None,
    margin: float = 0.75,
    window: Optional[BoxRegion] = None,
) -> DomainSpec:
    """{|x - center| < r}; with ``window`` only the part of the sphere inside it is meshed."""
    c = np.zeros(algebra.q) if center is None else np.asarray(center, dtype=float)
    level = ScalarField(
        eval=lambda x: np.sum((x - c) ** 2, axis=-1) - r * r,
        euclidean_gradient=lambda x: 2.0 * (x - c),
        smoothness="Cinf",
        name="euclidean_ball",
    )
    params: Dict[str, Any] = {"r": r, "center": c.tolist(), "margin": margin}
    if window is not None:
        params["window"] = window.to_dict()
        return DomainSpec(name="euclidean_ball", level_fn=level, bbox=window, bounded=False, params=params)
    half = r + margin
    bbox = BoxRegion(c - half, c + half)
    return DomainSpec(name="euclidean_ball", level_fn=level, bbox=bbox, params=params, solid=star_solid(level, c, bbox))


def koranyi_ball(algebra: StratifiedAlgebra, r: float = 1.0, c: float = 1.0, margin: float = 0.75) -> DomainSpec:
    """{P(x) < r^k} with P the smooth gauge power, the last layer weighted by c.

    On the first Heisenberg group: (x^2 + y^2)^2 + c z^2 < r^4.
    """
    weights = np.ones(algebra.step)
    weights[-1] = c
    top = 2 * int(np.prod(np.arange(1, algebra.step + 1)))
    level = ScalarField(
        eval=lambda x: smooth_gauge_power(algebra, x, weights)[0] - r ** top,
        euclidean_gradient=lambda x: smooth_gauge_power(algebra, x, weights)[1],
        smoothness="Cinf",
        name="koranyi_ball",
    )
    half = np.empty(algebra.q)
    starts = np.concatenate([[0], np.cumsum(algebra.layer_dims)])
    for i in range(algebra.step):
        power = top // (i + 1)
        half[starts[i] : starts[i + 1]] = (r ** top / weights[i]) ** (1.0 / power) + margin
    bbox = BoxRegion(-half, half)
    return DomainSpec(
        name="koranyi_ball",
        level_fn=level,
        bbox=bbox,
        params={"r": r, "c": c, "margin": margin},
        solid=star_solid(level, np.zeros(algebra.q), bbox),
    )


def half_space(algebra: StratifiedAlgebra, axis: int = 0, offset: float = 0.0, window: Optional[BoxRegion] = None) -> DomainSpec:
    """{x_axis < offset} seen through ``window`` (zero-based axis); exterior normal +e_axis."""
    window = window or BoxRegion.cube(algebra.q, 1.0)
    if not window.lower[axis] < offset < window.upper[axis]:
        raise DomainError(f"half-space offset {offset} is outside the window along axis {axis + 1}")
    level = ScalarField(
        eval=lambda x: x[..., axis] - offset,
        euclidean_gradient=lambda x: np.broadcast_to(np.eye(algebra.q)[axis], x.shape).copy(),
        smoothness="Cinf",
        name="half_space",
    )
    below = window.upper.copy()
    below[axis] = offset
    return DomainSpec(
        name="half_space",
        level_fn=level,
        bbox=window,
        charts=[face_chart(window.lower, window.upper, axis, offset, 1.0)],
        bounded=False,
        params={"axis": axis + 1, "offset": offset, "window": window.to_dict()},
        solid=box_solid(window.lower, below),
    )


def box_domain(algebra: StratifiedAlgebra, lower: List[float], upper: List[float], margin: float = 0.5) -> DomainSpec:
    box = BoxRegion(lower, upper)

    def level(x: np.ndarray) -> np.ndarray:
        return np.max(np.maximum(box.lower - x, x - box.upper), axis=-1)

    return DomainSpec(
        name="box",
        level_fn=ScalarField(eval=level, smoothness="Lip", name="box"),
        bbox=BoxRegion(box.lower - margin, box.upper + margin),
        charts=box_charts(box.lower, box.upper),
        params={"lower": box.lower.tolist(), "upper": box.upper.tolist(), "margin": margin},
        solid=box_solid(box.lower, box.upper),
    )


def expression_domain(algebra: StratifiedAlgebra, expr: str, bbox: BoxRegion, path: str = "domain") -> DomainSpec:
    parsed = parse_expression(expr, algebra, path=f"{path}.expr")
    level = ScalarField(
        eval=vectorize(parsed, algebra.symbols),
        euclidean_gradient=vectorize_many([sympy.diff(parsed, s) for s in algebra.symbols], algebra.symbols),
        smoothness="C1",
        name=str(expr),
    )
    return DomainSpec(name="expr", level_fn=level, bbox=bbox, params={"expr": str(expr), "bbox": bbox.to_dict()})


def _window(payload: Any, q: int, path: str) -> Optional[BoxRegion]:
    if payload is None:
        return None
    box = ensure_mapping(payload, path)
    try:
        return BoxRegion(ensure_float_list(box.get("lower"), q, f"{path}.lower"), ensure_float_list(box.get("upper"), q, f"{path}.upper"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), path=path) from exc


def _build_euclidean_ball(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> DomainSpec:
    center = spec.get("center")
    return euclidean_ball(
        a,
        ensure_positive(spec.get("r", 1.0), f"{path}.r"),
        ensure_float_list(center, a.q, f"{path}.center") if center is not None else None,
        ensure_positive(spec.get("margin", 0.75), f"{path}.margin"),
        _window(spec.get("window"), a.q, f"{path}.window"),
    )


def _build_koranyi_ball(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> DomainSpec:
    return koranyi_ball(
        a,
        ensure_positive(spec.get("r", 1.0), f"{path}.r"),
        ensure_positive(spec.get("c", 1.0), f"{path}.c"),
        ensure_positive(spec.get("margin", 0.75), f"{path}.margin"),
    )


def _build_half_space(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> DomainSpec:
    axis = spec.get("axis", 1)
    if isinstance(axis, bool) or not isinstance(axis, int) or not 1 <= axis <= a.q:
        raise ConfigError(f"axis must be an integer in 1..{a.q}", path=f"{path}.axis")
    try:
        return half_space(a, axis - 1, ensure_float(spec.get("offset", 0.0), f"{path}.offset"), _window(spec.get("window"), a.q, f"{path}.window"))
    except DomainError as exc:
        raise ConfigError(str(exc), path=f"{path}.offset") from exc


def _build_box(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> DomainSpec:
    lower = ensure_float_list(spec.get("lower", [-1.0] * a.q), a.q, f"{path}.lower")
    upper = ensure_float_list(spec.get("upper", [1.0] * a.q), a.q, f"{path}.upper")
    if not all(lo < hi for lo, hi in zip(lower, upper)):
        raise ConfigError("box requires lower < upper componentwise", path=path)
    return box_domain(a, lower, upper, ensure_positive(spec.get("margin", 0.5), f"{path}.margin"))


def _build_expression(a: StratifiedAlgebra, spec: Mapping[str, Any], path: str) -> DomainSpec:
    if "expr" not in spec:
        raise ConfigError("missing key 'expr'", path=f"{path}.expr")
    bbox = _window(spec.get("bbox"), a.q, f"{path}.bbox")
    if bbox is None:
        raise ConfigError("expression domains need a bbox {lower, upper}", path=f"{path}.bbox")
    return expression_domain(a, spec["expr"], bbox, path)


DOMAIN_PRESETS: Dict[str, Tuple[str, Callable[[StratifiedAlgebra, Mapping[str, Any], str], DomainSpec]]] = {
    "euclidean_ball": ("{|x - center| < r}, meshed (inside an optional window)", _build_euclidean_ball),
    "koranyi_ball": ("smooth gauge ball (x^2 + y^2)^2 + c z^2 < r^4 on H^1, meshed", _build_koranyi_ball),
    "half_space": ("{x_axis < offset} in a window, analytic face chart", _build_half_space),
    "box": ("axis-aligned box, analytic face charts", _build_box),
    "expr": ("{expr < 0} inside bbox, meshed", _build_expression),
}


def build_domain(algebra: StratifiedAlgebra, spec: Any, path: str = "domain") -> DomainSpec:
    """Domain from a configuration mapping ``{name: ..., <params>}``."""
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = ensure_mapping(spec, path)
    name = spec.get("name")
    if name not in DOMAIN_PRESETS:
        raise PresetNotFoundError(f"unknown domain '{name}'; known: {sorted(DOMAIN_PRESETS)}", path=f"{path}.name")
    domain = DOMAIN_PRESETS[name][1](algebra, spec, path)
    if "dilate" in spec:
        domain = dilate_domain(algebra, domain, ensure_positive(spec["dilate"], f"{path}.dilate"))
    if spec.get("complement"):
        domain = complement_domain(domain)
    return domain


def domain_names() -> List[str]:
    return sorted(DOMAIN_PRESETS)


def describe_domain(name: str) -> Dict[str, str]:
    if name not in DOMAIN_PRESETS:
        raise PresetNotFoundError(f"unknown domain '{name}'", path="describe")
    return {"name": name, "description": DOMAIN_PRESETS[name][0]}


# --------------------------------------------------------------------------- #
# Transformations
# --------------------------------------------------------------------------- #
def dilate_domain(algebra: StratifiedAlgebra, domain: DomainSpec, lam: float) -> DomainSpec:
    """delta_lam E = {x : level(delta_{1/lam} x) < 0}."""
    if not lam > 0:
        raise DomainError(f"dilation factor must be positive, got {lam}")
    scale = float(lam) ** algebra.degrees.astype(float)
    base = domain.level_fn

    def grad(x: np.ndarray) -> np.ndarray:
        return euclidean_gradient(base, x / scale) / scale

    level = ScalarField(eval=lambda x: base(x / scale), euclidean_gradient=grad, smoothness=base.smoothness, name=base.name)
    charts = None
    if domain.charts:
        charts = [_dilated_chart(chart, scale) for chart in domain.charts]
    return DomainSpec(
        name=f"dilate[{lam:g}]({domain.name})",
        level_fn=level,
        bbox=BoxRegion(domain.bbox.lower * scale, domain.bbox.upper * scale),
        charts=charts,
        bounded=domain.bounded,
        params={**domain.params, "dilate": lam},
        solid=_dilated_solid(domain.solid, scale) if domain.solid is not None else None,
    )


def _dilated_solid(solid: SolidFn, scale: np.ndarray) -> SolidFn:
    def dilated(quad: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
        nodes, weights = solid(quad)
        return nodes * scale, weights * float(np.prod(scale))

    return dilated


def _dilated_chart(chart: ChartFn, scale: np.ndarray) -> ChartFn:
    def dilated(resolution: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        points, normals, area = chart(resolution)
        # dA' = |det D| |D^{-T} N| dA for the linear map D = diag(scale)
        moved = normals / scale
        length = np.linalg.norm(moved, axis=-1)
        return points * scale, moved / length[:, None], area * np.prod(scale) * length

    return dilated


def complement_domain(domain: DomainSpec) -> DomainSpec:
    """Window complement {-level < 0}; normals are negated."""
    base = domain.level_fn

    def grad(x: np.ndarray) -> np.ndarray:
        return -euclidean_gradient(base, x)

    level = ScalarField(eval=lambda x: -base(x), euclidean_gradient=grad, smoothness=base.smoothness, name=f"-{base.name}")
    charts = None
    if domain.charts:
        charts = [_negated_chart(chart) for chart in domain.charts]
    return DomainSpec(
        name=f"complement({domain.name})",
        level_fn=level,
        bbox=domain.bbox,
        charts=charts,
        bounded=False,
        params={**domain.params, "complement": True},
    )


def _negated_chart(chart: ChartFn) -> ChartFn:
    def negated(resolution: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        points, normals, area = chart(resolution)
        return points, -normals, area

    return negated


# --------------------------------------------------------------------------- #
# Boundary sampling
# --------------------------------------------------------------------------- #
def _with_frame(algebra: StratifiedAlgebra, points: np.ndarray, normals: np.ndarray, area: np.ndarray, source: str) -> BoundarySampleSet:
    coeffs = np.einsum("nmq,nq->nm", algebra.frame_coefficients(points), normals)
    return BoundarySampleSet(
        points=points,
        normals=normals,
        horizontal_coeffs=coeffs,
        density=np.linalg.norm(coeffs, axis=-1),
        area=area,
        source=source,
    )


def _mesh_samples(domain: DomainSpec, resolution: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    level = domain.level_fn
    triangles = marching_tetrahedra(level, domain.bbox, resolution)
    area = triangle_areas(triangles)
    keep = area > 0.0
    triangles, area = triangles[keep], area[keep]
    centroids = triangles.sum(axis=1) / 3.0
    grad = euclidean_gradient(level, centroids)
    length_sq = np.einsum("nq,nq->n", grad, grad)
    if np.any(length_sq < settings.regular_gradient_floor ** 2):
        raise NonRegularLevelSetError(f"{domain.name}: level gradient vanishes near the zero set")
    # one Newton step onto the zero set
    points = centroids - (level(centroids) / length_sq)[:, None] * grad
    grad = euclidean_gradient(level, points)
    length = np.linalg.norm(grad, axis=-1)
    if np.any(length < settings.regular_gradient_floor):
        raise NonRegularLevelSetError(f"{domain.name}: |grad level| < {settings.regular_gradient_floor:g} at a boundary sample")
    return points, grad / length[:, None], area


def sample_boundary(algebra: StratifiedAlgebra, domain: DomainSpec, resolution: int) -> BoundarySampleSet:
    """Boundary samples from the analytic charts, or from a marching-tetrahedra mesh."""
    if domain.charts:
        parts = [chart(resolution) for chart in domain.charts]
        points = np.concatenate([p[0] for p in parts])
        normals = np.concatenate([p[1] for p in parts])
        area = np.concatenate([p[2] for p in parts])
        source = "chart"
    else:
        points, normals, area = _mesh_samples(domain, resolution)
        source = "mesh"
    if points.shape[0] == 0:
        raise EmptyBoundaryError(f"{domain.name}: no boundary samples")
    samples = _with_frame(algebra, points, normals, area, source)
    logger.debug("%s: %d %s samples, area %.6g", domain.name, len(samples), source, samples.surface_area)
    return samples


def horizontal_normal(sample: BoundarySample, threshold: Optional[float] = None) -> Tuple[Optional[np.ndarray], float]:
    """(nu_E, density); nu_E is None at characteristic samples."""
    threshold = settings.characteristic_threshold if threshold is None else threshold
    density = float(sample.horizontal_density)
    if density < threshold:
        return None, density
    return sample.horizontal_coeffs / density, density


def horizontal_normals(samples: BoundarySampleSet, threshold: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(nu (N, m) with zero rows at characteristic samples, characteristic mask)."""
    threshold = settings.characteristic_threshold if threshold is None else threshold
    characteristic = samples.density < threshold
    safe = np.where(characteristic, 1.0, samples.density)
    nu = samples.horizontal_coeffs / safe[:, None]
    nu[characteristic] = 0.0
    return nu, characteristic


def boundary_integral(
    algebra: StratifiedAlgebra,
    domain: DomainSpec,
    g: SampleFn,
    resolution: int,
    samples: Optional[BoundarySampleSet] = None,
    window: Optional[BoxRegion] = None,
) -> float:
    """sum g(s) * density(s) * area(s) over the boundary samples.

    ``g`` is vectorised over a :class:`BoundarySampleSet`; characteristic
    samples contribute zero whatever g returns there.
    """
    samples = samples if samples is not None else sample_boundary(algebra, domain, resolution)
    if window is not None:
        samples = samples.subset(window.contains(samples.points, strict=False))
    _, characteristic = horizontal_normals(samples)
    values = np.asarray(g(samples), dtype=float)
    values = np.broadcast_to(values, characteristic.shape)
    weights = np.where(characteristic, 0.0, samples.density * samples.area)
    return float(np.sum(np.where(characteristic, 0.0, values) * weights))


def h_perimeter(
    algebra: StratifiedAlgebra,
    domain: DomainSpec,
    resolution: int,
    window: Optional[BoxRegion] = None,
    samples: Optional[BoundarySampleSet] = None,
) -> float:
    """|D_H chi_E| of the boundary (inside ``window`` when given)."""
    samples = samples if samples is not None else sample_boundary(algebra, domain, resolution)
    if window is not None:
        samples = samples.subset(window.contains(samples.points, strict=False))
    return float(np.sum(samples.density * samples.area))


def volume_integral(
    algebra: StratifiedAlgebra,
    domain: DomainSpec,
    f: Union[ScalarField, Callable[[np.ndarray], np.ndarray]],
    quad: QuadratureSpec,
) -> float:
    """int over the window of chi_E f dx.

    Domains with a ``solid`` rule are integrated on nodes inside E only. The
    rest, and any quadrature carrying its own region, go through a rule over
    the window; on a midpoint grid each cell cut by the boundary is weighted
    by the share of it the linearised level set leaves inside E.
    """
    if domain.solid is not None and quad.region is None:
        nodes, weights = domain.solid(quad)
        total = 0.0
        for start in range(0, weights.shape[0], settings.mc_chunk):
            block = slice(start, start + settings.mc_chunk)
            values = np.broadcast_to(np.asarray(f(nodes[block]), dtype=float), weights[block].shape)
            total += float(weights[block] @ values)
        return total
    region = quad.region or domain.bbox
    rule = QuadratureRule(quad, region, label="volume")
    if quad.kind == QuadratureKind.TENSOR_GRID:
        cell = region.widths / np.asarray(quad.axis_resolution(region.dim), dtype=float)
        return float(rule.integrate(lambda x: _cell_fraction(domain, x, cell) * np.asarray(f(x), dtype=float)))
    return float(rule.integrate(lambda x: np.where(domain.contains(x), np.asarray(f(x), dtype=float), 0.0)))


def characteristic_fraction(samples: BoundarySampleSet, threshold: Optional[float] = None) -> float:
    """Share of Euclidean boundary area carried by characteristic samples."""
    _, characteristic = horizontal_normals(samples, threshold)
    total = samples.surface_area
    if total <= 0.0:
        raise BoundaryError("boundary has no area")
    return float(np.sum(samples.area[characteristic]) / total)


def density_bound_defect(samples: BoundarySampleSet, algebra: StratifiedAlgebra) -> float:
    """max over samples of density - |frame(p)|_op; nonpositive up to rounding."""
    frames = algebra.frame_coefficients(samples.points)
    bound = np.linalg.norm(frames, ord=2, axis=(-2, -1))
    return float(np.max(samples.density - bound))

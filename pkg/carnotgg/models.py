"""Shared dataclasses and enumerations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ShapeError

ArrayFn = Callable[[np.ndarray], np.ndarray]


class NormKind(str, Enum):
    GAUGE = "gauge"
    BOX = "box"


class QuadratureKind(str, Enum):
    TENSOR_GRID = "tensor_grid"
    GAUSS_LEGENDRE = "gauss_legendre"
    MONTE_CARLO = "monte_carlo"


class Criterion(str, Enum):
    """How a report turns its residual into a verdict."""

    IDENTITY = "identity"
    UPPER_BOUND = "upper_bound"
    ABSOLUTE = "absolute"


class ScenarioKind(str, Enum):
    GROUP_AXIOMS = "group_axioms"
    HAAR_SCALING = "haar_scaling"
    FRAME = "frame"
    COMMUTATION = "commutation"
    POINTWISE_LIMIT = "pointwise_limit"
    HALF_DENSITY = "half_density"
    GAUSS_GREEN = "gauss_green"
    GREEN_FIRST = "green_first"
    GREEN_SECOND = "green_second"
    INTEGRATION_BY_PARTS = "integration_by_parts"
    TRACE_LOCALITY = "trace_locality"
    TRACE_BOUND = "trace_bound"
    DIVERGENCE_FREE = "divergence_free"
    TOTAL_VARIATION = "total_variation"
    PERIMETER_SCALING = "perimeter_scaling"


@dataclass(frozen=True)
class GroupPoint:
    """Graded coordinates (x_1, ..., x_q) of a point of the group."""

    coords: np.ndarray

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 1:
            raise ShapeError(f"GroupPoint expects a flat coordinate vector, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ShapeError("GroupPoint coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    def __len__(self) -> int:
        return int(self.coords.shape[0])

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return self.coords if dtype is None else self.coords.astype(dtype)


PointLike = Union[GroupPoint, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned box in graded coordinates."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ShapeError(f"box bounds differ in length: {lower.shape} vs {upper.shape}")
        if not np.all(lower < upper):
            raise ShapeError("box requires lower < upper componentwise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, dim: int, half_width: float = 1.0) -> "BoxRegion":
        return cls(-half_width * np.ones(dim), half_width * np.ones(dim))

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, points: np.ndarray, strict: bool = True) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if strict:
            return np.all((pts > self.lower) & (pts < self.upper), axis=-1)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=-1)

    def to_dict(self) -> Dict[str, List[float]]:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature rule over a box.

    ``resolution`` is either one node count shared by every axis or one per axis.
    ``region`` may be left empty when the caller supplies its own box.
    """

    kind: QuadratureKind = QuadratureKind.TENSOR_GRID
    resolution: Union[int, Tuple[int, ...], None] = 32
    samples: Optional[int] = None
    seed: int = 0
    region: Optional[BoxRegion] = None

    def __post_init__(self) -> None:
        kind = QuadratureKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind == QuadratureKind.MONTE_CARLO:
            if self.samples is None or int(self.samples) < 1:
                raise ShapeError("monte_carlo quadrature needs samples >= 1")
        else:
            res = self.resolution
            values = (res,) if isinstance(res, (int, np.integer)) else tuple(res or ())
            if not values or any(int(v) < 1 for v in values):
                raise ShapeError("grid quadrature needs a positive resolution")

    def axis_resolution(self, dim: int) -> Tuple[int, ...]:
        res = self.resolution
        if isinstance(res, (int, np.integer)):
            return (int(res),) * dim
        values = tuple(int(v) for v in res)  # type: ignore[union-attr]
        if len(values) != dim:
            raise ShapeError(f"resolution has {len(values)} entries for a {dim}-dimensional box")
        return values

    def with_region(self, region: BoxRegion) -> "QuadratureSpec":
        return QuadratureSpec(self.kind, self.resolution, self.samples, self.seed, region)

    def describe(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"kind": self.kind.value, "seed": self.seed}
        if self.kind == QuadratureKind.MONTE_CARLO:
            payload["samples"] = self.samples
        else:
            res = self.resolution
            payload["resolution"] = int(res) if isinstance(res, (int, np.integer)) else list(res)  # type: ignore[arg-type]
        return payload


@dataclass
class ScalarField:
    """Vectorised real function on the group.

    ``eval`` maps an (N, q) array to (N,). The optional derivatives follow the
    same convention: ``gradient`` returns the horizontal gradient (N, m),
    ``euclidean_gradient`` the full coordinate gradient (N, q) and
    ``sublaplacian`` the pointwise sub-Laplacian (N,). Callables must be safe to
    call from several threads at once.
    """

    eval: ArrayFn
    gradient: Optional[ArrayFn] = None
    euclidean_gradient: Optional[ArrayFn] = None
    sublaplacian: Optional[ArrayFn] = None
    smoothness: str = "C1"
    name: str = "scalar"
    support: Optional[BoxRegion] = None
    region: Optional[BoxRegion] = None

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, pts.shape[-1])
        values = np.asarray(self.eval(flat), dtype=float)
        return np.broadcast_to(values, flat.shape[:1]).reshape(pts.shape[:-1])


@dataclass
class HorizontalField:
    """Horizontal vector field F = sum_j F_j X_j given by its frame coefficients."""

    coeffs: ArrayFn
    divergence: Optional[ArrayFn] = None
    bound: Optional[float] = None
    name: str = "field"

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, pts.shape[-1])
        values = np.asarray(self.coeffs(flat), dtype=float)
        return values.reshape(pts.shape[:-1] + values.shape[-1:])


@dataclass(frozen=True)
class BoundarySample:
    """One quadrature node of the boundary."""

    point: np.ndarray
    euclidean_normal: np.ndarray
    horizontal_coeffs: np.ndarray
    horizontal_density: float
    area_weight: float


@dataclass
class BoundarySampleSet:
    """Columnar storage of boundary samples, one row per node."""

    points: np.ndarray
    normals: np.ndarray
    horizontal_coeffs: np.ndarray
    density: np.ndarray
    area: np.ndarray
    source: str = "mesh"

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __getitem__(self, index: int) -> BoundarySample:
        return BoundarySample(
            point=self.points[index],
            euclidean_normal=self.normals[index],
            horizontal_coeffs=self.horizontal_coeffs[index],
            horizontal_density=float(self.density[index]),
            area_weight=float(self.area[index]),
        )

    def __iter__(self) -> Iterator[BoundarySample]:
        for index in range(len(self)):
            yield self[index]

    def subset(self, mask: np.ndarray) -> "BoundarySampleSet":
        return BoundarySampleSet(
            points=self.points[mask],
            normals=self.normals[mask],
            horizontal_coeffs=self.horizontal_coeffs[mask],
            density=self.density[mask],
            area=self.area[mask],
            source=self.source,
        )

    @property
    def surface_area(self) -> float:
        return float(np.sum(self.area))


ChartFn = Callable[[int], Tuple[np.ndarray, np.ndarray, np.ndarray]]
SolidFn = Callable[["QuadratureSpec"], Tuple[np.ndarray, np.ndarray]]


@dataclass
class DomainSpec:
    """Sublevel set E = {level_fn < 0} seen through the window ``bbox``.

    ``charts`` are analytic boundary parametrisations: each maps a resolution
    to (points, unit outward normals, area weights). ``solid`` maps a volume
    quadrature to (nodes, weights) covering E inside the window exactly, so
    that volume integrals never see the jump of the indicator. ``bounded`` is
    False for sets such as half-spaces whose indicator is defined beyond the
    window.
    """

    name: str
    level_fn: ScalarField
    bbox: BoxRegion
    charts: Optional[List[ChartFn]] = None
    bounded: bool = True
    params: Dict[str, Any] = field(default_factory=dict)
    solid: Optional[SolidFn] = None

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.level_fn(points) < 0.0

    def indicator(self) -> ScalarField:
        return ScalarField(
            eval=lambda pts: (self.level_fn(pts) < 0.0).astype(float),
            smoothness="BV",
            name=f"chi[{self.name}]",
        )


@dataclass
class GaussGreenReport:
    """Both sides of one verified identity and the verdict against ``tolerance``.

    Identity reports pass when the relative residual is within tolerance; when
    |rhs| < 1e-8 the residual is compared absolutely. Absolute reports pass
    when |lhs - rhs| <= tolerance, for identities whose two sides both vanish
    and whose rhs is pure discretisation noise. Upper-bound reports pass when
    lhs <= rhs + tolerance * max(|rhs|, 1).
    """

    scenario: str
    lhs: float
    rhs: float
    tolerance: float
    criterion: Criterion = Criterion.IDENTITY
    meta: Dict[str, Any] = field(default_factory=dict)
    terms: Dict[str, float] = field(default_factory=dict)
    residual: float = field(init=False)
    rel_residual: float = field(init=False)
    passed: bool = field(init=False)

    ABSOLUTE_FLOOR = 1e-8

    def __post_init__(self) -> None:
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.residual = abs(self.lhs - self.rhs)
        if abs(self.rhs) >= self.ABSOLUTE_FLOOR:
            self.rel_residual = self.residual / abs(self.rhs)
        else:
            self.rel_residual = self.residual
        if self.criterion == Criterion.UPPER_BOUND:
            slack = self.tolerance * max(abs(self.rhs), 1.0)
            self.passed = bool(self.lhs <= self.rhs + slack)
        else:
            self.passed = bool(math.isfinite(self.score) and self.score <= self.tolerance)

    @property
    def score(self) -> float:
        """The residual the verdict compares with the tolerance."""
        return self.residual if self.criterion == Criterion.ABSOLUTE else self.rel_residual

    @property
    def signed_residual(self) -> float:
        return self.lhs - self.rhs

    def to_row(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "rel_residual": self.rel_residual,
            "pass": self.passed,
            "meta": dict(self.meta),
        }

    def to_dict(self) -> Dict[str, Any]:
        payload = self.to_row()
        payload.update(
            {
                "tolerance": self.tolerance,
                "criterion": self.criterion.value,
                "terms": dict(self.terms),
            }
        )
        return payload

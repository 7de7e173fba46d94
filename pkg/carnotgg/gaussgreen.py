"""Numerical verification of the divergence theorem and its relatives on level-set domains.

Every check returns :class:`GaussGreenReport` objects carrying both sides of
the identity; boundary sides are integrals against |D_H chi_E| computed by
:func:`carnotgg.domains.boundary_integral`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .algebra import StratifiedAlgebra
from .domains import boundary_integral, characteristic_fraction, horizontal_normals, sample_boundary, volume_integral
from .errors import AlignmentError, DomainError, SupportError
from .fields import sin_example_field
from .hcalc import FieldLike, distributional_divergence_pairing, evaluate, horizontal_divergence, horizontal_gradient, sub_laplacian
from .metrics.convergence import is_nonincreasing, step_ratios
from .models import BoundarySampleSet, Criterion, DomainSpec, GaussGreenReport, HorizontalField, QuadratureSpec, ScalarField
from .mollify import Mollifier
from .quadrature import QuadratureRule
from .utils.logging_utils import get_logger

logger = get_logger(__name__)

PatchFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_VOLUME_QUADRATURE = QuadratureSpec(resolution=64)


def normal_traces(samples: BoundarySampleSet, F: HorizontalField) -> np.ndarray:
    """<F, nu_E> per sample; zero at characteristic samples."""
    nu, _ = horizontal_normals(samples)
    return np.einsum("nm,nm->n", F(samples.points), nu)


def _meta(domain: DomainSpec, samples: BoundarySampleSet, resolution: int, quad: Optional[QuadratureSpec]) -> Dict[str, object]:
    meta: Dict[str, object] = {
        "domain": domain.name,
        "resolution": int(resolution),
        "boundary_samples": len(samples),
        "boundary_source": samples.source,
        "characteristic_fraction": characteristic_fraction(samples),
    }
    if quad is not None:
        meta["quadrature"] = quad.describe()
    return meta


def verify_gauss_green(
    a: StratifiedAlgebra,
    F: HorizontalField,
    d: DomainSpec,
    resolution: int,
    quad: Optional[QuadratureSpec] = None,
    tolerance: float = 1e-2,
    scenario: str = "gauss_green",
    criterion: Criterion = Criterion.IDENTITY,
) -> GaussGreenReport:
    """int_E div F dx against the boundary integral of <F, nu_E>."""
    quad = quad or DEFAULT_VOLUME_QUADRATURE
    samples = sample_boundary(a, d, resolution)
    lhs = volume_integral(a, d, lambda x: horizontal_divergence(a, F, x), quad)
    rhs = boundary_integral(a, d, lambda s: normal_traces(s, F), resolution, samples=samples)
    meta = _meta(d, samples, resolution, quad)
    meta["field"] = F.name
    report = GaussGreenReport(scenario, lhs, rhs, tolerance, criterion, meta=meta, terms={"volume": lhs, "flux": rhs})
    logger.info("%s: lhs=%.6g rhs=%.6g rel=%.3g", scenario, report.lhs, report.rhs, report.rel_residual)
    return report


def verify_green_first(
    a: StratifiedAlgebra,
    u: ScalarField,
    v: FieldLike,
    d: DomainSpec,
    resolution: int,
    quad: Optional[QuadratureSpec] = None,
    tolerance: float = 1e-2,
    scenario: str = "green_first",
    criterion: Criterion = Criterion.IDENTITY,
) -> GaussGreenReport:
    """int_E v Lap_H u = boundary int of v <grad_H u, nu_E> - int_E <grad_H v, grad_H u>."""
    quad = quad or DEFAULT_VOLUME_QUADRATURE
    samples = sample_boundary(a, d, resolution)
    laplacian = volume_integral(a, d, lambda x: evaluate(v, x) * sub_laplacian(a, u, x), quad)
    cross = volume_integral(
        a, d, lambda x: np.einsum("nm,nm->n", horizontal_gradient(a, v, x), horizontal_gradient(a, u, x)), quad
    )

    def flux(s: BoundarySampleSet) -> np.ndarray:
        nu, _ = horizontal_normals(s)
        return evaluate(v, s.points) * np.einsum("nm,nm->n", horizontal_gradient(a, u, s.points), nu)

    boundary = boundary_integral(a, d, flux, resolution, samples=samples)
    meta = _meta(d, samples, resolution, quad)
    meta.update({"u": u.name, "v": getattr(v, "name", "v")})
    return GaussGreenReport(
        scenario,
        laplacian,
        boundary - cross,
        tolerance,
        criterion,
        meta=meta,
        terms={"volume_laplacian": laplacian, "boundary_flux": boundary, "gradient_pairing": cross},
    )


def verify_green_second(
    a: StratifiedAlgebra,
    u: ScalarField,
    v: ScalarField,
    d: DomainSpec,
    resolution: int,
    quad: Optional[QuadratureSpec] = None,
    tolerance: float = 1e-2,
    scenario: str = "green_second",
    criterion: Criterion = Criterion.IDENTITY,
) -> GaussGreenReport:
    """int_E (v Lap_H u - u Lap_H v) = boundary int of <v grad_H u - u grad_H v, nu_E>."""
    quad = quad or DEFAULT_VOLUME_QUADRATURE
    samples = sample_boundary(a, d, resolution)

    def bulk(x: np.ndarray) -> np.ndarray:
        return evaluate(v, x) * sub_laplacian(a, u, x) - evaluate(u, x) * sub_laplacian(a, v, x)

    def flux(s: BoundarySampleSet) -> np.ndarray:
        nu, _ = horizontal_normals(s)
        pts = s.points
        combined = evaluate(v, pts)[:, None] * horizontal_gradient(a, u, pts) - evaluate(u, pts)[:, None] * horizontal_gradient(a, v, pts)
        return np.einsum("nm,nm->n", combined, nu)

    lhs = volume_integral(a, d, bulk, quad)
    rhs = boundary_integral(a, d, flux, resolution, samples=samples)
    meta = _meta(d, samples, resolution, quad)
    meta.update({"u": u.name, "v": v.name})
    return GaussGreenReport(scenario, lhs, rhs, tolerance, criterion, meta=meta, terms={"volume": lhs, "flux": rhs})


def verify_integration_by_parts(
    a: StratifiedAlgebra,
    F: HorizontalField,
    g: ScalarField,
    d: DomainSpec,
    resolution: int,
    quad: Optional[QuadratureSpec] = None,
    tolerance: float = 1e-2,
    scenario: str = "integration_by_parts",
    criterion: Criterion = Criterion.IDENTITY,
) -> GaussGreenReport:
    """int_E (g div F + <F, grad_H g>) dx = boundary int of g <F, nu_E>."""
    quad = quad or DEFAULT_VOLUME_QUADRATURE
    samples = sample_boundary(a, d, resolution)

    def bulk(x: np.ndarray) -> np.ndarray:
        return evaluate(g, x) * horizontal_divergence(a, F, x) + np.einsum("nm,nm->n", F(x), horizontal_gradient(a, g, x))

    lhs = volume_integral(a, d, bulk, quad)
    rhs = boundary_integral(a, d, lambda s: evaluate(g, s.points) * normal_traces(s, F), resolution, samples=samples)
    meta = _meta(d, samples, resolution, quad)
    meta.update({"field": F.name, "g": g.name})
    return GaussGreenReport(scenario, lhs, rhs, tolerance, criterion, meta=meta, terms={"volume": lhs, "flux": rhs})


def verify_trace_bound(
    a: StratifiedAlgebra,
    F: HorizontalField,
    d: DomainSpec,
    resolution: int,
    quad: Optional[QuadratureSpec] = None,
    tolerance: float = 1e-10,
    scenario: str = "trace_bound",
) -> GaussGreenReport:
    """max |<F, nu_E>| over the boundary against the sampled sup of |F| over the closure of E."""
    quad = quad or QuadratureSpec(resolution=32)
    samples = sample_boundary(a, d, resolution)
    lhs = float(np.max(np.abs(normal_traces(samples, F))))
    sup = float(np.max(np.linalg.norm(F(samples.points), axis=-1)))
    for nodes, _ in QuadratureRule(quad, quad.region or d.bbox, label="trace_bound").blocks():
        inside = d.contains(nodes)
        if np.any(inside):
            sup = max(sup, float(np.max(np.linalg.norm(F(nodes[inside]), axis=-1))))
    meta = _meta(d, samples, resolution, quad)
    meta["field"] = F.name
    if F.bound is not None:
        meta["declared_bound"] = F.bound
    return GaussGreenReport(scenario, lhs, sup, tolerance, criterion=Criterion.UPPER_BOUND, meta=meta)


# --------------------------------------------------------------------------- #
# Half density of the mollified indicator
# --------------------------------------------------------------------------- #
def half_density_values(
    m: Mollifier,
    d: DomainSpec,
    eps_ladder: Sequence[float],
    resolution: int,
    phi: Optional[FieldLike] = None,
    quad: Optional[QuadratureSpec] = None,
) -> List[float]:
    """A(eps) = boundary int of phi (rho_eps * chi_E) / boundary int of phi, against |D_H chi_E|."""
    a = m.algebra
    samples = sample_boundary(a, d, resolution)
    if d.bounded:
        margin = 2.0 * max(eps_ladder)
        inside = m.norm.inner_set_indicator(d.bbox, margin, samples.points)
        if not np.all(inside):
            raise DomainError(f"{d.name}: boundary is closer than {margin:g} to the window, enlarge the margin")
    weight = np.ones(len(samples)) if phi is None else evaluate(phi, samples.points)
    mass = boundary_integral(a, d, lambda s: weight, resolution, samples=samples)
    if abs(mass) < 1e-14:
        raise DomainError("boundary weight has zero mass against the h-perimeter")
    values = []
    for eps in eps_ladder:
        mollified = m.mollify_indicator(eps, d, samples.points, quad)
        values.append(boundary_integral(a, d, lambda s: weight * mollified, resolution, samples=samples) / mass)
        logger.debug("half density %s eps=%g: A=%.6f", d.name, eps, values[-1])
    return values


def verify_half_density(
    m: Mollifier,
    d: DomainSpec,
    eps_ladder: Sequence[float],
    resolution: int,
    phi: Optional[FieldLike] = None,
    quad: Optional[QuadratureSpec] = None,
    tolerance: float = 0.02,
    trend_slack: float = 0.2,
    trend_floor: float = 1e-3,
    scenario: str = "half_density",
) -> List[GaussGreenReport]:
    """One trend report per ladder step, then the limit report |A(eps_min) - 1/2| <= tolerance.

    Trend reports pass when |A - 1/2| grows by at most ``trend_slack`` (plus
    ``trend_floor`` absolute) from one eps to the next.
    """
    if any(b >= a_ for a_, b in zip(eps_ladder, eps_ladder[1:])):
        raise DomainError("eps ladder must be strictly decreasing")
    values = half_density_values(m, d, eps_ladder, resolution, phi, quad)
    errors = [abs(v - 0.5) for v in values]
    base_meta = {"domain": d.name, "resolution": int(resolution), "eps_ladder": list(eps_ladder)}
    if quad is not None:
        base_meta["quadrature"] = quad.describe()
    reports = []
    for k in range(1, len(eps_ladder)):
        reports.append(
            GaussGreenReport(
                f"{scenario}[trend eps={eps_ladder[k]:g}]",
                errors[k],
                (1.0 + trend_slack) * errors[k - 1],
                trend_floor,
                criterion=Criterion.UPPER_BOUND,
                meta=dict(base_meta, eps=eps_ladder[k], previous_eps=eps_ladder[k - 1]),
            )
        )
    terms = {f"A[eps={eps:g}]": value for eps, value in zip(eps_ladder, values)}
    limit = GaussGreenReport(
        f"{scenario}[limit]",
        values[-1],
        0.5,
        tolerance / 0.5,
        meta=dict(base_meta, eps=eps_ladder[-1], nonincreasing=is_nonincreasing(errors, trend_slack, trend_floor)),
        terms=terms,
    )
    reports.append(limit)
    return reports


# --------------------------------------------------------------------------- #
# Traces
# --------------------------------------------------------------------------- #
def verify_trace_locality(
    a: StratifiedAlgebra,
    F: HorizontalField,
    d1: DomainSpec,
    d2: DomainSpec,
    patch: PatchFn,
    resolution: int,
    tolerance: float = 1e-10,
    align_tol: Optional[float] = None,
    normal_tol: float = 1e-6,
    align_cells: float = 1e-6,
    scenario: str = "trace_locality",
) -> GaussGreenReport:
    """Normal traces of F from two domains agree on a shared boundary patch.

    Samples on the patch are matched by nearest neighbour; where the outward
    normals coincide the traces must be equal, where they are opposite they
    must cancel. Matched samples may lie ``align_tol`` apart, by default
    ``align_cells`` mesh cells (the coarser of the two windows over the
    resolution): a tiny fraction for shared charts, about one cell for two
    meshes that only touch.
    """
    if align_tol is None:
        spacing = max(float(np.max(d.bbox.widths)) for d in (d1, d2)) / resolution
        align_tol = align_cells * spacing
    s1 = sample_boundary(a, d1, resolution)
    s2 = sample_boundary(a, d2, resolution)
    s1 = s1.subset(np.asarray(patch(s1.points), dtype=bool))
    s2 = s2.subset(np.asarray(patch(s2.points), dtype=bool))
    if len(s1) == 0 or len(s2) == 0:
        raise AlignmentError(f"patch holds {len(s1)} samples of {d1.name} and {len(s2)} of {d2.name}")
    distance, index = cKDTree(s2.points).query(s1.points)
    if float(np.max(distance)) > align_tol:
        raise AlignmentError(f"patch samples do not align (max distance {np.max(distance):.3g} > {align_tol:g})")
    s2 = s2.subset(index)
    cosine = np.einsum("nq,nq->n", s1.normals, s2.normals)
    same = cosine >= 1.0 - normal_tol
    opposite = cosine <= -1.0 + normal_tol
    if not np.all(same | opposite):
        raise AlignmentError(f"normals on the patch are neither equal nor opposite (min |cos| {np.min(np.abs(cosine)):.6f})")
    sign = np.where(same, 1.0, -1.0)
    t1 = normal_traces(s1, F)
    t2 = normal_traces(s2, F)
    lhs = float(np.max(np.abs(t1 - sign * t2)))
    orientation = "same" if np.all(same) else "opposite" if np.all(opposite) else "mixed"
    meta = {
        "domains": [d1.name, d2.name],
        "field": F.name,
        "resolution": int(resolution),
        "patch_samples": len(s1),
        "orientation": orientation,
        "max_alignment_distance": float(np.max(distance)),
        "align_tol": float(align_tol),
    }
    return GaussGreenReport(scenario, lhs, 0.0, tolerance, meta=meta)


def _plane_gap(support) -> float:
    """Distance in x1 - x2 from a support box to the plane x1 = x2."""
    lo = support.lower[0] - support.upper[1]
    hi = support.upper[0] - support.lower[1]
    if lo > 0.0:
        return float(lo)
    if hi < 0.0:
        return float(-hi)
    return 0.0


def verify_divergence_free_example(
    a: StratifiedAlgebra,
    quad: QuadratureSpec,
    bumps: Sequence[ScalarField],
    F: Optional[HorizontalField] = None,
    delta: float = 0.1,
    tolerance: float = 1e-3,
    scenario: str = "divergence_free",
) -> List[GaussGreenReport]:
    """-int <F, grad_H phi> vanishes for bumps kept away from the plane x1 = x2.

    F defaults to sin(1 / (x1 - x2)) (X_1 + X_2).
    """
    F = F or sin_example_field(a)
    reports = []
    for phi in bumps:
        if phi.support is None:
            raise SupportError(f"{phi.name} has no declared support box")
        gap = _plane_gap(phi.support)
        if gap <= delta:
            raise SupportError(f"{phi.name} comes within {gap:.3g} of the plane x1 = x2 (needs > {delta:g})")
        pairing = distributional_divergence_pairing(a, F, phi, quad)
        reports.append(
            GaussGreenReport(
                f"{scenario}[{phi.name}]",
                pairing,
                0.0,
                tolerance,
                meta={"field": F.name, "bump": phi.name, "plane_gap": gap, "quadrature": quad.describe()},
            )
        )
    return reports


# --------------------------------------------------------------------------- #
# Refinement
# --------------------------------------------------------------------------- #
@dataclass
class RefinementStudy:
    reports: List[GaussGreenReport]
    resolutions: List[int]
    ratios: List[float] = field(default_factory=list)
    monotone: bool = True
    growth: float = 0.1

    @property
    def passed(self) -> bool:
        return self.monotone and bool(self.reports) and self.reports[-1].passed

    def verdict(self, scenario: str) -> GaussGreenReport:
        """Upper-bound report: worst residual ratio against 1 + growth."""
        worst = max(self.ratios) if self.ratios else 0.0
        return GaussGreenReport(
            f"{scenario}[refinement]",
            worst,
            1.0 + self.growth,
            0.0,
            criterion=Criterion.UPPER_BOUND,
            meta={"resolutions": self.resolutions, "scores": [r.score for r in self.reports], "final_passed": self.reports[-1].passed},
        )


def refinement_study(
    run: Callable[[int], GaussGreenReport],
    resolutions: Sequence[int],
    growth: float = 0.1,
    floor: float = 1e-12,
) -> RefinementStudy:
    """Run ``run`` at each resolution; the score each report is judged by may grow by at most ``growth`` per level."""
    reports = [run(int(r)) for r in resolutions]
    scores = [r.score for r in reports]
    ratios = step_ratios(scores, floor)
    monotone = is_nonincreasing(scores, growth, floor)
    if not monotone:
        logger.warning("refinement %s: residuals %s are not nonincreasing", list(resolutions), scores)
    return RefinementStudy(reports, [int(r) for r in resolutions], ratios, monotone, growth)

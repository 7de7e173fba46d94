"""Scenario runner: turns validated scenarios into reports."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import settings
from .domains import dilate_domain, h_perimeter
from .errors import CarnotError, ConfigError
from .gaussgreen import (
    refinement_study,
    verify_divergence_free_example,
    verify_gauss_green,
    verify_green_first,
    verify_green_second,
    verify_half_density,
    verify_integration_by_parts,
    verify_trace_bound,
    verify_trace_locality,
)
from .hcalc import euclidean_gradient, x_derivative
from .metric import HomogeneousNorm, haar_volume_mc
from .metrics.convergence import step_ratios
from .models import BoxRegion, Criterion, GaussGreenReport, QuadratureSpec, ScalarField, ScenarioKind
from .mollify import Mollifier
from .scenario import ScenarioConfig
from .utils.logging_utils import get_logger
from .utils.seeding import generator

logger = get_logger(__name__)

Flow = Callable[[ScenarioConfig], List[GaussGreenReport]]


def _label(cfg: ScenarioConfig, suffix: str) -> str:
    return f"{cfg.name}[{suffix}]"


def _test_function(q: int) -> ScalarField:
    """sin(x . w) with fixed irrational-ish weights, used for frame checks."""
    w = np.sqrt(np.arange(2, q + 2, dtype=float))
    return ScalarField(
        eval=lambda x: np.sin(x @ w),
        euclidean_gradient=lambda x: np.cos(x @ w)[:, None] * w,
        smoothness="Cinf",
        name="sin_test_function",
    )


class ScenarioRunner:
    """Execute scenarios; one ``_run_<kind>_flow`` per :class:`ScenarioKind`."""

    def __init__(self, threads: Optional[int] = None) -> None:
        self.threads = threads or settings.threads
        self._flows: Dict[ScenarioKind, Flow] = {
            ScenarioKind.GROUP_AXIOMS: self._run_group_axioms_flow,
            ScenarioKind.HAAR_SCALING: self._run_haar_scaling_flow,
            ScenarioKind.FRAME: self._run_frame_flow,
            ScenarioKind.COMMUTATION: self._run_commutation_flow,
            ScenarioKind.POINTWISE_LIMIT: self._run_pointwise_limit_flow,
            ScenarioKind.HALF_DENSITY: self._run_half_density_flow,
            ScenarioKind.GAUSS_GREEN: self._run_gauss_green_flow,
            ScenarioKind.GREEN_FIRST: self._run_green_first_flow,
            ScenarioKind.GREEN_SECOND: self._run_green_second_flow,
            ScenarioKind.INTEGRATION_BY_PARTS: self._run_integration_by_parts_flow,
            ScenarioKind.TRACE_LOCALITY: self._run_trace_locality_flow,
            ScenarioKind.TRACE_BOUND: self._run_trace_bound_flow,
            ScenarioKind.DIVERGENCE_FREE: self._run_divergence_free_flow,
            ScenarioKind.TOTAL_VARIATION: self._run_total_variation_flow,
            ScenarioKind.PERIMETER_SCALING: self._run_perimeter_scaling_flow,
        }

    def run(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        logger.info("scenario %s (%s) on %s", cfg.name, cfg.kind.value, cfg.algebra.name)
        started = time.perf_counter()
        reports = self._flows[cfg.kind](cfg)
        for report in reports:
            report.meta.setdefault("kind", cfg.kind.value)
            report.meta.setdefault("group", cfg.algebra.name)
            report.meta.setdefault("seed", cfg.seed)
        passed = sum(r.passed for r in reports)
        logger.info(
            "scenario %s: %d/%d passed in %.1fs", cfg.name, passed, len(reports), time.perf_counter() - started
        )
        return reports

    def run_all(self, scenarios: Sequence[ScenarioConfig]) -> List[GaussGreenReport]:
        """Run scenarios concurrently; reports come back in scenario order."""

        def guarded(cfg: ScenarioConfig) -> List[GaussGreenReport]:
            try:
                return self.run(cfg)
            except ConfigError:
                raise
            except CarnotError as exc:
                logger.error("scenario %s failed: %s", cfg.name, exc)
                return [
                    GaussGreenReport(
                        cfg.name,
                        math.nan,
                        math.nan,
                        cfg.tolerance,
                        meta={"kind": cfg.kind.value, "error": f"{type(exc).__name__}: {exc}"},
                    )
                ]

        if self.threads > 1 and len(scenarios) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                batches = list(pool.map(guarded, scenarios))
        else:
            batches = [guarded(cfg) for cfg in scenarios]
        return [report for batch in batches for report in batch]

    # ------------------------------------------------------------------ #
    # Shared builders
    # ------------------------------------------------------------------ #
    @staticmethod
    def _norm(cfg: ScenarioConfig) -> HomogeneousNorm:
        return HomogeneousNorm(cfg.algebra, cfg.norm)

    def _mollifier(self, cfg: ScenarioConfig) -> Mollifier:
        return Mollifier(
            self._norm(cfg),
            cfg.profile,
            stencil=cfg.stencil,
            check_samples=min(cfg.mc_samples, 100_000),
            seed=cfg.mc_seed,
        )

    @staticmethod
    def _volume_quadrature(cfg: ScenarioConfig, resolution: int) -> QuadratureSpec:
        return cfg.quadrature or QuadratureSpec(resolution=resolution)

    @classmethod
    def _identity_options(cls, cfg: ScenarioConfig, resolution: int) -> Dict[str, Any]:
        return {
            "quad": cls._volume_quadrature(cfg, resolution),
            "tolerance": cfg.tolerance,
            "scenario": _label(cfg, f"res={resolution}"),
            "criterion": cfg.criterion,
        }

    @staticmethod
    def _refined(cfg: ScenarioConfig, run: Callable[[int], GaussGreenReport]) -> List[GaussGreenReport]:
        if len(cfg.resolution) == 1:
            return [run(cfg.resolution[0])]
        study = refinement_study(run, cfg.resolution)
        return study.reports + [study.verdict(cfg.name)]

    # ------------------------------------------------------------------ #
    # Algebra and metric
    # ------------------------------------------------------------------ #
    def _run_group_axioms_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        a = cfg.algebra
        samples = cfg.param("samples", 1000)
        scale = cfg.param("scale", 1.0)
        rng = generator(cfg.seed, cfg.name, "triples")
        x, y, z = (rng.uniform(-scale, scale, (samples, a.q)) for _ in range(3))
        e = a.identity
        residuals = {
            "associativity": np.max(np.abs(a.group_product(a.group_product(x, y), z) - a.group_product(x, a.group_product(y, z)))),
            "identity": max(np.max(np.abs(a.group_product(x, e) - x)), np.max(np.abs(a.group_product(e, x) - x))),
            "inverse": max(
                np.max(np.abs(a.group_product(x, a.group_inverse(x)))),
                np.max(np.abs(a.group_product(a.group_inverse(x), x))),
            ),
            "jacobi": a.jacobi_residual(),
        }
        meta = {"samples": samples, "scale": scale}
        return [
            GaussGreenReport(_label(cfg, key), float(value), 0.0, cfg.tolerance, meta=dict(meta))
            for key, value in residuals.items()
        ]

    def _run_haar_scaling_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        a = cfg.algebra
        norm = self._norm(cfg)
        lam = cfg.param("scale", 2.0)
        n_se = cfg.tolerance
        samples = cfg.mc_samples

        def ball_volume(r: float, label: str):
            half = norm.coordinate_bounds(r)
            return haar_volume_mc(BoxRegion(-half, half), lambda pts: norm(pts) < r, samples, cfg.mc_seed, label=label)

        small, small_se = ball_volume(1.0, "haar_unit")
        large, large_se = ball_volume(lam, "haar_dilated")
        ratio = large / small
        ratio_se = ratio * math.hypot(small_se / small, large_se / large)
        expected = lam ** a.hom_dimension
        unit = norm.unit_ball_volume()
        n_pairs = cfg.param("samples", 1000)
        # measured only; the comparison constants depend on the norm
        lower, upper = norm.local_comparison_constants(BoxRegion.cube(a.q, 1.0), n_pairs, cfg.seed)
        constants = {
            "quasi_triangle": norm.quasi_triangle_constant(n_pairs, cfg.seed),
            "local_comparison": [lower, upper],
        }
        meta = {"samples": samples, "mc_seed": cfg.mc_seed, "norm": norm.kind.value, "lambda": lam}
        reports = [
            GaussGreenReport(
                _label(cfg, "ball_ratio"),
                ratio,
                expected,
                n_se * ratio_se / expected,
                meta=dict(meta, std_error=ratio_se),
                terms={"mu_unit": small, "mu_dilated": large},
            ),
            GaussGreenReport(
                _label(cfg, "unit_ball_volume"),
                small,
                unit,
                n_se * small_se / unit,
                meta=dict(meta, std_error=small_se, constants=constants),
            ),
        ]

        rng = generator(cfg.seed, cfg.name, "dilation")
        x, y = (rng.uniform(-1.0, 1.0, (cfg.param("samples", 1000), a.q)) for _ in range(2))
        for r in (0.5, lam):
            hom = np.max(np.abs(a.dilate(r, a.group_product(x, y)) - a.group_product(a.dilate(r, x), a.dilate(r, y))))
            dist = np.max(np.abs(norm.dist(a.dilate(r, x), a.dilate(r, y)) - r * norm.dist(x, y)))
            reports.append(GaussGreenReport(_label(cfg, f"dilation_homomorphism r={r:g}"), float(hom), 0.0, 1e-12, meta=dict(meta)))
            reports.append(GaussGreenReport(_label(cfg, f"dilation_distance r={r:g}"), float(dist), 0.0, 1e-12, meta=dict(meta)))
        return reports

    def _run_frame_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        a = cfg.algebra
        samples = cfg.param("samples", 100)
        h = cfg.param("h", settings.fd_step)
        rng = generator(cfg.seed, cfg.name, "frame")
        p = rng.uniform(-1.0, 1.0, (samples, a.q))
        g = rng.uniform(-1.0, 1.0, (samples, a.q))
        frame = a.frame_coefficients(p)

        table_error = 0.0
        for j in range(a.m):
            moved = (a.group_product(p, a.exp_horizontal(j, h)) - a.group_product(p, a.exp_horizontal(j, -h))) / (2.0 * h)
            table_error = max(table_error, float(np.max(np.abs(moved - frame[:, j, :]) / np.maximum(1.0, np.abs(frame[:, j, :])))))

        phi = _test_function(a.q)
        gp = a.group_product(g, p)
        analytic = np.einsum("nmq,nq->nm", a.frame_coefficients(gp), euclidean_gradient(phi, gp))
        translated = lambda x: phi(a.group_product(g, x))
        invariance_error = 0.0
        for j in range(a.m):
            numeric = x_derivative(a, translated, j, p, h)
            scale = np.maximum(1.0, np.abs(analytic[:, j]))
            invariance_error = max(invariance_error, float(np.max(np.abs(numeric - analytic[:, j]) / scale)))

        meta = {"samples": samples, "h": h, "frame": a.frame_rows()}
        return [
            GaussGreenReport(_label(cfg, "frame_table"), table_error, 0.0, cfg.tolerance, meta=dict(meta)),
            GaussGreenReport(_label(cfg, "left_invariance"), invariance_error, 0.0, cfg.tolerance, meta=dict(meta)),
        ]

    # ------------------------------------------------------------------ #
    # Mollification
    # ------------------------------------------------------------------ #
    def _run_commutation_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        m = self._mollifier(cfg)
        eps = cfg.eps_ladder[0]
        method = cfg.param("method", "stencil")
        reports: List[GaussGreenReport] = []
        for f in cfg.scalar_lists["fields"]:

            def run(resolution: int, f: ScalarField = f) -> GaussGreenReport:
                stencil = QuadratureSpec(resolution=resolution) if resolution else cfg.stencil
                worst = max(
                    float(m.commutation_residual(eps, f, j, cfg.point, stencil, cfg.param("h"), method=method))
                    for j in range(cfg.algebra.m)
                )
                meta = {"eps": eps, "point": cfg.point.tolist(), "method": method, "stencil": (stencil or m.stencil_spec).describe()}
                return GaussGreenReport(_label(cfg, f"{f.name} res={resolution}" if resolution else f.name), worst, 0.0, cfg.tolerance, meta=meta)

            if len(cfg.resolution) > 1:
                study = refinement_study(run, cfg.resolution)
                reports.extend(study.reports + [study.verdict(f"{cfg.name}:{f.name}")])
            else:
                reports.append(run(cfg.resolution[0] if cfg.resolution else 0))
        return reports

    def _run_pointwise_limit_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        m = self._mollifier(cfg)
        reports: List[GaussGreenReport] = []
        for f in cfg.scalar_lists["fields"]:
            errors = m.pointwise_limit_errors(f, cfg.point, cfg.eps_ladder, cfg.stencil, cfg.param("reference_radius"))
            ratios = step_ratios(errors, 1e-12)
            meta = {"eps_ladder": list(cfg.eps_ladder), "errors": errors, "point": cfg.point.tolist()}
            reports.append(
                GaussGreenReport(
                    _label(cfg, f"{f.name} trend"),
                    max(ratios) if ratios else 0.0,
                    1.0,
                    0.0,
                    criterion=Criterion.UPPER_BOUND,
                    meta=dict(meta),
                )
            )
            reports.append(GaussGreenReport(_label(cfg, f"{f.name} limit"), errors[-1], 0.0, cfg.tolerance, meta=dict(meta)))
        return reports

    def _run_half_density_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        return verify_half_density(
            self._mollifier(cfg),
            cfg.domain,
            cfg.eps_ladder,
            cfg.resolution[-1],
            phi=cfg.scalars.get("phi"),
            quad=cfg.stencil,
            tolerance=cfg.tolerance,
            trend_slack=cfg.param("trend_slack", 0.2),
            scenario=cfg.name,
        )

    def _run_total_variation_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        m = self._mollifier(cfg)
        if cfg.quadrature is not None:
            resolution = cfg.quadrature.resolution
        else:
            resolution = cfg.resolution[-1] if cfg.resolution else 32
        boundary_resolution = cfg.param("boundary_resolution", 64)
        reports = []
        for eps in cfg.eps_ladder:
            lhs, rhs = m.total_variation_bound_check(eps, cfg.domain, cfg.region, resolution, boundary_resolution, cfg.stencil)
            reports.append(
                GaussGreenReport(
                    _label(cfg, f"eps={eps:g}"),
                    lhs,
                    rhs,
                    cfg.tolerance,
                    criterion=Criterion.UPPER_BOUND,
                    meta={"eps": eps, "domain": cfg.domain.name, "region": cfg.region.to_dict(), "resolution": resolution},
                )
            )
        return reports

    # ------------------------------------------------------------------ #
    # Divergence theorem and relatives
    # ------------------------------------------------------------------ #
    def _run_gauss_green_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        return self._refined(
            cfg,
            lambda r: verify_gauss_green(cfg.algebra, cfg.vector_field, cfg.domain, r, **self._identity_options(cfg, r)),
        )

    def _run_green_first_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        u, v = cfg.scalars["u"], cfg.scalars["v"]
        return self._refined(
            cfg,
            lambda r: verify_green_first(cfg.algebra, u, v, cfg.domain, r, **self._identity_options(cfg, r)),
        )

    def _run_green_second_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        u, v = cfg.scalars["u"], cfg.scalars["v"]
        return self._refined(
            cfg,
            lambda r: verify_green_second(cfg.algebra, u, v, cfg.domain, r, **self._identity_options(cfg, r)),
        )

    def _run_integration_by_parts_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        g = cfg.scalars["g"]
        return self._refined(
            cfg,
            lambda r: verify_integration_by_parts(cfg.algebra, cfg.vector_field, g, cfg.domain, r, **self._identity_options(cfg, r)),
        )

    def _run_trace_bound_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        r = cfg.resolution[-1]
        return [
            verify_trace_bound(cfg.algebra, cfg.vector_field, cfg.domain, r, self._volume_quadrature(cfg, 32), cfg.tolerance, cfg.name)
        ]

    def _run_trace_locality_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        return [
            verify_trace_locality(
                cfg.algebra,
                cfg.vector_field,
                cfg.domain,
                cfg.other_domain,
                cfg.patch,
                cfg.resolution[-1],
                tolerance=cfg.tolerance,
                align_tol=cfg.param("align_tol"),
                normal_tol=cfg.param("normal_tol", 1e-6),
                align_cells=cfg.param("align_cells", 1e-6),
                scenario=cfg.name,
            )
        ]

    def _run_divergence_free_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        return verify_divergence_free_example(
            cfg.algebra,
            cfg.quadrature,
            cfg.scalar_lists["bumps"],
            F=cfg.vector_field,
            delta=cfg.param("delta", 0.1),
            tolerance=cfg.tolerance,
            scenario=cfg.name,
        )

    def _run_perimeter_scaling_flow(self, cfg: ScenarioConfig) -> List[GaussGreenReport]:
        a = cfg.algebra
        r = cfg.resolution[-1]
        base = h_perimeter(a, cfg.domain, r)
        reports = []
        for lam in cfg.param("lambdas", [0.5, 2.0]):
            scaled = h_perimeter(a, dilate_domain(a, cfg.domain, lam), r)
            reports.append(
                GaussGreenReport(
                    _label(cfg, f"lambda={lam:g}"),
                    scaled / base,
                    lam ** (a.hom_dimension - 1),
                    cfg.tolerance,
                    meta={"domain": cfg.domain.name, "resolution": r, "lambda": lam},
                    terms={"perimeter": base, "dilated_perimeter": scaled},
                )
            )
        return reports

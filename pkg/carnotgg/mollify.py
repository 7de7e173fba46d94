"""Group-convolution mollification.

(rho_eps * f)(x) = int rho_eps(y) f(y^{-1} x) dy with rho_eps(y) = eps^{-Q} rho(delta_{1/eps} y)
and rho(u) = c eta(||u||). Substituting y = delta_eps u turns every
convolution into a sum over a fixed stencil of nodes u in the unit ball, so
f is sampled on the right ball B^R(x, eps) = {w x : ||w|| < eps}.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad as scipy_quad

from .config import settings
from .errors import DomainError, PresetNotFoundError
from .hcalc import FieldLike, evaluate, horizontal_gradient
from .metric import HomogeneousNorm, haar_volume_mc
from .models import BoxRegion, DomainSpec, PointLike, QuadratureKind, QuadratureSpec
from .quadrature import QuadratureRule
from .utils.logging_utils import get_logger
from .utils.seeding import generator

logger = get_logger(__name__)

Profile = Callable[[np.ndarray], np.ndarray]

PROFILES: Dict[str, Profile] = {
    "linear": lambda t: 1.0 - t,
    "quadratic": lambda t: (1.0 - t) ** 2,
    "cosine": lambda t: 0.5 * (1.0 + np.cos(np.pi * t)),
}

_STENCIL_RESOLUTION = {2: 48, 3: 24, 4: 14, 5: 10}


def default_stencil(q: int) -> QuadratureSpec:
    return QuadratureSpec(QuadratureKind.TENSOR_GRID, _STENCIL_RESOLUTION.get(q, 8))


def resolve_profile(profile: Union[str, Profile]) -> Tuple[str, Profile]:
    if callable(profile):
        return getattr(profile, "__name__", "custom"), profile
    if profile not in PROFILES:
        raise PresetNotFoundError(f"unknown mollifier profile '{profile}'; known: {sorted(PROFILES)}", path="mollifier.profile")
    return profile, PROFILES[profile]


def _single(pts: np.ndarray, values: np.ndarray) -> Union[float, np.ndarray]:
    return float(values.reshape(-1)[0]) if pts.ndim == 1 else values


class Mollifier:
    """rho = c eta(||.||) for a Lipschitz profile eta on [0, 1] with eta(1) = 0.

    The normalisation c = 1 / (mu(B_1) Q int_0^1 eta(s) s^(Q-1) ds) comes from
    the layer-cake formula mu(B_s) = s^Q mu(B_1). The kernel symmetry
    rho(x) = rho(x^{-1}) is checked by sampling and a Monte Carlo estimate of
    int rho is recorded; both happen here, after which the object is read-only.
    """

    def __init__(
        self,
        norm: HomogeneousNorm,
        profile: Union[str, Profile] = "linear",
        stencil: Optional[QuadratureSpec] = None,
        check_samples: int = 100_000,
        seed: int = 0,
    ) -> None:
        self.norm = norm
        self.algebra = norm.algebra
        self.Q = self.algebra.hom_dimension
        self.profile_name, self.eta = resolve_profile(profile)
        if abs(float(self.eta(np.array(1.0)))) > 1e-12:
            raise DomainError(f"profile '{self.profile_name}' must vanish at 1")

        radial, _ = scipy_quad(lambda s: float(self.eta(np.array(s))) * s ** (self.Q - 1), 0.0, 1.0)
        self.normalization = 1.0 / (norm.unit_ball_volume() * self.Q * radial)

        self.stencil_spec = stencil or default_stencil(self.algebra.q)
        self._nodes, self._weights, self.stencil_mass = self._build_stencil(self.stencil_spec)

        self.symmetry_defect = self.symmetry_check(1000, seed)
        if self.symmetry_defect > 1e-12:
            raise DomainError(f"kernel is not symmetric under inversion (defect {self.symmetry_defect:.3g})")
        self.normalization_check = self.kernel_integral(1.0, check_samples, seed) if check_samples else (1.0, 0.0)
        estimate, std_error = self.normalization_check
        if abs(estimate - 1.0) > 3.0 * std_error + 1e-9:
            logger.warning("kernel integral %.5f deviates from 1 by more than 3 standard errors (%.2g)", estimate, std_error)
        logger.debug(
            "mollifier %s on %s: c=%.6g, stencil %d nodes (mass %.4f)",
            self.profile_name,
            self.algebra.name,
            self.normalization,
            len(self._weights),
            self.stencil_mass,
        )

    # ------------------------------------------------------------------ #
    # Kernel
    # ------------------------------------------------------------------ #
    def kernel(self, u: np.ndarray) -> np.ndarray:
        r = self.norm.norm(u)
        inside = r < 1.0
        out = np.zeros(r.shape)
        out[inside] = self.normalization * self.eta(r[inside])
        return out

    def kernel_eps(self, eps: float, y: np.ndarray) -> np.ndarray:
        return eps ** (-self.Q) * self.kernel(self.algebra.dilate(1.0 / eps, y))

    def kernel_integral(self, eps: float, samples: int, seed: int) -> Tuple[float, float]:
        """Monte Carlo estimate of int rho_eps over the bounding box of B(0, eps)."""
        half = float(eps) ** self.algebra.degrees.astype(float)
        box = BoxRegion(-half, half)
        return haar_volume_mc(box, lambda pts: self.kernel_eps(eps, pts), samples, seed, label="kernel")

    def symmetry_check(self, samples: int, seed: int) -> float:
        rng = generator(seed, "kernel_symmetry")
        u = rng.uniform(-1.0, 1.0, (samples, self.algebra.q))
        return float(np.max(np.abs(self.kernel(u) - self.kernel(self.algebra.group_inverse(u)))))

    def _build_stencil(self, spec: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray, float]:
        nodes, cell = self.norm.unit_ball_nodes(spec, label="mollifier")
        raw = cell * self.kernel(nodes)
        mass = float(raw.sum())
        return nodes, raw / mass, mass

    def stencil(self, spec: Optional[QuadratureSpec] = None) -> Tuple[np.ndarray, np.ndarray]:
        """(nodes, weights) with weights summing to one."""
        if spec is None:
            return self._nodes, self._weights
        nodes, weights, _ = self._build_stencil(spec)
        return nodes, weights

    # ------------------------------------------------------------------ #
    # Convolution
    # ------------------------------------------------------------------ #
    def _check_inner(self, region: Optional[BoxRegion], radius: float, pts: np.ndarray) -> None:
        if region is None:
            return
        inside = self.norm.inner_set_indicator(region, radius, pts)
        if not np.all(inside):
            bad = pts.reshape(-1, self.algebra.q)[~np.asarray(inside).reshape(-1)][0]
            raise DomainError(f"point {bad.tolist()} is not in the {radius:g}-right-inner set of {region.to_dict()}")

    def _convolve(self, eps: float, f: FieldLike, pts: np.ndarray, nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
        a = self.algebra
        flat = pts.reshape(-1, a.q)
        shifts = a.group_inverse(a.dilate(eps, nodes))
        out = np.empty(flat.shape[0])
        rows = max(1, settings.eval_chunk // max(len(weights), 1))
        for start in range(0, flat.shape[0], rows):
            block = flat[start : start + rows]
            args = a.group_product(shifts[None, :, :], block[:, None, :])
            out[start : start + rows] = evaluate(f, args) @ weights
        return out.reshape(pts.shape[:-1])

    def mollify_scalar(
        self,
        eps: float,
        f: FieldLike,
        p: PointLike,
        quad: Optional[QuadratureSpec] = None,
        region: Optional[BoxRegion] = None,
    ) -> Union[float, np.ndarray]:
        """(rho_eps * f)(p); ``p`` must lie in the eps-right-inner set of f's region."""
        if not eps > 0:
            raise DomainError(f"eps must be positive, got {eps}")
        pts = self.algebra.coords(p)
        self._check_inner(region or getattr(f, "region", None), eps, pts)
        nodes, weights = self.stencil(quad)
        return _single(pts, self._convolve(eps, f, pts, nodes, weights))

    def commutation_residual(
        self,
        eps: float,
        f: FieldLike,
        j: int,
        p: PointLike,
        quad: Optional[QuadratureSpec] = None,
        h: Optional[float] = None,
        region: Optional[BoxRegion] = None,
        method: str = "stencil",
    ) -> Union[float, np.ndarray]:
        """|X_j(rho_eps * f)(p) - (rho_eps * X_j f)(p)|.

        The right side mollifies the horizontal derivative on the stencil.
        With ``method="stencil"`` the left side is a central difference of the
        mollified function along t -> p exp(t e_j); the stencil moves with p,
        so the two sides agree up to differencing error at any resolution.
        With ``method="kernel"`` the derivative falls on the kernel over a
        fixed grid (as in :meth:`mollified_gradient`), so the residual also
        carries the quadrature error and shrinks as the grid is refined.
        """
        a = self.algebra
        pts = a.coords(p)
        self._check_inner(region or getattr(f, "region", None), 2.0 * eps, pts)
        nodes, weights = self.stencil(quad)
        if method == "kernel":
            lhs = self._kernel_side_derivative(eps, f, j, pts.reshape(-1, a.q), quad, h).reshape(pts.shape[:-1])
        elif method == "stencil":
            h = float(h or settings.fd_step)
            forward = self._convolve(eps, f, a.group_product(pts, a.exp_horizontal(j, h)), nodes, weights)
            backward = self._convolve(eps, f, a.group_product(pts, a.exp_horizontal(j, -h)), nodes, weights)
            lhs = (forward - backward) / (2.0 * h)
        else:
            raise DomainError(f"unknown commutation method '{method}'")
        derivative = lambda x: horizontal_gradient(a, f, x)[..., j]
        rhs = self._convolve(eps, derivative, pts, nodes, weights)
        return _single(pts, np.abs(lhs - rhs))

    def _kernel_side_derivative(
        self, eps: float, f: FieldLike, j: int, pts: np.ndarray, quad: Optional[QuadratureSpec], h: Optional[float]
    ) -> np.ndarray:
        """X_j (rho_eps * f) with the derivative moved onto the kernel; f is centred at each point."""
        a = self.algebra
        nodes, cell = self._gradient_stencil(quad)
        ys = a.dilate(eps, nodes)
        shifts = a.group_inverse(ys)
        h = float(h or 1e-4 * eps)
        out = np.empty(pts.shape[0])
        rows = max(1, settings.eval_chunk // max(len(cell), 1))
        for start in range(0, pts.shape[0], rows):
            block = pts[start : start + rows]
            values = evaluate(f, a.group_product(shifts[None, :, :], block[:, None, :])) - evaluate(f, block)[:, None]
            out[start : start + rows] = (self._kernel_flow_derivative(eps, block, j, ys, h) * values) @ cell
        return out

    def pointwise_limit_errors(
        self,
        f: FieldLike,
        p: PointLike,
        eps_ladder: Sequence[float],
        quad: Optional[QuadratureSpec] = None,
        reference_radius: Optional[float] = None,
    ) -> List[float]:
        """|rho_eps * f(p) - average of f over B^R(p, r_ref)| along the ladder."""
        pts = self.algebra.coords(p)
        r_ref = reference_radius or min(eps_ladder) / 8.0
        reference = right_ball_average(self.norm, f, pts, r_ref, quad)
        return [abs(float(self.mollify_scalar(eps, f, pts, quad)) - float(reference)) for eps in eps_ladder]

    # ------------------------------------------------------------------ #
    # Indicators of domains
    # ------------------------------------------------------------------ #
    def mollify_indicator(
        self, eps: float, domain: DomainSpec, points: np.ndarray, quad: Optional[QuadratureSpec] = None
    ) -> np.ndarray:
        """rho_eps * chi_E at the given points."""
        pts = self.algebra.coords(points)
        nodes, weights = self.stencil(quad)
        return self._convolve(eps, lambda x: domain.contains(x).astype(float), pts, nodes, weights)

    def _gradient_stencil(self, spec: Optional[QuadratureSpec]) -> Tuple[np.ndarray, np.ndarray]:
        spec = spec or self.stencil_spec
        # slightly wider than the unit ball so that flowed kernels stay covered
        rule = QuadratureRule(spec, BoxRegion.cube(self.algebra.q, 1.05), label="mollifier_gradient")
        nodes, cell = rule.nodes_and_weights()
        mass = float(np.sum(cell * self.kernel(nodes)))
        return nodes, cell / mass

    def mollified_gradient(
        self,
        eps: float,
        domain: DomainSpec,
        points: np.ndarray,
        quad: Optional[QuadratureSpec] = None,
        h: Optional[float] = None,
    ) -> np.ndarray:
        """grad_H (rho_eps * chi_E) at ``points``, shape (N, m).

        With g_t = x exp(t e_j) x^{-1} one has
        X_j (rho_eps * chi_E)(x) = int d/dt rho_eps(g_t y) chi_E(y^{-1} x) dy,
        so only the kernel is differentiated. Points whose right ball does not
        meet the boundary get exactly zero.
        """
        a = self.algebra
        pts = a.coords(points).reshape(-1, a.q)
        nodes, cell = self._gradient_stencil(quad)
        ys = a.dilate(eps, nodes)
        shifts = a.group_inverse(ys)
        h = float(h or 1e-4 * eps)
        out = np.zeros((pts.shape[0], a.m))
        rows = max(1, settings.eval_chunk // max(len(cell), 1))
        for start in range(0, pts.shape[0], rows):
            block = pts[start : start + rows]
            chi = domain.contains(a.group_product(shifts[None, :, :], block[:, None, :]))
            band = np.any(chi, axis=1) & ~np.all(chi, axis=1)
            if not np.any(band):
                continue
            x = block[band]
            centred = chi[band].astype(float) - 0.5
            for j in range(a.m):
                derivative = self._kernel_flow_derivative(eps, x, j, ys, h)
                out[start + np.flatnonzero(band), j] = (derivative * centred) @ cell
        return out

    def _kernel_flow_derivative(self, eps: float, x: np.ndarray, j: int, ys: np.ndarray, h: float) -> np.ndarray:
        """d/dt rho(delta_{1/eps}(g_t y)) at t = 0 for g_t = x exp(t e_j) x^{-1}, shape (len(x), len(ys))."""
        a = self.algebra
        kernels = []
        for t in (h, -h):
            g = a.group_product(a.group_product(x, a.exp_horizontal(j, t)), a.group_inverse(x))
            moved = a.group_product(g[:, None, :], ys[None, :, :])
            kernels.append(self.kernel(a.dilate(1.0 / eps, moved)))
        return (kernels[0] - kernels[1]) / (2.0 * h)

    def total_variation_bound_check(
        self,
        eps: float,
        domain: DomainSpec,
        region: BoxRegion,
        resolution: Union[int, Tuple[int, ...]] = 32,
        boundary_resolution: int = 64,
        quad: Optional[QuadratureSpec] = None,
    ) -> Tuple[float, float]:
        """(int over Omega^R_{2 eps} of |grad_H(rho_eps * chi_E)|, h-perimeter of E in Omega)."""
        from .domains import h_perimeter

        rhs = h_perimeter(self.algebra, domain, boundary_resolution, window=region)
        rule = QuadratureRule(QuadratureSpec(QuadratureKind.TENSOR_GRID, resolution), region, label="total_variation")
        lhs = 0.0
        for nodes, weights in rule.blocks():
            inner = self.norm.inner_set_indicator(region, 2.0 * eps, nodes)
            if not np.any(inner):
                continue
            grad = self.mollified_gradient(eps, domain, nodes[inner], quad)
            lhs += float(weights[inner] @ np.linalg.norm(grad, axis=-1))
        logger.debug("total variation eps=%g: lhs=%.6g rhs=%.6g", eps, lhs, rhs)
        return lhs, rhs

    def describe(self) -> Dict[str, object]:
        estimate, std_error = self.normalization_check
        return {
            "profile": self.profile_name,
            "normalization": self.normalization,
            "stencil": self.stencil_spec.describe(),
            "stencil_nodes": int(len(self._weights)),
            "kernel_integral_mc": estimate,
            "kernel_integral_se": std_error,
        }


def right_ball_average(
    norm: HomogeneousNorm,
    f: FieldLike,
    p: PointLike,
    r: float,
    quad: Optional[QuadratureSpec] = None,
    region: Optional[BoxRegion] = None,
) -> Union[float, np.ndarray]:
    """Mean of f over B^R(p, r) = {w p : ||w|| < r}.

    Nodes are drawn in the bounding box [-1, 1]^q of the unit ball and
    rejected outside it (grid or Monte Carlo), then mapped by w = delta_r u.
    """
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    a = norm.algebra
    pts = a.coords(p)
    region = region or getattr(f, "region", None)
    if region is not None and not np.all(norm.inner_set_indicator(region, r, pts)):
        raise DomainError(f"right ball of radius {r:g} leaves {region.to_dict()}")
    nodes, cell = norm.unit_ball_nodes(quad or default_stencil(a.q), label="right_ball")
    weights = cell / cell.sum()
    ws = a.dilate(r, nodes)
    flat = pts.reshape(-1, a.q)
    out = np.empty(flat.shape[0])
    rows = max(1, settings.eval_chunk // max(len(weights), 1))
    for start in range(0, flat.shape[0], rows):
        block = flat[start : start + rows]
        out[start : start + rows] = evaluate(f, a.group_product(ws[None, :, :], block[:, None, :])) @ weights
    return _single(pts, out.reshape(pts.shape[:-1]))

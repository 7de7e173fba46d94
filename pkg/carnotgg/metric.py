"""Homogeneous norms, left and right distances, balls and inner sets."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import gamma

from .algebra import StratifiedAlgebra
from .config import settings
from .errors import DomainError, QuadratureError
from .models import BoxRegion, NormKind, PointLike, QuadratureSpec
from .polynomials import monomials
from .quadrature import QuadratureRule
from .utils.logging_utils import get_logger
from .utils.seeding import generator

logger = get_logger(__name__)

Predicate = Callable[[np.ndarray], np.ndarray]


class _ExtentComponent:
    """Coordinate k of w . p split by the exponent of w."""

    def __init__(self, exps: np.ndarray, coefs: np.ndarray, q: int, degrees: np.ndarray) -> None:
        groups: Dict[Tuple[int, ...], Tuple[List[np.ndarray], List[float]]] = {}
        for row, coef in zip(exps, coefs):
            alpha = tuple(int(v) for v in row[:q])
            betas, values = groups.setdefault(alpha, ([], []))
            betas.append(row[q:])
            values.append(float(coef))
        self.constant: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self.linear: List[Tuple[int, np.ndarray, np.ndarray]] = []
        self.higher: List[Tuple[int, np.ndarray, np.ndarray]] = []
        for alpha, (betas, values) in groups.items():
            table = (np.array(betas, dtype=np.int64), np.array(values))
            order = sum(alpha)
            if order == 0:
                self.constant = table
            elif order == 1:
                self.linear.append((alpha.index(1), *table))
            else:
                weight = int(np.dot(alpha, degrees))
                self.higher.append((weight, *table))


class HomogeneousNorm:
    """Homogeneous quasi-norm of an algebra.

    ``gauge``: max over layers i of |x^(i)|^(1/i) with |.| Euclidean on the layer.
    ``box``: max over coordinates of |x_j|^(1/d_j).
    Both are symmetric under x -> x^{-1} = -x.
    """

    def __init__(self, algebra: StratifiedAlgebra, kind: NormKind = NormKind.GAUGE) -> None:
        self.algebra = algebra
        self.kind = NormKind(kind)
        starts = np.concatenate([[0], np.cumsum(algebra.layer_dims)])
        self._layers = [slice(int(starts[i]), int(starts[i + 1])) for i in range(algebra.step)]
        self._extent: Optional[List[_ExtentComponent]] = None
        if algebra.step <= settings.bch_max_step:
            self._extent = self._extent_components()

    def __call__(self, p: PointLike) -> np.ndarray:
        return self.norm(p)

    def norm(self, p: PointLike) -> np.ndarray:
        x = self.algebra.coords(p)
        if self.kind == NormKind.BOX:
            return np.max(np.abs(x) ** (1.0 / self.algebra.degrees), axis=-1)
        parts = [np.linalg.norm(x[..., layer], axis=-1) ** (1.0 / (i + 1)) for i, layer in enumerate(self._layers)]
        return np.max(np.stack(parts, axis=-1), axis=-1)

    def dist(self, p: PointLike, q: PointLike) -> np.ndarray:
        """Left-invariant distance ||p^{-1} q||."""
        a = self.algebra
        return self.norm(a.group_product(a.group_inverse(p), q))

    def dist_right(self, p: PointLike, q: PointLike) -> np.ndarray:
        """Right-invariant distance ||p q^{-1}||."""
        a = self.algebra
        return self.norm(a.group_product(p, a.group_inverse(q)))

    def in_ball(self, center: PointLike, r: float) -> Predicate:
        center = self.algebra.coords(center)
        return lambda pts: self.dist(center, pts) < r

    def in_right_ball(self, center: PointLike, r: float) -> Predicate:
        center = self.algebra.coords(center)
        return lambda pts: self.dist_right(pts, center) < r

    # ------------------------------------------------------------------ #
    # Right balls
    # ------------------------------------------------------------------ #
    def _extent_components(self) -> List[_ExtentComponent]:
        if self._extent is not None:
            return self._extent
        table = self.algebra.product_table
        return [
            _ExtentComponent(exps, coefs, self.algebra.q, self.algebra.degrees)
            for exps, coefs in zip(table.exponents, table.coefs)
        ]

    def coordinate_bounds(self, r: float) -> np.ndarray:
        """Per-coordinate bound r ** d_j on |w_j| for ||w|| <= r."""
        return float(r) ** self.algebra.degrees

    def right_ball_extent(self, p: PointLike, r: float) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinate box containing B^R(p, r) = {w . p : ||w|| < r}.

        The part of w . p that is linear in w is maximised exactly over the
        ball; higher-order terms in w are bounded monomial by monomial, so the
        box is exact for step 2 and conservative beyond.
        """
        if not r > 0:
            raise DomainError(f"radius must be positive, got {r}")
        pts = self.algebra.coords(p)
        flat = pts.reshape(-1, self.algebra.q)
        centre = np.zeros_like(flat)
        spread = np.zeros_like(flat)
        for k, comp in enumerate(self._extent_components()):
            if comp.constant is not None:
                centre[:, k] = monomials(flat, comp.constant[0]) @ comp.constant[1]
            linear = np.zeros_like(flat)
            for j, betas, values in comp.linear:
                linear[:, j] += monomials(flat, betas) @ values
            if self.kind == NormKind.BOX:
                spread[:, k] = np.abs(linear) @ self.coordinate_bounds(r)
            else:
                spread[:, k] = sum(
                    float(r) ** (i + 1) * np.linalg.norm(linear[:, layer], axis=-1)
                    for i, layer in enumerate(self._layers)
                )
            for weight, betas, values in comp.higher:
                spread[:, k] += np.abs(monomials(flat, betas) @ values) * float(r) ** weight
        shape = pts.shape
        return (centre - spread).reshape(shape), (centre + spread).reshape(shape)

    def inner_set_indicator(self, region: BoxRegion, eps: float, p: PointLike) -> np.ndarray:
        """True where B^R(p, eps) lies strictly inside ``region``."""
        if not eps > 0:
            raise DomainError(f"eps must be positive, got {eps}")
        lower, upper = self.right_ball_extent(p, eps)
        return np.all((lower > region.lower) & (upper < region.upper), axis=-1)

    # ------------------------------------------------------------------ #
    # Volumes and constants
    # ------------------------------------------------------------------ #
    def unit_ball_volume(self) -> float:
        """Lebesgue measure of B(0, 1) in graded coordinates."""
        if self.kind == NormKind.BOX:
            return float(2.0 ** self.algebra.q)
        return float(np.prod([np.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0) for n in self.algebra.layer_dims]))

    def ball_volume(self, r: float) -> float:
        return self.unit_ball_volume() * float(r) ** self.algebra.hom_dimension

    def unit_ball_nodes(self, spec: QuadratureSpec, label: str = "ball") -> Tuple[np.ndarray, np.ndarray]:
        """Nodes of ``spec`` on the bounding box [-1, 1]^q kept inside B(0, 1).

        Weights are the cell volumes (box volume / samples for Monte Carlo),
        so their sum approximates the volume of the unit ball.
        """
        box = BoxRegion.cube(self.algebra.q, 1.0)
        rule = QuadratureRule(spec, box, label=label)
        nodes, weights = rule.nodes_and_weights()
        inside = self.norm(nodes) < 1.0
        if not np.any(inside):
            raise QuadratureError("no quadrature node falls inside the unit ball; raise the resolution")
        return nodes[inside], weights[inside]

    def quasi_triangle_constant(self, samples: int = 20_000, seed: int = 0, scale: float = 1.0) -> float:
        """Largest observed d(x, z) / (d(x, y) + d(y, z)) on random triples."""
        rng = generator(seed, "quasi_triangle")
        x, y, z = (scale * rng.uniform(-1.0, 1.0, (samples, self.algebra.q)) for _ in range(3))
        denom = self.dist(x, y) + self.dist(y, z)
        keep = denom > 1e-12
        ratio = self.dist(x, z)[keep] / denom[keep]
        return float(ratio.max()) if ratio.size else 1.0

    def local_comparison_constants(
        self, region: BoxRegion, samples: int = 20_000, seed: int = 0
    ) -> Tuple[float, float]:
        """Observed C with C^{-1}|x - y| <= d(x, y) <= C |x - y|^(1/step) on ``region``."""
        rng = generator(seed, "local_comparison")
        x = region.lower + rng.random((samples, region.dim)) * region.widths
        y = region.lower + rng.random((samples, region.dim)) * region.widths
        euclid = np.linalg.norm(x - y, axis=-1)
        d = self.dist(x, y)
        keep = (euclid > 1e-12) & (d > 1e-12)
        lower = float(np.max(euclid[keep] / d[keep]))
        upper = float(np.max(d[keep] / euclid[keep] ** (1.0 / self.algebra.step)))
        return lower, upper

    def describe(self) -> Dict[str, object]:
        return {"kind": self.kind.value, "unit_ball_volume": self.unit_ball_volume()}


def haar_volume_mc(
    region: BoxRegion,
    indicator: Predicate,
    samples: int,
    seed: int,
    threads: Optional[int] = None,
    label: str = "haar",
) -> Tuple[float, float]:
    """Monte Carlo estimate of the Haar (Lebesgue) measure of {indicator} in ``region``.

    Samples are drawn in blocks; block b always uses the stream (seed, label, b),
    so the estimate does not depend on the number of threads.
    """
    if samples < 1:
        raise QuadratureError("haar_volume_mc needs at least one sample")
    chunk = settings.mc_chunk
    starts = list(range(0, samples, chunk))

    def block(index: int) -> Tuple[float, float]:
        count = min(chunk, samples - starts[index])
        rng = generator(seed, label, index)
        pts = region.lower + rng.random((count, region.dim)) * region.widths
        values = np.asarray(indicator(pts), dtype=float)
        return float(values.sum()), float(np.square(values).sum())

    workers = threads or settings.threads
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partial = list(pool.map(block, range(len(starts))))
    else:
        partial = [block(i) for i in range(len(starts))]

    total = sum(s for s, _ in partial)
    total_sq = sum(s for _, s in partial)
    mean = total / samples
    variance = max(total_sq / samples - mean * mean, 0.0)
    estimate = region.volume * mean
    std_error = region.volume * np.sqrt(variance / max(samples - 1, 1))
    logger.debug("haar volume %.6g +- %.2g from %d samples", estimate, std_error, samples)
    return float(estimate), float(std_error)


def smooth_gauge_power(
    algebra: StratifiedAlgebra, points: np.ndarray, weights: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """P(x) = sum_i w_i |x^(i)|^(2 s!/i) and its coordinate gradient.

    With s the step, P is a polynomial homogeneous of degree 2 s! under
    dilations; P ** (1 / (2 s!)) is the smooth Koranyi-type gauge
    ((x^2 + y^2)^2 + z^2)^(1/4) on the first Heisenberg group.
    """
    x = np.asarray(points, dtype=float)
    top = 2 * int(np.prod(np.arange(1, algebra.step + 1)))
    w = np.ones(algebra.step) if weights is None else np.asarray(weights, dtype=float)
    starts = np.concatenate([[0], np.cumsum(algebra.layer_dims)])
    value = np.zeros(x.shape[:-1])
    grad = np.zeros(x.shape)
    for i in range(algebra.step):
        layer = slice(int(starts[i]), int(starts[i + 1]))
        power = top // (i + 1)
        sq = np.sum(x[..., layer] ** 2, axis=-1)
        value = value + w[i] * sq ** (power // 2)
        grad[..., layer] = (w[i] * power * sq ** (power // 2 - 1))[..., None] * x[..., layer]
    return value, grad

"""Volume quadrature rules over axis-aligned boxes.

Nodes are produced block by block so that fine tensor grids in five
dimensions never have to be materialised at once.
"""

from __future__ import annotations

from typing import Callable, Iterator, List, Optional, Tuple, Union

import numpy as np

from .config import settings
from .errors import QuadratureError
from .models import BoxRegion, QuadratureKind, QuadratureSpec, ScalarField
from .utils.seeding import generator

Integrand = Union[ScalarField, Callable[[np.ndarray], np.ndarray]]


def midpoint_axis(lower: float, upper: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    h = (upper - lower) / n
    return lower + (np.arange(n) + 0.5) * h, np.full(n, h)


def gauss_legendre_axis(lower: float, upper: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (upper - lower)
    return 0.5 * (upper + lower) + half * x, half * w


class QuadratureRule:
    """Weighted nodes of one :class:`QuadratureSpec` on a concrete box."""

    def __init__(self, spec: QuadratureSpec, region: Optional[BoxRegion] = None, label: str = "quadrature") -> None:
        region = region or spec.region
        if region is None:
            raise QuadratureError("quadrature needs a region (none on the QuadratureSpec and none supplied)")
        self.spec = spec
        self.region = region
        self.label = label
        self._axes: List[np.ndarray] = []
        self._axis_weights: List[np.ndarray] = []
        if spec.kind == QuadratureKind.MONTE_CARLO:
            self.size = int(spec.samples)  # type: ignore[arg-type]
        else:
            builder = midpoint_axis if spec.kind == QuadratureKind.TENSOR_GRID else gauss_legendre_axis
            for lo, hi, n in zip(region.lower, region.upper, spec.axis_resolution(region.dim)):
                nodes, weights = builder(float(lo), float(hi), n)
                self._axes.append(nodes)
                self._axis_weights.append(weights)
            self.size = int(np.prod([len(a) for a in self._axes]))

    @property
    def dim(self) -> int:
        return self.region.dim

    def __len__(self) -> int:
        return self.size

    def blocks(self, chunk: Optional[int] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Yield (nodes, weights) pairs covering the whole rule exactly once."""
        chunk = int(chunk or settings.mc_chunk)
        if self.spec.kind == QuadratureKind.MONTE_CARLO:
            weight = self.region.volume / self.size
            for block, start in enumerate(range(0, self.size, chunk)):
                count = min(chunk, self.size - start)
                rng = generator(self.spec.seed, self.label, block)
                nodes = self.region.lower + rng.random((count, self.dim)) * self.region.widths
                yield nodes, np.full(count, weight)
            return
        shape = tuple(len(a) for a in self._axes)
        for start in range(0, self.size, chunk):
            flat = np.arange(start, min(start + chunk, self.size))
            index = np.unravel_index(flat, shape)
            nodes = np.stack([axis[i] for axis, i in zip(self._axes, index)], axis=-1)
            weights = np.ones(flat.shape[0])
            for axis_w, i in zip(self._axis_weights, index):
                weights = weights * axis_w[i]
            yield nodes, weights

    def nodes_and_weights(self) -> Tuple[np.ndarray, np.ndarray]:
        parts = list(self.blocks())
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def integrate(self, fn: Integrand) -> Union[float, np.ndarray]:
        """Sum of weight * fn(node); fn may return (N,) or (N, k) values."""
        total: Union[float, np.ndarray] = 0.0
        for nodes, weights in self.blocks():
            values = np.asarray(fn(nodes), dtype=float)
            if values.ndim == 0:
                values = np.full(weights.shape[0], float(values))
            total = total + np.tensordot(weights, values, axes=(0, 0))
        if np.ndim(total) == 0:
            return float(total)
        return np.asarray(total)

    def describe(self) -> dict:
        payload = self.spec.describe()
        payload["region"] = self.region.to_dict()
        payload["nodes"] = self.size
        return payload


def integrate(fn: Integrand, spec: QuadratureSpec, region: Optional[BoxRegion] = None) -> Union[float, np.ndarray]:
    return QuadratureRule(spec, region).integrate(fn)

"""Stratified Lie algebras and the group law they induce in graded coordinates.

Points of the group are identified with their exponential coordinates, so the
group law is the Baker-Campbell-Hausdorff series of the algebra. Brackets of
more than ``step`` elements vanish, hence truncating the series at weight four
is exact for every algebra of step <= 4.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
import yaml

from .config import settings
from .errors import AlgebraError, DomainError, ShapeError, UnsupportedStepError
from .models import GroupPoint, PointLike
from .polynomials import PolynomialTable
from .utils.logging_utils import get_logger

logger = get_logger(__name__)

Term = Tuple[int, int, int, Any]


class AlgebraAssumptionWarning(UserWarning):
    """An algebra property that the library relies on is not satisfied or not checked."""


ALGEBRA_PRESETS: Dict[str, Dict[str, Any]] = {
    # [e1, e2] = 2 e3 gives the frame X1 = d1 - y d3, X2 = d2 + x d3.
    "heisenberg1": {
        "step": 2,
        "layer_dims": [2, 1],
        "brackets": [{"i": 1, "j": 2, "coeffs": {3: 2.0}}],
        "coordinate_names": ["x", "y", "z"],
    },
    # coordinates (x1, x2, y1, y2, t)
    "heisenberg2": {
        "step": 2,
        "layer_dims": [4, 1],
        "brackets": [
            {"i": 1, "j": 3, "coeffs": {5: 2.0}},
            {"i": 2, "j": 4, "coeffs": {5: 2.0}},
        ],
    },
    "engel": {
        "step": 3,
        "layer_dims": [2, 1, 1],
        "brackets": [
            {"i": 1, "j": 2, "coeffs": {3: 1.0}},
            {"i": 1, "j": 3, "coeffs": {4: 1.0}},
        ],
    },
}


class StratifiedAlgebra:
    """Stratified algebra V_1 + ... + V_step with a fixed graded basis e_1..e_q.

    ``structure_constants[i, j, k]`` is the coefficient of e_k in [e_i, e_j]
    (zero-based). Antisymmetry and the grading are validated; the Jacobi
    identity and generativity of V_1 are assumed, and a missing generativity
    only produces an :class:`AlgebraAssumptionWarning`.
    """

    def __init__(
        self,
        layer_dims: Sequence[int],
        structure_constants: np.ndarray,
        name: str = "custom",
        coordinate_names: Optional[Sequence[str]] = None,
    ) -> None:
        dims = tuple(int(d) for d in layer_dims)
        if not dims or any(d < 1 for d in dims):
            raise AlgebraError(f"layer_dims must be positive integers, got {list(layer_dims)}")
        q = sum(dims)
        table = np.asarray(structure_constants, dtype=float)
        if table.shape != (q, q, q):
            raise AlgebraError(f"structure constants must have shape {(q, q, q)}, got {table.shape}")

        self.name = name
        self.layer_dims = dims
        self.step = len(dims)
        self.m = dims[0]
        self.q = q
        self.degrees = np.repeat(np.arange(1, self.step + 1), dims)
        self.hom_dimension = int(self.degrees.sum())
        self.structure_constants = table
        self.structure_constants.setflags(write=False)
        self.degrees.setflags(write=False)

        self._validate()
        self._terms: List[Term] = [
            (int(i), int(j), int(k), float(table[i, j, k])) for i, j, k in zip(*np.nonzero(table))
        ]
        self._exact_terms: List[Term] = [
            (i, j, k, sympy.nsimplify(c, rational=True)) for i, j, k, c in self._terms
        ]

        names = list(coordinate_names) if coordinate_names else [f"x{j + 1}" for j in range(q)]
        if len(names) != q:
            raise AlgebraError(f"expected {q} coordinate names, got {len(names)}")
        self.coordinate_names = tuple(names)
        self.symbols = tuple(sympy.Symbol(n, real=True) for n in names)

        defect = self.generativity_defect()
        if defect:
            message = (
                f"algebra '{name}': layers {defect} are not generated by brackets with V_1; "
                "results assume a stratification"
            )
            logger.warning(message)
            warnings.warn(message, AlgebraAssumptionWarning, stacklevel=2)

        self._frame_table: Optional[PolynomialTable] = None
        self._product_table: Optional[PolynomialTable] = None
        self.frame_expressions: Optional[sympy.Matrix] = None
        if self.step <= settings.bch_max_step:
            self._build_tables()
        logger.debug("algebra %s: layer_dims=%s Q=%d terms=%d", name, dims, self.hom_dimension, len(self._terms))

    # ------------------------------------------------------------------ #
    # Construction helpers
    # ------------------------------------------------------------------ #
    @classmethod
    def from_config(cls, payload: Mapping[str, Any], name: str = "custom") -> "StratifiedAlgebra":
        """Build from the configuration tree ``{step, layer_dims, brackets}``.

        Bracket indices are one-based, ``{i: 1, j: 2, coeffs: {3: 2.0}}`` reads
        [e1, e2] = 2 e3. The antisymmetric partner is filled in automatically.
        """
        if not isinstance(payload, Mapping):
            raise AlgebraError("algebra definition must be a mapping")
        try:
            layer_dims = [int(d) for d in payload["layer_dims"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise AlgebraError("layer_dims must be a list of integers") from exc
        step = int(payload.get("step", len(layer_dims)))
        if step != len(layer_dims):
            raise AlgebraError(f"step {step} does not match {len(layer_dims)} layers")
        q = sum(layer_dims)
        table = np.zeros((q, q, q))
        for index, entry in enumerate(payload.get("brackets", []) or []):
            try:
                i = int(entry["i"]) - 1
                j = int(entry["j"]) - 1
                coeffs = {int(k) - 1: float(v) for k, v in dict(entry["coeffs"]).items()}
            except (KeyError, TypeError, ValueError) as exc:
                raise AlgebraError(f"brackets[{index}] needs integer i, j and a coeffs mapping") from exc
            for k, value in coeffs.items():
                if not (0 <= i < q and 0 <= j < q and 0 <= k < q):
                    raise AlgebraError(f"brackets[{index}] refers to a basis index outside 1..{q}")
                if i == j and value != 0.0:
                    raise AlgebraError(f"brackets[{index}]: [e{i + 1}, e{i + 1}] must vanish")
                table[i, j, k] = value
                table[j, i, k] = -value
        return cls(layer_dims, table, name=name, coordinate_names=payload.get("coordinate_names"))

    def _validate(self) -> None:
        c = self.structure_constants
        if not np.allclose(c, -np.transpose(c, (1, 0, 2)), atol=1e-12, rtol=0.0):
            raise AlgebraError(f"algebra '{self.name}': structure constants are not antisymmetric")
        d = self.degrees
        expected = d[:, None, None] + d[None, :, None]
        bad = (np.abs(c) > 0.0) & (expected != d[None, None, :])
        if np.any(bad):
            i, j, k = (int(v) for v in np.argwhere(bad)[0])
            raise AlgebraError(
                f"algebra '{self.name}': [e{i + 1}, e{j + 1}] has a component on e{k + 1}, "
                f"which breaks the grading (degrees {d[i]} + {d[j]} != {d[k]})"
            )

    def _build_tables(self) -> None:
        half, twelfth, twentyfourth = sympy.Rational(1, 2), sympy.Rational(1, 12), sympy.Rational(1, 24)
        x = np.array(self.symbols, dtype=object)
        t = sympy.Symbol("t", real=True)
        rows = []
        for j in range(self.m):
            y = np.array([sympy.Integer(0)] * self.q, dtype=object)
            y[j] = t
            z = self._bch(x, y, self._exact_terms, half, twelfth, twentyfourth)
            rows.append([sympy.expand(sympy.diff(zk, t).subs(t, 0)) for zk in z])
        self.frame_expressions = sympy.Matrix(rows)
        self._frame_table = PolynomialTable.from_expressions(
            [entry for row in rows for entry in row], self.symbols
        )

        left = sympy.symbols(f"u1:{self.q + 1}", real=True)
        right = sympy.symbols(f"v1:{self.q + 1}", real=True)
        z = self._bch(
            np.array(left, dtype=object), np.array(right, dtype=object), self._exact_terms, half, twelfth, twentyfourth
        )
        self._product_table = PolynomialTable.from_expressions(list(z), list(left) + list(right))

    # ------------------------------------------------------------------ #
    # Algebra
    # ------------------------------------------------------------------ #
    @staticmethod
    def _bracket(x: np.ndarray, y: np.ndarray, terms: Sequence[Term]) -> np.ndarray:
        shape = np.broadcast_shapes(x.shape, y.shape)
        out = np.zeros(shape, dtype=np.result_type(x, y, float))
        if out.dtype == object:
            out[...] = sympy.Integer(0)
        for i, j, k, c in terms:
            out[..., k] = out[..., k] + (x[..., i] * y[..., j]) * c
        return out

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Lie bracket of algebra elements given by coordinates (..., q)."""
        return self._bracket(np.asarray(x, dtype=float), np.asarray(y, dtype=float), self._terms)

    def _bch(self, x, y, terms, half, twelfth, twentyfourth):
        xy = self._bracket(x, y, terms)
        z = x + y + xy * half
        if self.step >= 3:
            z = z + (self._bracket(x, xy, terms) - self._bracket(y, xy, terms)) * twelfth
        if self.step >= 4:
            z = z - self._bracket(y, self._bracket(x, xy, terms), terms) * twentyfourth
        return z

    def coords(self, p: PointLike) -> np.ndarray:
        """Validate a point (or stack of points) and return its coordinate array."""
        arr = np.asarray(p.coords if isinstance(p, GroupPoint) else p, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.q:
            raise ShapeError(f"algebra '{self.name}' expects points with {self.q} coordinates, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ShapeError("points must have finite coordinates")
        return arr

    def point(self, *coords: float) -> GroupPoint:
        values = coords[0] if len(coords) == 1 and np.ndim(coords[0]) == 1 else coords
        return GroupPoint(self.coords(np.asarray(values, dtype=float)))

    @property
    def identity(self) -> np.ndarray:
        return np.zeros(self.q)

    def _require_supported_step(self) -> None:
        if self.step > settings.bch_max_step:
            raise UnsupportedStepError(
                f"algebra '{self.name}' has step {self.step}; the BCH series is implemented through "
                f"order {settings.bch_max_step}"
            )

    def group_product(self, p: PointLike, q: PointLike) -> np.ndarray:
        """Exponential coordinates of p . q (broadcasts over leading axes)."""
        self._require_supported_step()
        return self._bch(self.coords(p), self.coords(q), self._terms, 0.5, 1.0 / 12.0, 1.0 / 24.0)

    def group_inverse(self, p: PointLike) -> np.ndarray:
        return -self.coords(p)

    def dilate(self, r: float, p: PointLike) -> np.ndarray:
        """Intrinsic dilation: coordinate j is multiplied by r ** d_j."""
        if not r > 0:
            raise DomainError(f"dilation factor must be positive, got {r}")
        return self.coords(p) * float(r) ** self.degrees

    def frame_coefficients(self, p: PointLike) -> np.ndarray:
        """Coordinates of X_1(p)..X_m(p) as an (..., m, q) array."""
        self._require_supported_step()
        pts = self.coords(p)
        values = self._frame_table.evaluate(pts)  # type: ignore[union-attr]
        return values.reshape(pts.shape[:-1] + (self.m, self.q))

    @property
    def product_table(self) -> PolynomialTable:
        self._require_supported_step()
        return self._product_table  # type: ignore[return-value]

    def exp_horizontal(self, j: int, t: Union[float, np.ndarray]) -> np.ndarray:
        """Coordinates of exp(t e_j) for a horizontal index j (zero-based)."""
        if not 0 <= j < self.m:
            raise ShapeError(f"horizontal index {j} outside 0..{self.m - 1}")
        t_arr = np.asarray(t, dtype=float)
        out = np.zeros(t_arr.shape + (self.q,))
        out[..., j] = t_arr
        return out

    # ------------------------------------------------------------------ #
    # Diagnostics
    # ------------------------------------------------------------------ #
    def jacobi_residual(self) -> float:
        c = self.structure_constants
        # [e_i, [e_j, e_k]] = sum_l c[j,k,l] c[i,l,:]
        nested = np.einsum("jkl,ilm->ijkm", c, c)
        cyclic = nested + np.transpose(nested, (1, 2, 0, 3)) + np.transpose(nested, (2, 0, 1, 3))
        return float(np.max(np.abs(cyclic))) if cyclic.size else 0.0

    def generativity_defect(self) -> List[int]:
        """One-based layer indices l + 1 for which [V_1, V_l] does not span V_{l+1}."""
        defect: List[int] = []
        c = self.structure_constants
        starts = np.concatenate([[0], np.cumsum(self.layer_dims)])
        first = range(starts[0], starts[1])
        for layer in range(1, self.step):
            current = range(starts[layer - 1], starts[layer])
            target = slice(starts[layer], starts[layer + 1])
            vectors = [c[i, j, target] for i in first for j in current]
            rank = np.linalg.matrix_rank(np.array(vectors)) if vectors else 0
            if rank < self.layer_dims[layer]:
                defect.append(layer + 1)
        return defect

    def bracket_lines(self) -> List[str]:
        lines: List[str] = []
        for i, j in combinations(range(self.q), 2):
            parts = []
            for k in range(self.q):
                value = self.structure_constants[i, j, k]
                if value != 0.0:
                    coef = sympy.nsimplify(value, rational=True)
                    parts.append(f"{coef}*e{k + 1}" if coef != 1 else f"e{k + 1}")
            if parts:
                lines.append(f"[e{i + 1},e{j + 1}] = " + " + ".join(parts))
        return lines

    def frame_rows(self) -> List[str]:
        if self.frame_expressions is None:
            return []
        rows = []
        for j in range(self.m):
            entries = [str(self.frame_expressions[j, i]).replace(" ", "") for i in range(self.q)]
            rows.append("(" + ",".join(entries) + ")")
        return rows

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "step": self.step,
            "layer_dims": list(self.layer_dims),
            "m": self.m,
            "q": self.q,
            "Q": self.hom_dimension,
            "coordinates": list(self.coordinate_names),
            "brackets": self.bracket_lines(),
            "frame": self.frame_rows(),
        }

    def __repr__(self) -> str:
        return f"StratifiedAlgebra(name={self.name!r}, layer_dims={self.layer_dims}, Q={self.hom_dimension})"


@lru_cache(maxsize=None)
def load_preset(name: str) -> StratifiedAlgebra:
    """Shipped algebra by name (``heisenberg1``, ``heisenberg2``, ``engel``)."""
    from .errors import PresetNotFoundError

    if name not in ALGEBRA_PRESETS:
        raise PresetNotFoundError(f"unknown group preset '{name}'; known: {sorted(ALGEBRA_PRESETS)}", path="group")
    return StratifiedAlgebra.from_config(ALGEBRA_PRESETS[name], name=name)


def load_algebra_file(path: Union[str, Path]) -> Dict[str, StratifiedAlgebra]:
    """Read a YAML mapping ``name -> {step, layer_dims, brackets}``."""
    with Path(path).open("r", encoding="utf-8") as handle:
        payload = yaml.safe_load(handle) or {}
    if not isinstance(payload, dict):
        raise AlgebraError(f"{path}: expected a mapping of algebra names")
    return {str(name): StratifiedAlgebra.from_config(spec, name=str(name)) for name, spec in payload.items()}


def preset_names() -> List[str]:
    return sorted(ALGEBRA_PRESETS)

"""Arithmetic expression grammar for custom level sets and fields.

Grammar: numbers, ``+ - * /``, ``^`` (or ``**``) for powers, parentheses,
the functions ``sin cos tan exp log sqrt abs`` and the constant ``pi``.
Variables are the coordinate names of the algebra (for ``heisenberg1``:
``x y z``) and, for every algebra, the aliases ``x1 .. xq``.
"""

from __future__ import annotations

from tokenize import TokenError
from typing import Callable, Dict, List, Sequence

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .algebra import StratifiedAlgebra
from .errors import ConfigError
from .models import HorizontalField, ScalarField

_TRANSFORMS = standard_transformations + (convert_xor,)
_FUNCTIONS: Dict[str, object] = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
    "abs": sympy.Abs,
    "pi": sympy.pi,
}


def _namespace(algebra: StratifiedAlgebra) -> Dict[str, object]:
    names: Dict[str, object] = dict(_FUNCTIONS)
    for index, symbol in enumerate(algebra.symbols):
        names[f"x{index + 1}"] = symbol
        names[algebra.coordinate_names[index]] = symbol
    return names


def parse_expression(text: str, algebra: StratifiedAlgebra, path: str = "expr") -> sympy.Expr:
    """Parse ``text`` into a sympy expression in the algebra's coordinates."""
    if not isinstance(text, (str, int, float)):
        raise ConfigError(f"expected an expression string, got {type(text).__name__}", path=path)
    try:
        expr = parse_expr(str(text), local_dict=_namespace(algebra), transformations=_TRANSFORMS, evaluate=True)
    except (SyntaxError, TokenError, TypeError, ValueError, sympy.SympifyError) as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc}", path=path) from exc
    if not isinstance(expr, sympy.Expr):
        raise ConfigError(f"expression {text!r} is not arithmetic", path=path)
    unknown = expr.free_symbols - set(algebra.symbols)
    if unknown:
        names = ", ".join(sorted(str(s) for s in unknown))
        raise ConfigError(
            f"unknown variable(s) {names} in {text!r}; use {', '.join(algebra.coordinate_names)} or x1..x{algebra.q}",
            path=path,
        )
    return expr


def vectorize(expr: sympy.Expr, symbols: Sequence[sympy.Symbol]) -> Callable[[np.ndarray], np.ndarray]:
    """numpy callable (N, q) -> (N,) for ``expr``."""
    fn = sympy.lambdify(list(symbols), expr, modules="numpy")

    def evaluate(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        values = np.asarray(fn(*pts.T), dtype=float)
        return np.broadcast_to(values, pts.shape[:1]).copy()

    return evaluate


def vectorize_many(exprs: Sequence[sympy.Expr], symbols: Sequence[sympy.Symbol]) -> Callable[[np.ndarray], np.ndarray]:
    """numpy callable (N, q) -> (N, len(exprs))."""
    parts = [vectorize(e, symbols) for e in exprs]

    def evaluate(points: np.ndarray) -> np.ndarray:
        return np.stack([part(points) for part in parts], axis=-1)

    return evaluate


def apply_frame(algebra: StratifiedAlgebra, expr: sympy.Expr, j: int) -> sympy.Expr:
    """Symbolic X_j expr = sum_i a_j^i d_i expr."""
    frame = algebra.frame_expressions
    return sympy.expand(sum(frame[j, i] * sympy.diff(expr, s) for i, s in enumerate(algebra.symbols)))


def symbolic_scalar_field(algebra: StratifiedAlgebra, expr: sympy.Expr, name: str = "expr") -> ScalarField:
    """Scalar field with analytic horizontal and Euclidean gradients and sub-Laplacian."""
    symbols = algebra.symbols
    horizontal = [apply_frame(algebra, expr, j) for j in range(algebra.m)]
    euclid = [sympy.diff(expr, s) for s in symbols]
    sublap = sum((apply_frame(algebra, h, j) for j, h in enumerate(horizontal)), sympy.Integer(0))
    smooth = not expr.has(sympy.Abs)
    return ScalarField(
        eval=vectorize(expr, symbols),
        gradient=vectorize_many(horizontal, symbols) if smooth else None,
        euclidean_gradient=vectorize_many(euclid, symbols) if smooth else None,
        sublaplacian=vectorize(sympy.expand(sublap), symbols) if smooth else None,
        smoothness="C2" if smooth else "Lip",
        name=name,
    )


def symbolic_horizontal_field(
    algebra: StratifiedAlgebra, exprs: Sequence[sympy.Expr], name: str = "poly", bound: float | None = None
) -> HorizontalField:
    """F = sum_j exprs[j] X_j with its symbolic divergence sum_j X_j exprs[j]."""
    if len(exprs) != algebra.m:
        raise ConfigError(f"horizontal field needs {algebra.m} coefficients, got {len(exprs)}", path="field.coeffs")
    divergence = sympy.expand(sum((apply_frame(algebra, e, j) for j, e in enumerate(exprs)), sympy.Integer(0)))
    return HorizontalField(
        coeffs=vectorize_many(list(exprs), algebra.symbols),
        divergence=vectorize(divergence, algebra.symbols),
        bound=bound,
        name=name,
    )


def parse_many(texts: Sequence[str], algebra: StratifiedAlgebra, path: str) -> List[sympy.Expr]:
    return [parse_expression(t, algebra, path=f"{path}[{i}]") for i, t in enumerate(texts)]

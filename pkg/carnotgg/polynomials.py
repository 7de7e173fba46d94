"""Sparse polynomial tables evaluated with numpy.

A table is built once from sympy expressions and afterwards evaluated on
(N, n_vars) arrays without touching sympy again.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import sympy


@dataclass(frozen=True)
class PolynomialTable:
    """Polynomials P_0..P_{K-1} in ``n_vars`` variables.

    Component k is sum_t coefs[k][t] * prod_i x_i ** exponents[k][t, i].
    """

    n_vars: int
    exponents: Tuple[np.ndarray, ...]
    coefs: Tuple[np.ndarray, ...]
    expressions: Tuple[sympy.Expr, ...]

    @classmethod
    def from_expressions(cls, expressions: Sequence[sympy.Expr], symbols: Sequence[sympy.Symbol]) -> "PolynomialTable":
        exps: List[np.ndarray] = []
        coefs: List[np.ndarray] = []
        cleaned: List[sympy.Expr] = []
        for expr in expressions:
            expr = sympy.expand(expr)
            cleaned.append(expr)
            poly = sympy.Poly(expr, *symbols)
            terms = [(monom, coef) for monom, coef in poly.terms() if coef != 0]
            if terms:
                exps.append(np.array([monom for monom, _ in terms], dtype=np.int64))
                coefs.append(np.array([float(coef) for _, coef in terms], dtype=float))
            else:
                exps.append(np.zeros((0, len(symbols)), dtype=np.int64))
                coefs.append(np.zeros(0, dtype=float))
        return cls(len(symbols), tuple(exps), tuple(coefs), tuple(cleaned))

    def __len__(self) -> int:
        return len(self.coefs)

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        """Evaluate every component on an (N, n_vars) array; returns (N, K)."""
        vals = np.asarray(values, dtype=float)
        flat = vals.reshape(-1, self.n_vars)
        out = np.zeros((flat.shape[0], len(self)), dtype=float)
        for k, (exps, coefs) in enumerate(zip(self.exponents, self.coefs)):
            if coefs.size == 0:
                continue
            out[:, k] = monomials(flat, exps) @ coefs
        return out.reshape(vals.shape[:-1] + (len(self),))


def monomials(values: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Evaluate the monomials x**exponents[t] for every row; returns (N, T)."""
    result = np.ones((values.shape[0], exponents.shape[0]), dtype=float)
    for i in range(exponents.shape[1]):
        column = exponents[:, i]
        if not np.any(column):
            continue
        result *= values[:, i : i + 1] ** column[None, :]
    return result

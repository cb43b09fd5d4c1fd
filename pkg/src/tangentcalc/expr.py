"""Smooth maps given as arithmetic expression strings.

The grammar is deliberately small: numbers, variable names, ``+ - * /``,
``**`` (``^`` is accepted as a synonym), parentheses and the functions
``abs``, ``min``, ``max``, ``sqrt``, ``exp``, ``log``, ``sin``, ``cos``.
Parsing and exact differentiation are delegated to sympy; evaluation goes
through ``lambdify`` so repeated calls stay cheap.
"""
from __future__ import annotations

import re
from functools import cached_property
from typing import Sequence

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

_ALLOWED_FUNCS = {
    "abs": sp.Abs,
    "min": sp.Min,
    "max": sp.Max,
    "sqrt": sp.sqrt,
    "exp": sp.exp,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    # sympy's printed names, so composed expressions round-trip through str()
    "Abs": sp.Abs,
    "Min": sp.Min,
    "Max": sp.Max,
}
_TOKEN = re.compile(r"(?<![0-9.])[A-Za-z_][A-Za-z_0-9]*")


class ExpressionError(ValueError):
    """Raised for expression strings outside the supported grammar."""


def parse(text: str, variables: Sequence[str]) -> sp.Expr:
    """Parse ``text`` into a sympy expression over ``variables``."""
    if not isinstance(text, str):
        text = str(text)
    names = set(variables)
    for tok in _TOKEN.findall(text):
        if tok not in names and tok not in _ALLOWED_FUNCS:
            raise ExpressionError(f"unknown name {tok!r} in {text!r}")
    local = {v: sp.Symbol(v, real=True) for v in variables}
    local.update(_ALLOWED_FUNCS)
    try:
        out = parse_expr(text.replace("^", "**"), local_dict=local,
                         global_dict={"Integer": sp.Integer, "Float": sp.Float,
                                      "Rational": sp.Rational, "Symbol": sp.Symbol},
                         transformations=standard_transformations,
                         evaluate=True)
    except Exception as exc:  # sympy raises a zoo of exception types
        raise ExpressionError(f"cannot parse {text!r}: {exc}") from exc
    return sp.sympify(out)


class SmoothMap:
    """Vector-valued map ``R^n -> R^m`` with exact first and second derivatives.

    Parameters
    ----------
    exprs : str or list of str
        One expression per output component.
    variables : list of str
        Input variable names, in coordinate order.
    """

    def __init__(self, exprs, variables: Sequence[str]):
        if isinstance(exprs, str):
            exprs = [exprs]
        self.texts = [str(e) for e in exprs]
        self.variables = list(variables)
        self.symbols = [sp.Symbol(v, real=True) for v in self.variables]
        self.exprs = [parse(e, self.variables) for e in self.texts]
        self._f = sp.lambdify(self.symbols, self.exprs, modules="numpy")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.exprs)

    def __repr__(self):
        return f"SmoothMap({self.texts!r}, {self.variables!r})"

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.asarray(self._f(*x), dtype=float).reshape(self.m)

    @cached_property
    def _jac_exprs(self):
        return [[sp.diff(e, s) for s in self.symbols] for e in self.exprs]

    @cached_property
    def _jac(self):
        return sp.lambdify(self.symbols, self._jac_exprs, modules="numpy")

    @cached_property
    def _hess(self):
        hs = [[[sp.diff(g, s) for s in self.symbols] for g in row]
              for row in self._jac_exprs]
        return sp.lambdify(self.symbols, hs, modules="numpy")

    def jacobian(self, x) -> np.ndarray:
        """Jacobian matrix, shape ``(m, n)``."""
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.asarray(self._jac(*x), dtype=float).reshape(self.m, self.n)

    def hessian(self, x) -> np.ndarray:
        """Second derivatives, shape ``(m, n, n)``."""
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.asarray(self._hess(*x), dtype=float).reshape(self.m, self.n, self.n)

    def second_order_term(self, x, d) -> np.ndarray:
        """``f''(x)(d, d)`` as a vector of length ``m``."""
        d = np.asarray(d, dtype=float)
        return np.einsum("kij,i,j->k", self.hessian(x), d, d)

    @cached_property
    def is_affine(self) -> bool:
        for e in self.exprs:
            if not e.is_polynomial(*self.symbols):
                return False
            if sp.Poly(e, *self.symbols).total_degree() > 1:
                return False
        return True

    @cached_property
    def is_polynomial(self) -> bool:
        return all(e.is_polynomial(*self.symbols) for e in self.exprs)

    def affine_parts(self):
        """Return ``(J, c)`` with ``f(x) = J x + c``; requires :attr:`is_affine`."""
        if not self.is_affine:
            raise ValueError(f"{self!r} is not affine")
        zero = np.zeros(self.n)
        return self.jacobian(zero), self(zero)

    def scaled(self, factor: float) -> "SmoothMap":
        return SmoothMap([f"({factor!r})*({t})" for t in self.texts], self.variables)

    def to_dict(self):
        return {"expr": list(self.texts), "vars": list(self.variables)}


def identity_map(n: int, prefix: str = "x") -> SmoothMap:
    names = [f"{prefix}{i}" for i in range(n)]
    return SmoothMap(names, names)


def scalar_polynomial(text: str, var: str = "s") -> np.polynomial.Polynomial | None:
    """Coefficients of a univariate polynomial expression, or ``None``."""
    e = parse(text, [var])
    sym = sp.Symbol(var, real=True)
    if not e.is_polynomial(sym):
        return None
    coeffs = sp.Poly(e, sym).all_coeffs()[::-1]
    return np.polynomial.Polynomial([float(c) for c in coeffs])

"""Tiny arithmetic-expression language with forward-mode derivatives.

Grammar (usual precedence, ``^`` binds tightest and is right associative,
unary minus binds looser than ``^`` so ``-x1^2 == -(x1^2)``)::

    expr    := expr ('+' | '-') expr | expr ('*' | '/') expr
             | expr '^' expr | '-' expr | '+' expr | '(' expr ')'
             | NUMBER | VARIABLE | FUNC '(' expr ')'
    VARIABLE:= 'x1' | 'x2' | ... | 'x<n>'
    FUNC    := 'sin' | 'cos' | 'exp' | 'log' | 'sqrt'
    NUMBER  := decimal literal, optional exponent (1e-3)

The constant ``pi`` is also available. Anything else (attribute access,
keyword arguments, comparison, other names) is rejected with ``ParseError``.
"""
from __future__ import annotations

import ast
import math
import re
from typing import Callable, Tuple

import numpy as np

from .errors import ParseError

__all__ = ["Expression", "parse_expression"]

_VAR = re.compile(r"x([1-9][0-9]*)\Z")

# value and derivative of each elementary function
_FUNCS = {
    "sin": (math.sin, math.cos),
    "cos": (math.cos, lambda t: -math.sin(t)),
    "exp": (math.exp, math.exp),
    "log": (math.log, lambda t: 1.0 / t),
    "sqrt": (math.sqrt, lambda t: 0.5 / math.sqrt(t)),
}
_CONSTS = {"pi": math.pi}

# a compiled node maps x to (value, gradient or None for constants)
Node = Callable[[np.ndarray], Tuple[float, object]]


def _const(val: float) -> Node:
    return lambda x: (val, None)


def _var(i: int, n: int) -> Node:
    e = np.zeros(n)
    e[i] = 1.0
    return lambda x: (float(x[i]), e)


def _add(a, b, sign):
    def node(x):
        va, da = a(x)
        vb, db = b(x)
        if db is None:
            d = da
        elif da is None:
            d = sign * db
        else:
            d = da + sign * db
        return va + sign * vb, d
    return node


def _mul(a, b):
    def node(x):
        va, da = a(x)
        vb, db = b(x)
        d = None
        if da is not None:
            d = vb * da
        if db is not None:
            d = va * db if d is None else d + va * db
        return va * vb, d
    return node


def _div(a, b):
    def node(x):
        va, da = a(x)
        vb, db = b(x)
        val = va / vb
        d = None
        if da is not None:
            d = da / vb
        if db is not None:
            t = (-val / vb) * db
            d = t if d is None else d + t
        return val, d
    return node


def _pow(a, b):
    def node(x):
        va, da = a(x)
        vb, db = b(x)
        val = va ** vb
        if isinstance(val, complex):
            raise ValueError("negative base with fractional exponent")
        d = None
        if da is not None:
            d = (vb * va ** (vb - 1)) * da if vb != 0 else 0.0 * da
        if db is not None:
            t = (val * math.log(va)) * db
            d = t if d is None else d + t
        return val, d
    return node


def _neg(a):
    def node(x):
        va, da = a(x)
        return -va, (None if da is None else -da)
    return node


def _call(fname, a):
    fn, dfn = _FUNCS[fname]

    def node(x):
        va, da = a(x)
        return fn(va), (None if da is None else dfn(va) * da)
    return node


class _Compiler:
    def __init__(self, n: int, source: str):
        self.n = n
        self.source = source

    def fail(self, msg):
        raise ParseError(f"{msg} in expression {self.source!r}")

    def compile(self, node) -> Node:
        if isinstance(node, ast.Expression):
            return self.compile(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                self.fail(f"unsupported literal {node.value!r}")
            return _const(float(node.value))
        if isinstance(node, ast.Name):
            if node.id in _CONSTS:
                return _const(_CONSTS[node.id])
            m = _VAR.match(node.id)
            if not m:
                self.fail(f"unknown name {node.id!r}")
            i = int(m.group(1))
            if i > self.n:
                self.fail(f"variable {node.id} exceeds n={self.n}")
            return _var(i - 1, self.n)
        if isinstance(node, ast.UnaryOp):
            inner = self.compile(node.operand)
            if isinstance(node.op, ast.USub):
                return _neg(inner)
            if isinstance(node.op, ast.UAdd):
                return inner
            self.fail("unsupported unary operator")
        if isinstance(node, ast.BinOp):
            a, b = self.compile(node.left), self.compile(node.right)
            op = node.op
            if isinstance(op, ast.Add):
                return _add(a, b, 1.0)
            if isinstance(op, ast.Sub):
                return _add(a, b, -1.0)
            if isinstance(op, ast.Mult):
                return _mul(a, b)
            if isinstance(op, ast.Div):
                return _div(a, b)
            if isinstance(op, ast.Pow):
                return _pow(a, b)
            self.fail("unsupported binary operator")
        if isinstance(node, ast.Call):
            if (not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS
                    or node.keywords or len(node.args) != 1):
                self.fail("unsupported function call")
            return _call(node.func.id, self.compile(node.args[0]))
        self.fail(f"unsupported syntax {type(node).__name__}")


class Expression:
    """A parsed scalar expression in ``x1..xn``."""

    def __init__(self, source: str, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        if "**" in source:
            raise ParseError(f"use '^' for powers in expression {source!r}")
        self.source = source
        self.n = n
        try:
            tree = ast.parse(source.strip().replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ParseError(f"syntax error in expression {source!r}: {exc.msg}") from None
        self._node = _Compiler(n, source).compile(tree)

    def value_and_grad(self, x) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        try:
            val, d = self._node(x)
        except (ValueError, ZeroDivisionError, OverflowError):
            # outside the domain (log of a negative, 0^-1, ...): report NaN
            return math.nan, np.full(self.n, math.nan)
        grad = np.zeros(self.n) if d is None else np.array(d, dtype=float)
        return float(val), grad

    def __call__(self, x) -> float:
        return self.value_and_grad(x)[0]

    def grad(self, x) -> np.ndarray:
        return self.value_and_grad(x)[1]

    def __repr__(self):
        return f"Expression({self.source!r}, n={self.n})"


def parse_expression(source: str, n: int) -> Expression:
    return Expression(source, n)

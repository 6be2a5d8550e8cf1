"""Declarative text format for user-defined problems.

A file holds one or more problems separated by lines consisting of ``---``.
Each problem is a list of ``key: value`` lines; ``#`` starts a comment::

    name: circle-text
    n: 2
    x0: 1, 1
    f: x1
    c: x1^2 + x2^2 - 4
    reference_x: -2, 0

Keys:

``name`` (required)       problem name
``n`` (required)          number of variables
``x0`` (required)         comma separated starting point
``f`` (required)          objective expression
``c`` (required, repeat)  one line per equality constraint ``c_i(x) = 0``
``reference_x``           known minimizer; enables the reference objective
                          and a least-squares multiplier
``reference_objective``   overrides ``f(reference_x)``
``reference_multiplier``  overrides the least-squares multiplier
``feasible``              ``true`` (default) or ``false``
``description``           free text

Expressions use the grammar documented in ``pgeq.expr``. Gradients and
Jacobians come from forward-mode differentiation, and are checked against
finite differences at ``x0`` when the entry is built.
"""
from __future__ import annotations

from pathlib import Path
from typing import List

import numpy as np

from .errors import ParseError
from .expr import Expression
from .library import CatalogEntry, _entry

__all__ = ["parse_problem_text", "load_problem_file"]

_SCALAR_KEYS = {"name", "n", "x0", "f", "reference_x", "reference_objective",
                "reference_multiplier", "feasible", "description"}


def _vector(text: str, key: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise ParseError(f"{key}: expected comma separated numbers, got {text!r}") from None


def _parse_block(lines: List[tuple[int, str]]) -> CatalogEntry:
    fields: dict = {}
    constraints: List[str] = []
    for lineno, raw in lines:
        key, sep, value = raw.partition(":")
        key, value = key.strip(), value.strip()
        if not sep or not value:
            raise ParseError(f"line {lineno}: expected 'key: value', got {raw!r}")
        if key == "c":
            constraints.append(value)
        elif key in _SCALAR_KEYS:
            if key in fields:
                raise ParseError(f"line {lineno}: duplicate key {key!r}")
            fields[key] = value
        else:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
    missing = [k for k in ("name", "n", "x0", "f") if k not in fields]
    if missing or not constraints:
        raise ParseError(f"missing keys: {missing + ([] if constraints else ['c'])}")

    name = fields["name"]
    try:
        n = int(fields["n"])
    except ValueError:
        raise ParseError(f"{name}: n must be an integer") from None
    if n < 1:
        raise ParseError(f"{name}: n must be >= 1")
    x0 = _vector(fields["x0"], "x0")
    if x0.size != n:
        raise ParseError(f"{name}: x0 has {x0.size} entries, n = {n}")
    fexpr = Expression(fields["f"], n)
    cexprs = [Expression(src, n) for src in constraints]

    def g(x):
        return fexpr.grad(x)

    def c(x):
        return np.array([e(x) for e in cexprs])

    def J(x):
        return np.array([e.grad(x) for e in cexprs])

    feasible_text = fields.get("feasible", "true").lower()
    if feasible_text not in ("true", "false"):
        raise ParseError(f"{name}: feasible must be true or false")
    x_ref = _vector(fields["reference_x"], "reference_x") if "reference_x" in fields else None
    if x_ref is not None and x_ref.size != n:
        raise ParseError(f"{name}: reference_x has {x_ref.size} entries, n = {n}")
    y_ref = (_vector(fields["reference_multiplier"], "reference_multiplier")
             if "reference_multiplier" in fields else None)
    if y_ref is not None and y_ref.size != len(cexprs):
        raise ParseError(f"{name}: reference_multiplier needs {len(cexprs)} entries")
    f_ref = None
    if "reference_objective" in fields:
        try:
            f_ref = float(fields["reference_objective"])
        except ValueError:
            raise ParseError(f"{name}: reference_objective must be a number") from None
    try:
        return _entry(name, f=fexpr, g=g, c=c, J=J, x0=x0, x_ref=x_ref, y_ref=y_ref,
                      f_ref=f_ref, feasible=feasible_text == "true",
                      description=fields.get("description", ""))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(f"{name}: {exc}") from None


def parse_problem_text(text: str) -> List[CatalogEntry]:
    """Parse every problem in ``text``."""
    blocks: List[List[tuple[int, str]]] = [[]]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line == "---":
            blocks.append([])
        elif line:
            blocks[-1].append((lineno, line))
    entries = [_parse_block(b) for b in blocks if b]
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise ParseError("duplicate problem names in file")
    return entries


def load_problem_file(path) -> List[CatalogEntry]:
    return parse_problem_text(Path(path).read_text())

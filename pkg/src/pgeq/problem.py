"""Problem abstraction: smooth objective, equality constraints, regularizer."""
from __future__ import annotations

from dataclasses import InitVar, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EvaluationError

__all__ = [
    "ProblemInstance",
    "Regularizer",
    "PointEval",
    "evaluate_point",
    "regularizer_value",
    "subgradient_membership",
    "finite_difference_check",
]


def _fd_steps(x: np.ndarray) -> np.ndarray:
    return 1e-6 * np.maximum(1.0, np.abs(x))


def finite_difference_check(problem: "ProblemInstance", x: np.ndarray,
                            rtol: float = 1e-5) -> tuple[float, float]:
    """Compare analytic derivatives against central differences at ``x``.

    Returns the worst scaled error ``|a - fd| / max(1, |a|)`` for the gradient
    and for the Jacobian. Both must be at most ``rtol`` for the problem to pass.
    """
    x = np.asarray(x, dtype=float)
    h = _fd_steps(x)
    n, m = problem.n, problem.m
    g_fd = np.empty(n)
    J_fd = np.empty((m, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h[i]
        g_fd[i] = (problem.eval_objective(x + e) - problem.eval_objective(x - e)) / (2 * h[i])
        J_fd[:, i] = (np.asarray(problem.eval_constraints(x + e))
                      - np.asarray(problem.eval_constraints(x - e))) / (2 * h[i])
    g = np.asarray(problem.eval_gradient(x), dtype=float)
    J = np.asarray(problem.eval_jacobian(x), dtype=float).reshape(m, n)
    g_err = np.max(np.abs(g - g_fd) / np.maximum(1.0, np.abs(g)), initial=0.0)
    J_err = np.max(np.abs(J - J_fd) / np.maximum(1.0, np.abs(J)), initial=0.0)
    return float(g_err), float(J_err)


@dataclass(frozen=True)
class ProblemInstance:
    """min f(x) s.t. c(x) = 0, described by callbacks.

    Pass ``validate=True`` to check the gradient and Jacobian against central
    finite differences at ``x0`` on construction.
    """

    name: str
    n: int
    m: int
    eval_objective: Callable[[np.ndarray], float]
    eval_gradient: Callable[[np.ndarray], np.ndarray]
    eval_constraints: Callable[[np.ndarray], np.ndarray]
    eval_jacobian: Callable[[np.ndarray], np.ndarray]
    x0: np.ndarray
    reference_objective: Optional[float] = None
    validate: InitVar[bool] = False

    def __post_init__(self, validate: bool) -> None:
        if self.n < 1 or self.m < 1:
            raise ValueError(f"{self.name}: n and m must be positive (n={self.n}, m={self.m})")
        if self.m > self.n:
            raise ValueError(f"{self.name}: need m <= n (n={self.n}, m={self.m})")
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if x0.shape != (self.n,):
            raise ValueError(f"{self.name}: x0 has length {x0.size}, expected {self.n}")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        if validate:
            g_err, J_err = finite_difference_check(self, x0)
            if g_err > 1e-5 or J_err > 1e-5:
                raise ValueError(
                    f"{self.name}: derivative check failed at x0 "
                    f"(gradient err {g_err:.2e}, Jacobian err {J_err:.2e})")


@dataclass(frozen=True)
class PointEval:
    f: float
    g: np.ndarray
    c: np.ndarray
    J: np.ndarray


def evaluate_point(problem: ProblemInstance, x: np.ndarray) -> PointEval:
    """Evaluate f, grad f, c and J at the same point, rejecting non-finite output."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,) or not np.all(np.isfinite(x)):
        raise EvaluationError(f"{problem.name}: invalid point {x!r}")
    f = float(problem.eval_objective(x))
    g = np.asarray(problem.eval_gradient(x), dtype=float).reshape(problem.n)
    c = np.asarray(problem.eval_constraints(x), dtype=float).reshape(problem.m)
    J = np.asarray(problem.eval_jacobian(x), dtype=float).reshape(problem.m, problem.n)
    for label, val in (("f", f), ("g", g), ("c", c), ("J", J)):
        if not np.all(np.isfinite(val)):
            raise EvaluationError(f"{problem.name}: non-finite {label} at x={x}")
    return PointEval(f=f, g=g, c=c, J=J)


@dataclass(frozen=True)
class Regularizer:
    """Either the zero function or ``weight * sum_{i in indices} |x_i|``."""

    kind: str = "zero"
    weight: float = 0.0
    indices: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "l1"):
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.kind == "l1":
            if not self.weight >= 0:
                raise ValueError("l1 weight must be nonnegative")
            idx = tuple(sorted({int(i) for i in self.indices}))
            if idx and idx[0] < 0:
                raise ValueError("negative regularizer index")
            object.__setattr__(self, "indices", idx)
        else:
            object.__setattr__(self, "weight", 0.0)
            object.__setattr__(self, "indices", ())

    @classmethod
    def zero(cls) -> "Regularizer":
        return cls("zero")

    @classmethod
    def l1(cls, weight: float, indices: Sequence[int]) -> "Regularizer":
        return cls("l1", float(weight), tuple(indices))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.weight == 0.0 or not self.indices

    def mask(self, n: int) -> np.ndarray:
        """Boolean mask of the regularized coordinates."""
        out = np.zeros(n, dtype=bool)
        if self.kind == "l1":
            out[list(self.indices)] = True
        return out

    def value(self, x: np.ndarray) -> float:
        return regularizer_value(self, x)


def regularizer_value(r: Regularizer, x: np.ndarray) -> float:
    if r.kind == "zero" or not r.indices:
        return 0.0
    x = np.asarray(x, dtype=float)
    return float(r.weight * np.sum(np.abs(x[list(r.indices)])))


def subgradient_membership(r: Regularizer, x: np.ndarray, g_r: np.ndarray,
                           tol: float) -> bool:
    """Test ``g_r in subdiff r(x)`` coordinatewise, with slack ``tol``.

    A regularized coordinate with ``|x_i| <= tol`` is treated as zero, so only
    the bound ``|g_r[i]| <= weight + tol`` applies there.
    """
    x = np.asarray(x, dtype=float)
    g_r = np.asarray(g_r, dtype=float)
    mask = r.mask(x.size)
    if np.any(np.abs(g_r[~mask]) > tol):
        return False
    if not mask.any():
        return True
    lam = r.weight
    xi, gi = x[mask], g_r[mask]
    if np.any(np.abs(gi) > lam + tol):
        return False
    nz = np.abs(xi) > tol
    return bool(np.all(np.abs(gi[nz] - lam * np.sign(xi[nz])) <= tol))

"""Built-in test problems and the slack (l1-penalized) reformulation.

Every feasible entry stores an analytic (or exactly computed) minimizer
``reference_x``, its objective value and a Lagrange multiplier ``y`` with
``grad f(x*) = J(x*)^T y``.  The catalog is modeled on small classic
equality-constrained problems (several are Hock-Schittkowski problems with
their usual starting points); ``dup-circle`` has a rank-deficient Jacobian
everywhere and ``infeasible-x1sq`` has no feasible point at all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .errors import UnknownProblem
from .problem import ProblemInstance, Regularizer

__all__ = [
    "CatalogEntry",
    "ReformulatedProblem",
    "LAMBDA_OFFSET",
    "list_problems",
    "instantiate",
    "reformulate",
    "register",
]

LAMBDA_OFFSET = 10.0


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    base_problem: ProblemInstance
    reference_objective: Optional[float]
    reference_multiplier_norm: Optional[float]
    reference_x: Optional[np.ndarray] = None
    reference_multiplier: Optional[np.ndarray] = None
    feasible: bool = True
    description: str = ""

    def __post_init__(self):
        p = self.base_problem
        if not 1 <= p.m < p.n:
            raise ValueError(f"{self.name}: catalog problems need 1 <= m < n")
        for val in (self.reference_objective, self.reference_multiplier_norm):
            if val is not None and not math.isfinite(val):
                raise ValueError(f"{self.name}: non-finite reference value")


@dataclass(frozen=True)
class ReformulatedProblem:
    """min f(x) + lam ||a||_1  s.t.  c(x) + a = 0, over the stacked vector (x, a)."""

    problem: ProblemInstance
    lam: float
    slack_indices: tuple
    base_n: int = field(default=0)

    @property
    def regularizer(self) -> Regularizer:
        return Regularizer.l1(self.lam, self.slack_indices)

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z)
        return z[:self.base_n], z[self.base_n:]

    def stack(self, x, a=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if a is None:
            a = np.zeros(self.problem.n - self.base_n)
        return np.concatenate([x, np.asarray(a, dtype=float)])


def reformulate(entry: CatalogEntry, lam: Optional[float] = None) -> ReformulatedProblem:
    """Slack reformulation of ``entry``.

    ``lam=None`` uses ``||y_ref||_inf + LAMBDA_OFFSET``; any positive float is
    used as given.
    """
    if lam is None:
        if entry.reference_multiplier_norm is None:
            raise ValueError(f"{entry.name}: no reference multiplier, pass lam explicitly")
        lam = entry.reference_multiplier_norm + LAMBDA_OFFSET
    elif not lam > 0:
        raise ValueError("lam must be positive")
    base = entry.base_problem
    n, m = base.n, base.m

    def f(z):
        return base.eval_objective(z[:n])

    def g(z):
        return np.concatenate([np.asarray(base.eval_gradient(z[:n]), dtype=float), np.zeros(m)])

    def c(z):
        return np.asarray(base.eval_constraints(z[:n]), dtype=float) + z[n:]

    def jac(z):
        return np.hstack([np.asarray(base.eval_jacobian(z[:n]), dtype=float).reshape(m, n),
                          np.eye(m)])

    x0 = np.asarray(base.x0, dtype=float)
    a0 = -np.asarray(base.eval_constraints(x0), dtype=float)
    problem = ProblemInstance(
        name=entry.name, n=n + m, m=m,
        eval_objective=f, eval_gradient=g, eval_constraints=c, eval_jacobian=jac,
        x0=np.concatenate([x0, a0]),
        reference_objective=entry.reference_objective,
    )
    return ReformulatedProblem(problem=problem, lam=float(lam),
                               slack_indices=tuple(range(n, n + m)), base_n=n)


# --------------------------------------------------------------------------
# catalog

_BUILDERS: Dict[str, Callable[[], CatalogEntry]] = {}


def register(name: str):
    def deco(fn):
        _BUILDERS[name] = fn
        return fn
    return deco


def list_problems() -> list[str]:
    return sorted(_BUILDERS)


def instantiate(name: str) -> CatalogEntry:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownProblem(name) from None
    return builder()


def _entry(name, f, g, c, J, x0, x_ref=None, y_ref=None, f_ref=None, feasible=True,
           description=""):
    x0 = np.asarray(x0, dtype=float)
    m = len(np.atleast_1d(c(x0)))
    base = ProblemInstance(name=name, n=x0.size, m=m,
                           eval_objective=f, eval_gradient=g,
                           eval_constraints=c, eval_jacobian=J,
                           x0=x0, reference_objective=f_ref, validate=True)
    y_norm = None
    if x_ref is not None:
        x_ref = np.asarray(x_ref, dtype=float)
        if f_ref is None:
            f_ref = float(f(x_ref))
        if y_ref is None:
            # min-norm multiplier from grad f = J^T y at the reference point
            y_ref = np.linalg.lstsq(np.atleast_2d(J(x_ref)).T, g(x_ref), rcond=None)[0]
        y_ref = np.atleast_1d(np.asarray(y_ref, dtype=float))
        y_norm = float(np.max(np.abs(y_ref)))
        base = ProblemInstance(name=name, n=x0.size, m=m,
                               eval_objective=f, eval_gradient=g,
                               eval_constraints=c, eval_jacobian=J,
                               x0=x0, reference_objective=f_ref)
    return CatalogEntry(name=name, base_problem=base, reference_objective=f_ref,
                        reference_multiplier_norm=y_norm, reference_x=x_ref,
                        reference_multiplier=y_ref, feasible=feasible,
                        description=description)


A = np.array


@register("circle-min-x")
def _circle_min_x():
    return _entry(
        "circle-min-x",
        f=lambda x: x[0],
        g=lambda x: A([1.0, 0.0]),
        c=lambda x: A([x[0] ** 2 + x[1] ** 2 - 4.0]),
        J=lambda x: A([[2 * x[0], 2 * x[1]]]),
        x0=[1.0, 1.0],
        x_ref=[-2.0, 0.0], y_ref=[-0.25], f_ref=-2.0,
        description="min x1 on the circle of radius 2",
    )


@register("linear-circle")
def _linear_circle():
    return _entry(
        "linear-circle",
        f=lambda x: x[0] + x[1],
        g=lambda x: A([1.0, 1.0]),
        c=lambda x: A([x[0] ** 2 + x[1] ** 2 - 2.0]),
        J=lambda x: A([[2 * x[0], 2 * x[1]]]),
        x0=[1.0, -0.5],
        x_ref=[-1.0, -1.0], y_ref=[-0.5], f_ref=-2.0,
        description="min x1 + x2 on the circle of radius sqrt(2)",
    )


@register("sphere-sum")
def _sphere_sum():
    return _entry(
        "sphere-sum",
        f=lambda x: float(np.sum(x)),
        g=lambda x: np.ones(3),
        c=lambda x: A([x @ x - 3.0]),
        J=lambda x: 2.0 * x.reshape(1, 3),
        x0=[1.0, 0.5, -0.5],
        x_ref=[-1.0, -1.0, -1.0], y_ref=[-0.5], f_ref=-3.0,
        description="min sum(x) on the sphere of radius sqrt(3)",
    )


@register("rosenbrock-eq")
def _rosenbrock_eq():
    # HS6
    return _entry(
        "rosenbrock-eq",
        f=lambda x: (1.0 - x[0]) ** 2,
        g=lambda x: A([-2.0 * (1.0 - x[0]), 0.0]),
        c=lambda x: A([10.0 * (x[1] - x[0] ** 2)]),
        J=lambda x: A([[-20.0 * x[0], 10.0]]),
        x0=[-1.2, 1.0],
        x_ref=[1.0, 1.0], y_ref=[0.0], f_ref=0.0,
        description="HS6: (1 - x1)^2 on the parabola x2 = x1^2",
    )


@register("hs7")
def _hs7():
    s3 = math.sqrt(3.0)
    return _entry(
        "hs7",
        f=lambda x: math.log(1.0 + x[0] ** 2) - x[1],
        g=lambda x: A([2 * x[0] / (1 + x[0] ** 2), -1.0]),
        c=lambda x: A([(1 + x[0] ** 2) ** 2 + x[1] ** 2 - 4.0]),
        J=lambda x: A([[4 * x[0] * (1 + x[0] ** 2), 2 * x[1]]]),
        x0=[2.0, 2.0],
        x_ref=[0.0, s3], y_ref=[-1.0 / (2 * s3)], f_ref=-s3,
        description="HS7: logarithmic objective, quartic constraint",
    )


@register("hs9")
def _hs9():
    a, b = math.pi / 12, math.pi / 16
    return _entry(
        "hs9",
        f=lambda x: math.sin(a * x[0]) * math.cos(b * x[1]),
        g=lambda x: A([a * math.cos(a * x[0]) * math.cos(b * x[1]),
                       -b * math.sin(a * x[0]) * math.sin(b * x[1])]),
        c=lambda x: A([4.0 * x[0] - 3.0 * x[1]]),
        J=lambda x: A([[4.0, -3.0]]),
        x0=[0.0, 0.0],
        x_ref=[-3.0, -4.0], y_ref=[math.pi / 96], f_ref=-0.5,
        description="HS9: trigonometric objective, linear constraint",
    )


@register("hs28")
def _hs28():
    return _entry(
        "hs28",
        f=lambda x: (x[0] + x[1]) ** 2 + (x[1] + x[2]) ** 2,
        g=lambda x: A([2 * (x[0] + x[1]), 2 * (x[0] + x[1]) + 2 * (x[1] + x[2]),
                       2 * (x[1] + x[2])]),
        c=lambda x: A([x[0] + 2 * x[1] + 3 * x[2] - 1.0]),
        J=lambda x: A([[1.0, 2.0, 3.0]]),
        x0=[-4.0, 1.0, 1.0],
        x_ref=[0.5, -0.5, 0.5], y_ref=[0.0], f_ref=0.0,
        description="HS28: convex quadratic, one linear constraint",
    )


@register("hs39")
def _hs39():
    return _entry(
        "hs39",
        f=lambda x: -x[0],
        g=lambda x: A([-1.0, 0.0, 0.0, 0.0]),
        c=lambda x: A([x[1] - x[0] ** 3 - x[2] ** 2, x[0] ** 2 - x[1] - x[3] ** 2]),
        J=lambda x: A([[-3 * x[0] ** 2, 1.0, -2 * x[2], 0.0],
                       [2 * x[0], -1.0, 0.0, -2 * x[3]]]),
        x0=[2.0, 2.0, 2.0, 2.0],
        x_ref=[1.0, 1.0, 0.0, 0.0], y_ref=[1.0, 1.0], f_ref=-1.0,
        description="HS39: linear objective, cubic and quadratic constraints",
    )


@register("hs40")
def _hs40():
    x_ref = A([2 ** (-1 / 3), 2 ** (-1 / 2), 2 ** (-11 / 12), 2 ** (-1 / 4)])
    return _entry(
        "hs40",
        f=lambda x: -x[0] * x[1] * x[2] * x[3],
        g=lambda x: -A([x[1] * x[2] * x[3], x[0] * x[2] * x[3],
                        x[0] * x[1] * x[3], x[0] * x[1] * x[2]]),
        c=lambda x: A([x[0] ** 3 + x[1] ** 2 - 1.0,
                       x[0] ** 2 * x[3] - x[2],
                       x[3] ** 2 - x[1]]),
        J=lambda x: A([[3 * x[0] ** 2, 2 * x[1], 0.0, 0.0],
                       [2 * x[0] * x[3], 0.0, -1.0, x[0] ** 2],
                       [0.0, -1.0, 0.0, 2 * x[3]]]),
        x0=[0.8, 0.8, 0.8, 0.8],
        x_ref=x_ref, f_ref=-0.25,
        description="HS40: quartic objective, three nonlinear constraints",
    )


@register("hs48")
def _hs48():
    return _entry(
        "hs48",
        f=lambda x: (x[0] - 1) ** 2 + (x[1] - x[2]) ** 2 + (x[3] - x[4]) ** 2,
        g=lambda x: A([2 * (x[0] - 1), 2 * (x[1] - x[2]), -2 * (x[1] - x[2]),
                       2 * (x[3] - x[4]), -2 * (x[3] - x[4])]),
        c=lambda x: A([np.sum(x) - 5.0, x[2] - 2 * (x[3] + x[4]) + 3.0]),
        J=lambda x: A([[1.0, 1.0, 1.0, 1.0, 1.0], [0.0, 0.0, 1.0, -2.0, -2.0]]),
        x0=[3.0, 5.0, -3.0, 2.0, -2.0],
        x_ref=np.ones(5), y_ref=[0.0, 0.0], f_ref=0.0,
        description="HS48: convex quadratic, two linear constraints",
    )


@register("hs51")
def _hs51():
    return _entry(
        "hs51",
        f=lambda x: ((x[0] - x[1]) ** 2 + (x[1] + x[2] - 2) ** 2
                     + (x[3] - 1) ** 2 + (x[4] - 1) ** 2),
        g=lambda x: A([2 * (x[0] - x[1]),
                       -2 * (x[0] - x[1]) + 2 * (x[1] + x[2] - 2),
                       2 * (x[1] + x[2] - 2),
                       2 * (x[3] - 1),
                       2 * (x[4] - 1)]),
        c=lambda x: A([x[0] + 3 * x[1] - 4.0, x[2] + x[3] - 2 * x[4], x[1] - x[4]]),
        J=lambda x: A([[1.0, 3.0, 0.0, 0.0, 0.0],
                       [0.0, 0.0, 1.0, 1.0, -2.0],
                       [0.0, 1.0, 0.0, 0.0, -1.0]]),
        x0=[2.5, 0.5, 2.0, -1.0, 0.5],
        x_ref=np.ones(5), y_ref=[0.0, 0.0, 0.0], f_ref=0.0,
        description="HS51: convex quadratic, three linear constraints",
    )


def _hs52_solution():
    # equality-constrained convex QP: solve its KKT system exactly
    H = 2.0 * A([[16, -4, 0, 0, 0],
                 [-4, 2, 1, 0, 0],
                 [0, 1, 1, 0, 0],
                 [0, 0, 0, 1, 0],
                 [0, 0, 0, 0, 1]], dtype=float)
    q = A([0.0, -4.0, -4.0, -2.0, -2.0])
    Jm = A([[1.0, 3.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0, -2.0],
            [0.0, 1.0, 0.0, 0.0, -1.0]])
    K = np.block([[H, -Jm.T], [Jm, np.zeros((3, 3))]])
    sol = np.linalg.solve(K, np.concatenate([-q, np.zeros(3)]))
    return sol[:5], sol[5:]


@register("hs52")
def _hs52():
    x_ref, y_ref = _hs52_solution()
    return _entry(
        "hs52",
        f=lambda x: ((4 * x[0] - x[1]) ** 2 + (x[1] + x[2] - 2) ** 2
                     + (x[3] - 1) ** 2 + (x[4] - 1) ** 2),
        g=lambda x: A([8 * (4 * x[0] - x[1]),
                       -2 * (4 * x[0] - x[1]) + 2 * (x[1] + x[2] - 2),
                       2 * (x[1] + x[2] - 2),
                       2 * (x[3] - 1),
                       2 * (x[4] - 1)]),
        c=lambda x: A([x[0] + 3 * x[1], x[2] + x[3] - 2 * x[4], x[1] - x[4]]),
        J=lambda x: A([[1.0, 3.0, 0.0, 0.0, 0.0],
                       [0.0, 0.0, 1.0, 1.0, -2.0],
                       [0.0, 1.0, 0.0, 0.0, -1.0]]),
        x0=[2.0, 2.0, 2.0, 2.0, 2.0],
        x_ref=x_ref, y_ref=y_ref, f_ref=1859.0 / 349.0,
        description="HS52: convex quadratic with nonzero multipliers",
    )


@register("dup-circle")
def _dup_circle():
    return _entry(
        "dup-circle",
        f=lambda x: (x[0] - 2) ** 2 + x[1] ** 2 + x[2] ** 2,
        g=lambda x: A([2 * (x[0] - 2), 2 * x[1], 2 * x[2]]),
        c=lambda x: A([x @ x - 1.0, 2.0 * (x @ x - 1.0)]),
        J=lambda x: A([2 * x, 4 * x]),
        x0=[0.5, 0.5, 0.5],
        x_ref=[1.0, 0.0, 0.0], y_ref=[-0.2, -0.4], f_ref=1.0,
        description="closest point of the unit sphere to (2,0,0); constraint stated twice, "
                    "so J has rank one everywhere",
    )


@register("infeasible-x1sq")
def _infeasible_x1sq():
    return _entry(
        "infeasible-x1sq",
        f=lambda x: (x[1] - 1.0) ** 2,
        g=lambda x: A([0.0, 2.0 * (x[1] - 1.0)]),
        c=lambda x: A([x[0] ** 2 + 1.0]),
        J=lambda x: A([[2.0 * x[0], 0.0]]),
        x0=[2.0, 0.0],
        feasible=False,
        description="x1^2 + 1 = 0 has no real solution; x1 = 0 is an infeasible "
                    "stationary point of ||c||^2",
    )

"""Proximal-gradient method for ``min f(x) + r(x)  s.t.  c(x) = 0``.

Quick start::

    from pgeq import instantiate, reformulate, solve
    ref = reformulate(instantiate("hs7"))
    report = solve(ref.problem, ref.regularizer)
"""
from .driver import (IterationRecord, SolverConfig, SolverReport, Status, kkt_residual,
                     solve)
from .errors import (ConfigError, DegenerateInput, EvaluationError, FactorizationError,
                     ParseError, PgeqError, SubsolverError, UnknownProblem)
from .kernels import BACKEND
from .library import CatalogEntry, ReformulatedProblem, instantiate, list_problems, reformulate
from .normal_step import cauchy_point, compute_normal_step
from .problem import ProblemInstance, Regularizer
from .tangential import SubsolverConfig, solve_tangential

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CatalogEntry",
    "ConfigError",
    "DegenerateInput",
    "EvaluationError",
    "FactorizationError",
    "IterationRecord",
    "ParseError",
    "PgeqError",
    "ProblemInstance",
    "ReformulatedProblem",
    "Regularizer",
    "SolverConfig",
    "SolverReport",
    "Status",
    "SubsolverConfig",
    "SubsolverError",
    "UnknownProblem",
    "cauchy_point",
    "compute_normal_step",
    "instantiate",
    "kkt_residual",
    "list_problems",
    "reformulate",
    "solve",
    "solve_tangential",
]

"""Feasibility-restoring (normal) step.

The normal step approximately minimizes ``m(v) = 0.5 * ||c + J v||^2`` over
``||v|| <= kappa_v * alpha * ||J^T c||`` while staying in the row space of
``J``. A projected Gauss-Newton step is used whenever ``J`` has full row rank
and it does at least as well as the Cauchy point; otherwise the Cauchy point
is returned.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import DegenerateInput

__all__ = [
    "NormalStepResult",
    "cauchy_point",
    "newton_normal_step",
    "compute_normal_step",
    "feasibility_model",
]


def feasibility_model(J: np.ndarray, c: np.ndarray, v: np.ndarray) -> float:
    res = c + J @ v
    return 0.5 * float(res @ res)


@dataclass(frozen=True)
class NormalStepResult:
    v: np.ndarray
    v_cauchy: np.ndarray
    beta_cauchy: float
    used_newton: bool
    model_at_v: float
    model_at_zero: float
    trust_radius: float
    model_at_cauchy: float


def cauchy_point(J: np.ndarray, c: np.ndarray, kappa_v: float,
                 alpha: float) -> tuple[np.ndarray, float]:
    """Minimize ``m`` along ``-J^T c`` subject to ``0 <= beta <= kappa_v * alpha``.

    Raises
    ------
    DegenerateInput
        If ``J^T c`` is zero.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    c = np.asarray(c, dtype=float)
    grad = J.T @ c
    gnorm2 = float(grad @ grad)
    if gnorm2 == 0.0:
        raise DegenerateInput("J^T c = 0: the normal step is v = 0")
    cap = kappa_v * alpha
    Jg = J @ grad
    curv = float(Jg @ Jg)
    beta = cap if curv == 0.0 else min(gnorm2 / curv, cap)
    return -beta * grad, beta


def _gram_cholesky(J: np.ndarray, rank_tol: float):
    """Cholesky factor of ``J J^T`` or None when ``J`` is numerically rank deficient."""
    G = J @ J.T
    try:
        factor = linalg.cho_factor(G, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return None
    d = np.abs(np.diag(factor[0]))
    # diag(L) sits between sigma_min(J) and sigma_max(J)
    if d.max() == 0.0 or d.min() <= rank_tol * d.max():
        return None
    return factor


def newton_normal_step(J: np.ndarray, c: np.ndarray,
                       rank_tol: float = 1e-10) -> Optional[np.ndarray]:
    """Minimum-norm solution of ``J v = -c``, i.e. ``v = J^T w`` with ``J J^T w = -c``.

    Returns None when ``J`` is rank deficient (the caller falls back to the
    Cauchy point).
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    c = np.asarray(c, dtype=float)
    factor = _gram_cholesky(J, rank_tol)
    if factor is None:
        return None
    w = linalg.cho_solve(factor, -c, check_finite=False)
    v = J.T @ w
    if np.linalg.norm(c + J @ v) > 1e-9 * max(1.0, float(np.linalg.norm(c))):
        return None
    return v


def compute_normal_step(J: np.ndarray, c: np.ndarray, kappa_v: float,
                        alpha: float, rank_tol: float = 1e-10) -> NormalStepResult:
    J = np.atleast_2d(np.asarray(J, dtype=float))
    c = np.asarray(c, dtype=float)
    v_c, beta = cauchy_point(J, c, kappa_v, alpha)
    radius = kappa_v * alpha * float(np.linalg.norm(J.T @ c))
    m_c = feasibility_model(J, c, v_c)

    v, used_newton, m_v = v_c, False, m_c
    v_n = newton_normal_step(J, c, rank_tol)
    if v_n is not None:
        nrm = float(np.linalg.norm(v_n))
        v_bar = v_n if nrm <= radius else (radius / nrm) * v_n
        m_bar = feasibility_model(J, c, v_bar)
        # ties go to the projected Newton step
        if not m_c < m_bar:
            v, used_newton, m_v = v_bar, True, m_bar

    return NormalStepResult(
        v=v,
        v_cauchy=v_c,
        beta_cauchy=beta,
        used_newton=used_newton,
        model_at_v=m_v,
        model_at_zero=0.5 * float(c @ c),
        trust_radius=radius,
        model_at_cauchy=m_c,
    )

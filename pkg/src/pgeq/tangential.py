"""Tangential subproblem solver.

Solves the strongly convex problem

    min_u  g^T u + ||u||^2 / (2 alpha) + r(x_shift + u)   s.t.  J u = 0

and returns ``u`` together with a multiplier ``y`` and a subgradient
``g_r in subdiff r(x_shift + u)`` such that

    g + u / alpha + g_r - J^T y = 0,   J u = 0

up to the configured tolerances.

For a weighted l1 regularizer the problem is split as ``u = z`` and solved
with ADMM (scaled form, residual balancing on the penalty). Each time the
splitting iterates settle on a zero/sign pattern the pattern is "polished":
the equality-constrained quadratic obtained by fixing that pattern is solved
directly and accepted if it is consistent, which gives the exact minimizer.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from . import kernels
from .errors import FactorizationError, SubsolverError
from .normal_step import _gram_cholesky
from .problem import Regularizer, subgradient_membership

__all__ = [
    "SubsolverConfig",
    "TangentialSolution",
    "KKTFactor",
    "kkt_factor",
    "recover_multiplier",
    "solve_tangential",
    "TangentialSolver",
]

log = logging.getLogger(__name__)

_RHO_BALANCE = 10.0
_MAX_RHO_UPDATES = 30
_CHUNK = 25


@dataclass
class SubsolverConfig:
    sub_tol_stat: float = 1e-10
    sub_tol_feas: float = 1e-10
    max_inner_iterations: int = 10000
    penalty_rho: float = 1.0
    polish: bool = True
    backend: Optional[str] = None

    def __post_init__(self):
        if not (self.sub_tol_stat > 0 and self.sub_tol_feas > 0):
            raise ValueError("subsolver tolerances must be positive")
        if self.max_inner_iterations < 1:
            raise ValueError("max_inner_iterations must be >= 1")
        if not self.penalty_rho > 0:
            raise ValueError("penalty_rho must be positive")


@dataclass
class TangentialSolution:
    u: np.ndarray
    y: np.ndarray
    g_r: np.ndarray
    stationarity_residual: float
    constraint_residual: float
    iterations: int
    polished: bool = False
    # regularized coordinates at zero / signs elsewhere, reused as a warm start
    zero_mask: Optional[np.ndarray] = field(default=None, repr=False)
    signs: Optional[np.ndarray] = field(default=None, repr=False)


class KKTFactor:
    """LU factorization of ``[[d I, J^T], [J, 0]]`` with ``d = 1/alpha + rho``."""

    def __init__(self, J: np.ndarray, diag: float, rank_tol: float = 1e-10):
        J = np.atleast_2d(np.asarray(J, dtype=float))
        m, n = J.shape
        if _gram_cholesky(J, rank_tol) is None:
            raise FactorizationError("saddle-point system is singular: J is rank deficient")
        A = np.zeros((n + m, n + m))
        A[:n, :n] = diag * np.eye(n)
        A[:n, n:] = J.T
        A[n:, :n] = J
        self.J = J
        self.diag = diag
        self.n, self.m = n, m
        self.matrix = A
        self._lu = linalg.lu_factor(A, check_finite=False)
        self._null_op = None

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.lu_solve(self._lu, rhs, check_finite=False)

    @property
    def nullspace_operator(self) -> np.ndarray:
        """``K`` with ``u = -K a`` minimizing ``a^T u + d/2 ||u||^2`` over ``J u = 0``.

        Equal to ``(I - J^T (J J^T)^{-1} J) / d``.
        """
        if self._null_op is None:
            rhs = np.zeros((self.n + self.m, self.n))
            rhs[:self.n] = np.eye(self.n)
            K = self.solve(rhs)[:self.n]
            self._null_op = np.ascontiguousarray(0.5 * (K + K.T))
        return self._null_op


def kkt_factor(J: np.ndarray, alpha: float, penalty_rho: float) -> KKTFactor:
    if not (alpha > 0 and penalty_rho > 0):
        raise ValueError("alpha and penalty_rho must be positive")
    return KKTFactor(J, 1.0 / alpha + penalty_rho)


def recover_multiplier(J: np.ndarray, g: np.ndarray, u: np.ndarray,
                       g_r: np.ndarray, alpha: float) -> np.ndarray:
    """Least-squares ``y`` for ``J^T y = g + u/alpha + g_r``."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    rhs = g + u / alpha + g_r
    y, _, rank, _ = np.linalg.lstsq(J.T, rhs, rcond=None)
    if rank < J.shape[0]:
        log.debug("recover_multiplier: J has rank %d < %d, using min-norm y", rank, J.shape[0])
    return y


def _stationarity(g, u, g_r, J, y, alpha) -> float:
    return float(np.linalg.norm(g + u / alpha + g_r - J.T @ y))


def _pattern(x_shift, z, mask):
    pt = x_shift + z
    zero = mask & (pt == 0.0)
    signs = np.where(mask & ~zero, np.sign(pt), 0.0)
    return zero, signs


class TangentialSolver:
    """Reusable solver; keeps the last zero/sign pattern as a warm start."""

    def __init__(self, cfg: Optional[SubsolverConfig] = None):
        self.cfg = cfg or SubsolverConfig()
        self._kernel = kernels.get_kernel(self.cfg.backend)
        self._warm: Optional[tuple] = None

    def reset(self) -> None:
        self._warm = None

    def solve(self, g, J, alpha, r: Regularizer, x_shift) -> TangentialSolution:
        g = np.asarray(g, dtype=float)
        J = np.atleast_2d(np.asarray(J, dtype=float))
        x_shift = np.asarray(x_shift, dtype=float)
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        if r.is_zero:
            sol = self._solve_smooth(g, J, alpha)
        else:
            sol = self._solve_l1(g, J, alpha, r, x_shift)
        if sol.zero_mask is not None:
            self._warm = (sol.zero_mask, sol.signs)
        return sol

    def _solve_smooth(self, g, J, alpha):
        n = g.size
        fac = KKTFactor(J, 1.0 / alpha)
        sol = fac.solve(np.concatenate([-g, np.zeros(J.shape[0])]))
        u, y = sol[:n], -sol[n:]
        g_r = np.zeros(n)
        stat = _stationarity(g, u, g_r, J, y, alpha)
        feas = float(np.linalg.norm(J @ u))
        if stat > self.cfg.sub_tol_stat or feas > self.cfg.sub_tol_feas:
            # one step of iterative refinement
            res = np.concatenate([-g, np.zeros(J.shape[0])]) - fac.matrix @ sol
            sol = sol + fac.solve(res)
            u, y = sol[:n], -sol[n:]
            stat = _stationarity(g, u, g_r, J, y, alpha)
            feas = float(np.linalg.norm(J @ u))
        if stat > self.cfg.sub_tol_stat or feas > self.cfg.sub_tol_feas:
            raise SubsolverError(
                f"linear solve inaccurate (stationarity {stat:.2e}, feasibility {feas:.2e})")
        return TangentialSolution(u=u, y=y, g_r=g_r, stationarity_residual=stat,
                                  constraint_residual=feas, iterations=1)

    def _polish(self, g, J, alpha, lam, mask, x_shift, zero, signs):
        """Solve with a fixed zero/sign pattern; None if the result is inconsistent."""
        cfg = self.cfg
        n, m = g.size, J.shape[0]
        Z = np.flatnonzero(zero)
        A = np.vstack([J, np.eye(n)[Z]]) if Z.size else J
        if A.shape[0] > n:
            return None
        b = np.concatenate([np.zeros(m), -x_shift[Z]])
        h = -g - lam * signs
        M = A @ A.T
        rhs = b / alpha - A @ h
        try:
            fac = linalg.cho_factor(M, lower=True, check_finite=False)
            mu = linalg.cho_solve(fac, rhs, check_finite=False)
        except linalg.LinAlgError:
            mu = np.linalg.lstsq(M, rhs, rcond=None)[0]
        u = alpha * (h + A.T @ mu)
        u[Z] = -x_shift[Z]
        y = mu[:m]
        g_r = lam * signs
        g_r[Z] = -mu[m:]
        tol = cfg.sub_tol_stat
        if np.any(np.abs(g_r[Z]) > lam + tol):
            return None
        live = mask & ~zero
        if np.any(signs[live] * (x_shift[live] + u[live]) < -tol):
            return None
        feas = float(np.linalg.norm(J @ u))
        stat = _stationarity(g, u, g_r, J, y, alpha)
        if stat > tol:
            y = recover_multiplier(J, g, u, g_r, alpha)
            stat = _stationarity(g, u, g_r, J, y, alpha)
        if feas > cfg.sub_tol_feas or stat > tol:
            return None
        return u, y, g_r, stat, feas

    def _solve_l1(self, g, J, alpha, r, x_shift):
        cfg = self.cfg
        n = g.size
        lam = r.weight
        mask = r.mask(n)
        mask_u8 = mask.astype(np.uint8)
        tol = cfg.sub_tol_stat
        tried = set()

        def attempt(zero, signs, iters):
            key = (zero.tobytes(), signs.tobytes())
            if key in tried:
                return None
            tried.add(key)
            out = self._polish(g, J, alpha, lam, mask, x_shift, zero, signs)
            if out is None:
                return None
            u, y, g_r, stat, feas = out
            zero_u, signs_u = _pattern(x_shift, u, mask)
            return TangentialSolution(u=u, y=y, g_r=g_r, stationarity_residual=stat,
                                      constraint_residual=feas, iterations=iters,
                                      polished=True, zero_mask=zero_u, signs=signs_u)

        if cfg.polish and self._warm is not None and self._warm[0].size == n:
            sol = attempt(self._warm[0], self._warm[1], 0)
            if sol is not None:
                return sol

        rho = cfg.penalty_rho
        fac = kkt_factor(J, alpha, rho)
        K = fac.nullspace_operator
        u = np.zeros(n)
        z = np.zeros(n)
        w = np.zeros(n)
        total = 0
        updates = 0
        while total < cfg.max_inner_iterations:
            chunk = min(_CHUNK, cfg.max_inner_iterations - total)
            balance = _RHO_BALANCE if updates < _MAX_RHO_UPDATES else 0.0
            it, primal, dual, status = self._kernel(
                K, g, x_shift, mask_u8, lam / rho, rho, u, z, w,
                chunk, tol, tol, balance, 10)
            total += it
            if cfg.polish:
                zero, signs = _pattern(x_shift, z, mask)
                sol = attempt(zero, signs, total)
                if sol is not None:
                    return sol
            if status == 0:
                break
            if status == 2:
                new_rho = rho * 2.0 if primal > dual else rho / 2.0
                w *= rho / new_rho
                rho = new_rho
                updates += 1
                fac = kkt_factor(J, alpha, rho)
                K = fac.nullspace_operator
        else:
            raise SubsolverError(
                f"splitting did not converge in {total} iterations "
                f"(primal {primal:.2e}, dual {dual:.2e})")

        g_r = rho * w
        g_r[~mask] = 0.0
        y = recover_multiplier(J, g, u, g_r, alpha)
        stat = _stationarity(g, u, g_r, J, y, alpha)
        feas = float(np.linalg.norm(J @ u))
        if (stat > tol or feas > cfg.sub_tol_feas
                or not subgradient_membership(r, x_shift + u, g_r, tol)):
            raise SubsolverError(
                f"splitting converged but certificate failed "
                f"(stationarity {stat:.2e}, feasibility {feas:.2e})")
        zero, signs = _pattern(x_shift, z, mask)
        return TangentialSolution(u=u, y=y, g_r=g_r, stationarity_residual=stat,
                                  constraint_residual=feas, iterations=total,
                                  zero_mask=zero, signs=signs)


def solve_tangential(g, J, alpha, r: Regularizer, x_shift,
                     cfg: Optional[SubsolverConfig] = None) -> TangentialSolution:
    """One-shot solve without warm start; see ``TangentialSolver``."""
    return TangentialSolver(cfg).solve(g, J, alpha, r, x_shift)

"""Main iteration: normal + tangential step, merit test, parameter updates."""
from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import EvaluationError, SubsolverError
from .merit import (
    INF,
    merit_value,
    model_reduction,
    tau_denominator,
    tau_trial_value,
    update_tau,
)
from .normal_step import compute_normal_step, feasibility_model
from .problem import PointEval, ProblemInstance, Regularizer, evaluate_point
from .tangential import SubsolverConfig, TangentialSolution, TangentialSolver

__all__ = [
    "Status",
    "SolverConfig",
    "IterationRecord",
    "SolverReport",
    "solve",
    "accept_step",
    "kkt_residual",
    "zero_step_test",
]

log = logging.getLogger(__name__)


class Status(enum.Enum):
    KKT_POINT = "KktPoint"
    INFEASIBLE_STATIONARY = "InfeasibleStationary"
    MAX_ITERATIONS = "MaxIterations"
    SUBSOLVER_ERROR = "SubsolverError"


@dataclass
class SolverConfig:
    alpha0: float = 10.0
    tau_init: float = 1.0
    kappa_v: float = 1000.0
    sigma_c: float = 0.1
    eps_tau: float = 0.1
    xi: float = 0.5
    eta: float = 1e-4
    sigma_u: float = 0.1
    max_iterations: int = 1000
    tol_feas: float = 1e-6
    tol_stat: float = 1e-6
    isp_feas_floor: float = 1e-2
    isp_stat_tol: float = 1e-12
    zero_step_threshold: float = 1e-12
    rank_tol: float = 1e-10
    subsolver: SubsolverConfig = field(default_factory=SubsolverConfig)

    def __post_init__(self):
        for name in ("alpha0", "tau_init", "kappa_v", "tol_feas", "tol_stat",
                     "isp_feas_floor", "isp_stat_tol", "rank_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("sigma_c", "eps_tau", "xi", "eta"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not 0 < self.sigma_u <= 0.5:
            raise ValueError("sigma_u must lie in (0, 1/2]")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.zero_step_threshold < 0:
            raise ValueError("zero_step_threshold must be nonnegative")


@dataclass
class IterationRecord:
    k: int
    x: np.ndarray
    alpha: float
    tau: float
    norm_v: float
    norm_u: float
    norm_s: float
    merit_before: float
    merit_after: float
    delta_q: float
    chi: float
    chi_bar: float
    accepted: bool
    linearized_gain: float
    subsolver_iterations: int
    # quantities kept for auditing the per-iteration guarantees
    tau_prev: float = 0.0
    tau_trial: float = INF
    stationarity: float = 0.0
    norm_c: float = 0.0
    norm_jtc: float = 0.0
    norm_c_plus_jv: float = 0.0
    used_newton: bool = False
    cauchy_decrease: float = 0.0
    normal_decrease: float = 0.0
    cauchy_bound: float = 0.0
    sigma_min: float = 0.0
    sigma_max: float = 0.0
    full_rank: bool = False
    norm_ju: float = 0.0
    v_dot_u: float = 0.0
    identity_residual: float = 0.0
    denominator: float = 0.0
    denominator_bound: float = 0.0
    delta_q_lower: float = 0.0
    gain_bound: float = 0.0
    regularizer_at_trial: float = 0.0
    flags: str = ""


@dataclass
class SolverReport:
    status: Status
    final_x: np.ndarray
    final_objective: float
    final_feasibility: float
    final_stationarity: float
    iterations: int
    accepted_count: int
    trace: List[IterationRecord]
    wall_time_seconds: float
    final_alpha: float = 0.0
    final_tau: float = 0.0
    final_multiplier: Optional[np.ndarray] = None
    final_subgradient: Optional[np.ndarray] = None
    certificate_point: Optional[np.ndarray] = None
    message: str = ""


def accept_step(phi_trial: float, phi_current: float, delta_q: float, eta: float) -> bool:
    return phi_trial <= phi_current - eta * delta_q


def kkt_residual(g, g_r, J, y, c) -> tuple[float, float, float]:
    """Return ``(chi, stationarity, feasibility)``."""
    stat = float(np.linalg.norm(g + g_r - np.atleast_2d(J).T @ y))
    feas = float(np.linalg.norm(c))
    return max(stat, feas), stat, feas


def zero_step_test(s, threshold: float) -> bool:
    return float(np.linalg.norm(s)) <= threshold


class _Step:
    """Normal and tangential steps computed at one iterate."""

    __slots__ = ("v", "normal", "sol", "x_shift", "stationarity")

    def __init__(self, v, normal, sol: TangentialSolution, x_shift, stationarity):
        self.v = v
        self.normal = normal
        self.sol = sol
        self.x_shift = x_shift
        self.stationarity = stationarity


class _Solver:
    def __init__(self, problem: ProblemInstance, r: Regularizer, cfg: SolverConfig):
        self.problem = problem
        self.r = r
        self.cfg = cfg
        self.sub = TangentialSolver(cfg.subsolver)

    def step(self, x, ev: PointEval, alpha: float) -> _Step:
        cfg = self.cfg
        jtc = ev.J.T @ ev.c
        if not np.any(jtc):
            v, normal = np.zeros_like(x), None
        else:
            normal = compute_normal_step(ev.J, ev.c, cfg.kappa_v, alpha, cfg.rank_tol)
            v = normal.v
        x_shift = x + v
        sol = self.sub.solve(ev.g, ev.J, alpha, self.r, x_shift)
        _, stat, _ = kkt_residual(ev.g, sol.g_r, ev.J, sol.y, ev.c)
        return _Step(v, normal, sol, x_shift, stat)


def solve(problem: ProblemInstance, r: Optional[Regularizer] = None,
          cfg: Optional[SolverConfig] = None, x0=None) -> SolverReport:
    """Run the method from ``x0`` (default ``problem.x0``) until a certificate or the limit."""
    cfg = cfg or SolverConfig()
    r = r or Regularizer.zero()
    t_start = time.perf_counter()
    solver = _Solver(problem, r, cfg)
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    alpha, tau = cfg.alpha0, cfg.tau_init
    sigma_u_bar = cfg.sigma_u + 0.5
    trace: List[IterationRecord] = []
    accepted_count = 0
    status: Optional[Status] = None
    message = ""
    last: Optional[_Step] = None
    last_at_x = False
    cert_point = None

    try:
        ev = evaluate_point(problem, x)
    except EvaluationError as exc:
        return _report(Status.SUBSOLVER_ERROR, problem, r, x, None, None, 0, 0, trace,
                       t_start, alpha, tau, None, f"evaluation failed: {exc}")

    k = 0
    while True:
        if k >= cfg.max_iterations:
            status = Status.MAX_ITERATIONS
            break
        c_norm = float(np.linalg.norm(ev.c))
        jtc_norm = float(np.linalg.norm(ev.J.T @ ev.c))
        if jtc_norm <= cfg.isp_stat_tol and c_norm >= cfg.isp_feas_floor:
            status = Status.INFEASIBLE_STATIONARY
            break

        try:
            st = solver.step(x, ev, alpha)
        except SubsolverError as exc:
            status = Status.SUBSOLVER_ERROR
            message = f"tangential subproblem failed at k={k}: {exc}"
            break
        last, last_at_x = st, True
        sol, v = st.sol, st.v
        u = sol.u
        s = v + u

        if c_norm <= cfg.tol_feas and st.stationarity <= cfg.tol_stat:
            status = Status.KKT_POINT
            cert_point = st.x_shift + u
            break

        flags = []
        if zero_step_test(s, cfg.zero_step_threshold):
            # a vanishing step without the KKT certificate: nothing to update
            flags.append("zero_step_without_certificate")
            log.warning("%s: zero step at k=%d without KKT certificate", problem.name, k)

        r_x = r.value(x)
        # x_shift + u rather than x + s, so exact zeros from the prox survive
        x_trial = st.x_shift + u
        r_xs = r.value(x_trial)
        if not np.any(v):
            t_trial = INF
        else:
            t_trial = tau_trial_value(ev.g, s, alpha, sigma_u_bar, r_x, r_xs,
                                      ev.c, ev.J, v, cfg.sigma_c)
        tau_new = update_tau(tau, t_trial, cfg.eps_tau)
        if not tau_new > 0:
            flags.append("tau_guard")
            tau_new = tau
        dq = model_reduction(s, tau_new, alpha, ev.g, r_x, r_xs, ev.c, ev.J)
        phi_cur = merit_value(tau_new, ev.f, r_x, c_norm)
        try:
            ev_trial = evaluate_point(problem, x_trial)
        except EvaluationError as exc:
            status = Status.SUBSOLVER_ERROR
            message = f"evaluation at trial point failed at k={k}: {exc}"
            break
        phi_trial = merit_value(tau_new, ev_trial.f, r_xs, float(np.linalg.norm(ev_trial.c)))
        accepted = accept_step(phi_trial, phi_cur, dq, cfg.eta)

        trace.append(_record(k, x, alpha, tau, tau_new, t_trial, st, ev, s, dq, phi_cur,
                             phi_trial, accepted, sigma_u_bar, r_x, r_xs, cfg, flags))
        tau = tau_new
        if accepted:
            x, ev = x_trial, ev_trial
            accepted_count += 1
            last_at_x = False
        else:
            alpha *= cfg.xi
        k += 1

    if status is not Status.KKT_POINT and status is not Status.SUBSOLVER_ERROR and not last_at_x:
        try:
            last = solver.step(x, ev, alpha)
        except SubsolverError:
            last = None
    return _report(status, problem, r, x, ev, last, k, accepted_count, trace, t_start,
                   alpha, tau, cert_point, message)


def _record(k, x, alpha, tau_prev, tau, t_trial, st: _Step, ev: PointEval, s, dq,
            phi_cur, phi_trial, accepted, sigma_u_bar, r_x, r_xs, cfg, flags):
    sol, v, u = st.sol, st.v, st.sol.u
    J, c, g = ev.J, ev.c, ev.g
    c_norm = float(np.linalg.norm(c))
    jtc_norm = float(np.linalg.norm(J.T @ c))
    sv = np.linalg.svd(J, compute_uv=False)
    s_max, s_min = float(sv[0]), float(sv[-1])
    norm_v = float(np.linalg.norm(v))
    norm_u = float(np.linalg.norm(u))
    c_jv = float(np.linalg.norm(c + J @ v))
    gain = c_norm - c_jv
    curvature = min(1.0 / (1.0 + s_max ** 2), cfg.kappa_v * alpha)
    if st.normal is not None:
        cauchy_dec = st.normal.model_at_zero - feasibility_model(J, c, st.normal.v_cauchy)
        normal_dec = st.normal.model_at_zero - st.normal.model_at_v
    else:
        cauchy_dec = normal_dec = 0.0
    den = tau_denominator(g, s, alpha, sigma_u_bar, r_x, r_xs)
    return IterationRecord(
        k=k,
        x=x.copy(),
        alpha=alpha,
        tau=tau,
        norm_v=norm_v,
        norm_u=norm_u,
        norm_s=float(np.linalg.norm(s)),
        merit_before=phi_cur,
        merit_after=phi_trial,
        delta_q=dq,
        chi=max(st.stationarity, c_norm),
        chi_bar=max(st.stationarity, jtc_norm),
        accepted=accepted,
        linearized_gain=gain,
        subsolver_iterations=sol.iterations,
        tau_prev=tau_prev,
        tau_trial=t_trial,
        stationarity=st.stationarity,
        norm_c=c_norm,
        norm_jtc=jtc_norm,
        norm_c_plus_jv=c_jv,
        used_newton=bool(st.normal is not None and st.normal.used_newton),
        cauchy_decrease=cauchy_dec,
        normal_decrease=normal_dec,
        cauchy_bound=0.5 * jtc_norm ** 2 * curvature,
        sigma_min=s_min,
        sigma_max=s_max,
        full_rank=bool(s_min > cfg.rank_tol * s_max),
        norm_ju=float(np.linalg.norm(J @ u)),
        v_dot_u=float(v @ u),
        identity_residual=abs(float((g + sol.g_r) @ u) + norm_u ** 2 / alpha),
        denominator=den,
        denominator_bound=((float(np.linalg.norm(g)) + float(np.linalg.norm(sol.g_r))) * norm_v
                           + sigma_u_bar * norm_v ** 2 / alpha),
        delta_q_lower=(cfg.sigma_u * tau / alpha * float(s @ s) + cfg.sigma_c * gain),
        gain_bound=(0.5 * jtc_norm ** 2 * curvature / c_norm) if c_norm > 0 else 0.0,
        regularizer_at_trial=r_xs,
        flags=";".join(flags),
    )


def _report(status, problem, r, x, ev, last, k, accepted_count, trace, t_start,
            alpha, tau, cert_point, message) -> SolverReport:
    if ev is not None:
        obj = ev.f + r.value(x)
        feas = float(np.linalg.norm(ev.c))
    else:
        obj, feas = float("nan"), float("nan")
    if last is not None:
        stat, y, g_r = last.stationarity, last.sol.y, last.sol.g_r
    else:
        stat, y, g_r = float("nan"), None, None
    return SolverReport(
        status=status,
        final_x=x,
        final_objective=float(obj),
        final_feasibility=feas,
        final_stationarity=stat,
        iterations=k,
        accepted_count=accepted_count,
        trace=trace,
        wall_time_seconds=time.perf_counter() - t_start,
        final_alpha=alpha,
        final_tau=tau,
        final_multiplier=y,
        final_subgradient=g_r,
        certificate_point=cert_point,
        message=message,
    )

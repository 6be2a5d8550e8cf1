"""Post-hoc audit of a solver trace against the per-iteration guarantees.

Each check returns violations as ``Violation(check, k, detail)``; an empty
list means the trace is clean.  Tolerances follow the method's analysis with
small absolute slacks for floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

from .driver import IterationRecord, SolverConfig

__all__ = [
    "Violation",
    "contraction_factor",
    "audit_trace",
    "CHECKS",
]

SLACK = 1e-10


@dataclass(frozen=True)
class Violation:
    check: str
    k: int
    detail: str

    def __str__(self):
        return f"[{self.check}] k={self.k}: {self.detail}"


def contraction_factor(sigma_min: float, sigma_max: float, kappa_v: float, alpha: float) -> float:
    """Per-iterate bound ``rho`` with ``||c + J v|| <= rho ||c||`` for full-rank ``J``."""
    if sigma_max <= 0.0:
        return 1.0
    val = max(1.0 - kappa_v * alpha * sigma_min ** 2, 1.0 - (sigma_min / sigma_max) ** 2)
    return math.sqrt(min(1.0, max(0.0, val)))


def _cauchy(rec, cfg):
    if rec.norm_jtc == 0.0:
        return None
    for name, dec in (("cauchy point", rec.cauchy_decrease), ("normal step", rec.normal_decrease)):
        if dec - rec.cauchy_bound < -SLACK:
            return f"{name} decrease {dec:.3e} below bound {rec.cauchy_bound:.3e}"
    return None


def _delta_q(rec, cfg):
    tol = SLACK * max(1.0, abs(rec.delta_q))
    if rec.delta_q - rec.delta_q_lower < -tol:
        return f"delta_q {rec.delta_q:.6e} below lower bound {rec.delta_q_lower:.6e}"
    return None


def _tau_step(rec, cfg):
    if not rec.tau > 0:
        return f"tau {rec.tau!r} not positive"
    if rec.tau > rec.tau_prev:
        return f"tau increased {rec.tau_prev:.6e} -> {rec.tau:.6e}"
    if rec.tau < rec.tau_prev and rec.tau > (1.0 - cfg.eps_tau) * rec.tau_prev * (1 + 1e-15):
        return f"tau decrease {rec.tau_prev:.6e} -> {rec.tau:.6e} smaller than factor 1-eps"
    return None


def _ju(rec, cfg):
    if rec.norm_ju > 1e-10 * max(1.0, rec.norm_u):
        return f"||J u|| = {rec.norm_ju:.3e}"
    return None


def _orth(rec, cfg):
    if abs(rec.v_dot_u) > 1e-9 * max(1.0, rec.norm_v * rec.norm_u):
        return f"|v.u| = {abs(rec.v_dot_u):.3e}"
    return None


def _identity(rec, cfg):
    if rec.identity_residual > 1e-8 * max(1.0, rec.norm_u ** 2 / rec.alpha):
        return f"(g+g_r).u + ||u||^2/alpha = {rec.identity_residual:.3e}"
    return None


def _merit(rec, cfg):
    if rec.accepted and rec.merit_after > rec.merit_before - cfg.eta * rec.delta_q:
        return (f"accepted with merit {rec.merit_before:.10e} -> {rec.merit_after:.10e}, "
                f"eta*dq = {cfg.eta * rec.delta_q:.3e}")
    return None


def _contraction(rec, cfg):
    if not rec.full_rank:
        return None
    rho = contraction_factor(rec.sigma_min, rec.sigma_max, cfg.kappa_v, rec.alpha)
    # J u = 0, so ||c + J s|| = ||c + J v||
    if rec.norm_c_plus_jv > rho * rec.norm_c + SLACK:
        return f"||c+Js|| = {rec.norm_c_plus_jv:.6e} > rho*||c|| = {rho * rec.norm_c:.6e}"
    return None


def _gain(rec, cfg):
    if rec.norm_c == 0.0:
        return None
    if rec.linearized_gain < rec.gain_bound - SLACK:
        return f"gain {rec.linearized_gain:.6e} below {rec.gain_bound:.6e}"
    return None


def _denominator(rec, cfg):
    tol = SLACK * max(1.0, abs(rec.denominator_bound))
    if rec.denominator > rec.denominator_bound + tol:
        return f"denominator {rec.denominator:.6e} above {rec.denominator_bound:.6e}"
    return None


CHECKS = {
    "cauchy_decrease": _cauchy,
    "delta_q_lower_bound": _delta_q,
    "tau_update": _tau_step,
    "tangential_feasibility": _ju,
    "orthogonality": _orth,
    "identity": _identity,
    "merit_decrease": _merit,
    "contraction": _contraction,
    "gain_bound": _gain,
    "denominator_bound": _denominator,
}


def _sequence_checks(trace: Sequence[IterationRecord], cfg: SolverConfig) -> List[Violation]:
    out = []
    for prev, cur in zip(trace, trace[1:]):
        if cur.tau_prev != prev.tau:
            out.append(Violation("tau_update", cur.k,
                                 f"tau_prev {cur.tau_prev!r} != previous tau {prev.tau!r}"))
        expected = prev.alpha if prev.accepted else cfg.xi * prev.alpha
        if cur.alpha != expected:
            out.append(Violation("alpha_update", cur.k,
                                 f"alpha {cur.alpha!r}, expected {expected!r}"))
    if trace and trace[0].alpha != cfg.alpha0:
        out.append(Violation("alpha_update", trace[0].k, "alpha does not start at alpha0"))
    return out


def audit_trace(trace: Iterable[IterationRecord], cfg: Optional[SolverConfig] = None,
                checks: Optional[Iterable[str]] = None) -> List[Violation]:
    """Run the named checks (default: all) over ``trace``."""
    cfg = cfg or SolverConfig()
    trace = list(trace)
    names = list(CHECKS) + ["alpha_update"] if checks is None else list(checks)
    unknown = set(names) - set(CHECKS) - {"alpha_update"}
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    out: List[Violation] = []
    for rec in trace:
        for name in names:
            fn = CHECKS.get(name)
            if fn is None:
                continue
            msg = fn(rec, cfg)
            if msg:
                out.append(Violation(name, rec.k, msg))
    if "alpha_update" in names or "tau_update" in names:
        seq = _sequence_checks(trace, cfg)
        out.extend(v for v in seq if v.check in names)
    return out

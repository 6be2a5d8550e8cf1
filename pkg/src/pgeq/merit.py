"""Exact l2 merit function, its local model and the merit-parameter update."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MeritQuantities",
    "merit_value",
    "model_value",
    "model_reduction",
    "tau_denominator",
    "linearized_gain",
    "tau_trial_value",
    "update_tau",
]

INF = math.inf


@dataclass(frozen=True)
class MeritQuantities:
    phi_current: float
    phi_trial: float
    delta_q: float
    tau_trial: float
    tau: float
    denominator: float
    linearized_gain: float


def merit_value(tau: float, f: float, r_val: float, c_norm: float) -> float:
    """``tau * (f + r) + ||c||``."""
    return tau * (f + r_val) + c_norm


def model_value(s, tau, alpha, f, g, r_at_xs, c, J) -> float:
    """Local model ``q(s, tau)`` of the merit function."""
    s = np.asarray(s, dtype=float)
    return (tau * (f + float(g @ s) + float(s @ s) / (2.0 * alpha) + r_at_xs)
            + float(np.linalg.norm(c + J @ s)))


def model_reduction(s, tau, alpha, g, r_at_x, r_at_xs, c, J) -> float:
    """Predicted merit decrease ``q(0, tau) - q(s, tau)``."""
    s = np.asarray(s, dtype=float)
    obj = float(g @ s) + float(s @ s) / (2.0 * alpha) + r_at_xs - r_at_x
    return -tau * obj + float(np.linalg.norm(c)) - float(np.linalg.norm(c + J @ s))


def tau_denominator(g, s, alpha, sigma_u_bar, r_at_x, r_at_xs) -> float:
    s = np.asarray(s, dtype=float)
    return float(g @ s) + sigma_u_bar * float(s @ s) / alpha + r_at_xs - r_at_x


def linearized_gain(c, J, v) -> float:
    """``||c|| - ||c + J v||``, clamped at zero."""
    return max(0.0, float(np.linalg.norm(c)) - float(np.linalg.norm(c + J @ v)))


def tau_trial_value(g, s, alpha, sigma_u_bar, r_at_x, r_at_xs, c, J, v,
                    sigma_c) -> float:
    """Largest merit parameter for which ``s`` gives enough model decrease.

    Returns ``math.inf`` when the denominator is nonpositive (any tau works).
    """
    den = tau_denominator(g, s, alpha, sigma_u_bar, r_at_x, r_at_xs)
    if den <= 0.0:
        return INF
    return (1.0 - sigma_c) * linearized_gain(c, J, v) / den


def update_tau(tau_prev: float, tau_trial: float, eps_tau: float) -> float:
    if tau_prev <= tau_trial:
        return tau_prev
    return min((1.0 - eps_tau) * tau_prev, tau_trial)

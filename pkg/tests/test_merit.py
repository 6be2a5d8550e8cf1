import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pgeq.merit import (linearized_gain, merit_value, model_reduction, model_value,
                        tau_denominator, tau_trial_value, update_tau)


def test_merit_value_examples():
    assert merit_value(1.0, 0.0, 0.0, 0.0) == 0.0
    assert merit_value(2.0, 3.0, 1.0, 5.0) == 13.0
    assert merit_value(0.5, -4.0, 4.0, 1.0) == 1.0


def test_model_reduction_examples():
    J, c = np.array([[0.0]]), np.array([0.0])
    assert model_reduction(np.zeros(1), 1.0, 1.0, np.array([1.0]), 0.0, 0.0, c, J) == 0.0
    dq = model_reduction(np.array([-1.0]), 1.0, 1.0, np.array([1.0]), 0.0, 0.0, c, J)
    assert dq == 0.5


def test_tau_trial_examples():
    J, c = np.array([[1.0]]), np.array([1.0])
    # denominator -0.3 + 0.6/1e12 < 0: nonpositive branch
    t = tau_trial_value(np.array([-0.3]), np.array([1.0]), 1e12, 0.6, 0.0, 0.0, c, J,
                        np.array([-0.5]), 0.1)
    assert t == math.inf
    # v = 0 gives zero gain; with the denominator bound the nonpositive branch fires
    assert linearized_gain(c, J, np.zeros(1)) == 0.0
    # gain 1 and denominator 0.5
    J2, c2 = np.array([[1.0, 0.0]]), np.array([1.0])
    v = np.array([-1.0, 0.0])
    s = np.array([0.0, 0.5])
    den = tau_denominator(np.array([0.0, 0.5]), s, 1e300, 0.6, 0.0, 0.25)
    assert den == pytest.approx(0.5)
    t = tau_trial_value(np.array([0.0, 0.5]), s, 1e300, 0.6, 0.0, 0.25, c2, J2, v, 0.1)
    assert t == pytest.approx(1.8)


def test_update_tau_examples():
    assert update_tau(1.0, math.inf, 0.1) == 1.0
    assert update_tau(1.0, 0.5, 0.1) == 0.5
    assert update_tau(1.0, 0.95, 0.1) == pytest.approx(0.9)
    assert update_tau(1.0, 1.0, 0.1) == 1.0


def test_linearized_gain_clamped():
    J, c = np.array([[1.0]]), np.array([1.0])
    assert linearized_gain(c, J, np.array([1.0])) == 0.0


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 10), st.floats(0.01, 10))
def test_model_reduction_two_ways(seed, tau, alpha):
    rng = np.random.default_rng(seed)
    n, m = 4, 2
    s, g = rng.standard_normal(n), rng.standard_normal(n)
    c, J = rng.standard_normal(m), rng.standard_normal((m, n))
    f, r0, r1 = rng.standard_normal(), abs(rng.standard_normal()), abs(rng.standard_normal())
    dq = model_reduction(s, tau, alpha, g, r0, r1, c, J)
    q0 = model_value(np.zeros(n), tau, alpha, f, g, r0, c, J)
    q1 = model_value(s, tau, alpha, f, g, r1, c, J)
    assert dq == pytest.approx(q0 - q1, abs=1e-12 * max(1.0, abs(q0)))


@given(st.floats(1e-6, 10), st.one_of(st.just(math.inf), st.floats(0, 20)), st.floats(0.01, 0.99))
def test_update_tau_properties(tau_prev, trial, eps):
    tau = update_tau(tau_prev, trial, eps)
    assert tau <= tau_prev
    if tau < tau_prev:
        assert tau <= (1 - eps) * tau_prev or tau == trial


@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 10), st.floats(1e-3, 1))
def test_lower_bound_on_model_reduction(seed, alpha, tau_prev):
    # s = v + u with v in range(J^T) and u the exact smooth tangential step
    rng = np.random.default_rng(seed)
    n, m = 5, 2
    J, c, g = rng.standard_normal((m, n)), rng.standard_normal(m), rng.standard_normal(n)
    v = -np.linalg.pinv(J) @ c * rng.uniform(0.1, 1.0)
    P = np.eye(n) - np.linalg.pinv(J) @ J
    u = -alpha * P @ g  # minimizer of g.u + |u|^2/(2 alpha) over null(J)
    s = v + u
    sigma_u, sigma_c, eps = 0.1, 0.1, 0.1
    trial = tau_trial_value(g, s, alpha, sigma_u + 0.5, 0.0, 0.0, c, J, v, sigma_c)
    tau = update_tau(tau_prev, trial, eps)
    dq = model_reduction(s, tau, alpha, g, 0.0, 0.0, c, J)
    gain = linearized_gain(c, J, v)
    assert dq >= sigma_u * tau / alpha * (s @ s) + sigma_c * gain - 1e-10 * max(1.0, abs(dq))

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import grid_search_beta, segment_min
from pgeq.errors import DegenerateInput
from pgeq.normal_step import (cauchy_point, compute_normal_step, feasibility_model,
                              newton_normal_step)


def test_cauchy_one_dimensional_exact():
    v, beta = cauchy_point(np.array([[1.0]]), np.array([1.0]), 2.0, 1.0)
    assert beta == 1.0
    np.testing.assert_allclose(v, [-1.0])
    assert feasibility_model(np.array([[1.0]]), np.array([1.0]), v) == 0.0


def test_cauchy_capped_by_trust_region():
    J, c = np.array([[1.0, 0.0]]), np.array([2.0])
    v, beta = cauchy_point(J, c, 0.5, 1.0)
    assert beta == 0.5
    np.testing.assert_allclose(v, [-1.0, 0.0])
    beta_grid, _ = grid_search_beta(J, c, 0.5)
    assert beta == pytest.approx(beta_grid, abs=1e-5)


def test_cauchy_zero_curvature_branch():
    # ||J^T c||^2 is a nonzero denormal while ||J J^T c||^2 underflows to 0
    J = np.array([[1e-160, 0.0]])
    v, beta = cauchy_point(J, np.array([1.0]), 3.0, 1.0)
    assert beta == 3.0
    assert v[0] == -3e-160


def test_cauchy_rejects_stationary_input():
    with pytest.raises(DegenerateInput):
        cauchy_point(np.array([[1.0, 0.0]]), np.array([0.0]), 1.0, 1.0)


def test_newton_examples():
    np.testing.assert_allclose(newton_normal_step(np.array([[1.0, 0.0]]), np.array([2.0])),
                               [-2.0, 0.0])
    assert newton_normal_step(np.zeros((2, 2)), np.array([1.0, 2.0])) is None
    c = np.array([0.3, -1.2, 4.0])
    np.testing.assert_allclose(newton_normal_step(np.eye(3), c), -c)


def test_newton_against_dense_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m, n = rng.integers(1, 4), rng.integers(4, 7)
        J, c = rng.standard_normal((m, n)), rng.standard_normal(m)
        expect = J.T @ np.linalg.inv(J @ J.T) @ (-c)
        np.testing.assert_allclose(newton_normal_step(J, c), expect, atol=1e-10)


def test_newton_rank_deficient_duplicate_row():
    J = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]])
    assert newton_normal_step(J, np.array([1.0, 2.0])) is None


def test_tie_goes_to_projected_newton():
    J, c = np.array([[1.0, 0.0]]), np.array([2.0])
    res = compute_normal_step(J, c, 0.5, 1.0)
    np.testing.assert_allclose(res.v, [-1.0, 0.0])
    assert res.used_newton
    assert res.model_at_v == pytest.approx(0.5)
    assert res.model_at_cauchy == pytest.approx(0.5)
    # the segment oracle agrees that 0.5 is the best value within the radius
    _, best = segment_min(J, c, np.zeros(2), np.array([-1.0, 0.0]))
    assert res.model_at_v == pytest.approx(best, abs=1e-9)


def test_newton_inside_radius():
    res = compute_normal_step(np.array([[1.0]]), np.array([1.0]), 2.0, 1.0)
    np.testing.assert_allclose(res.v, [-1.0])
    assert res.model_at_v == 0.0
    assert res.used_newton


def test_rank_deficient_uses_cauchy():
    J = np.array([[1.0, 1.0], [2.0, 2.0]])
    res = compute_normal_step(J, np.array([1.0, 1.0]), 1000.0, 10.0)
    assert not res.used_newton
    np.testing.assert_array_equal(res.v, res.v_cauchy)


def test_compute_rejects_stationary_input():
    with pytest.raises(DegenerateInput):
        compute_normal_step(np.array([[0.0, 0.0]]), np.array([1.0]), 1.0, 1.0)


@st.composite
def normal_data(draw):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(1, 6))
    m = draw(st.integers(1, n))
    J = rng.standard_normal((m, n)) * draw(st.sampled_from([1e-2, 1.0, 30.0]))
    if draw(st.booleans()) and m > 1:
        J[-1] = 2.0 * J[0]
    c = rng.standard_normal(m)
    kappa_alpha = draw(st.sampled_from([1e-4, 1e-2, 1.0, 1e4]))
    return J, c, kappa_alpha


@given(normal_data())
def test_normal_step_properties(data):
    J, c, ka = data
    jtc = J.T @ c
    if np.linalg.norm(jtc) == 0.0:
        return
    res = compute_normal_step(J, c, ka, 1.0)
    v = res.v
    # trust region
    assert np.linalg.norm(v) <= res.trust_radius * (1 + 1e-12)
    # no worse than the Cauchy point, and never worse than v = 0
    assert res.model_at_v <= res.model_at_cauchy + 1e-12
    assert np.linalg.norm(c + J @ v) <= np.linalg.norm(c) + 1e-12
    # row space of J
    P = np.eye(J.shape[1]) - np.linalg.pinv(J) @ J
    assert np.linalg.norm(P @ v) <= 1e-9 * max(1.0, np.linalg.norm(v))
    # Cauchy decrease bound
    curvature = min(1.0 / (1.0 + np.linalg.norm(J.T @ J, 2)), ka)
    bound = 0.5 * np.linalg.norm(jtc) ** 2 * curvature
    assert res.model_at_zero - res.model_at_cauchy >= bound - 1e-10
    assert res.model_at_zero - res.model_at_v >= bound - 1e-10
    assert res.model_at_v < res.model_at_zero
    assert np.any(v != 0.0)


@given(normal_data())
def test_contraction_bound_on_full_rank(data):
    J, c, ka = data
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        return
    res = compute_normal_step(J, c, ka, 1.0)
    rho = np.sqrt(min(1.0, max(0.0, max(1 - ka * sv[-1] ** 2, 1 - (sv[-1] / sv[0]) ** 2))))
    assert np.linalg.norm(c + J @ res.v) <= rho * np.linalg.norm(c) + 1e-10


@given(normal_data())
def test_cauchy_beta_matches_grid_oracle(data):
    J, c, ka = data
    if np.linalg.norm(J.T @ c) == 0.0:
        return
    v, beta = cauchy_point(J, c, ka, 1.0)
    _, best = grid_search_beta(J, c, ka, points=20001)
    assert feasibility_model(J, c, v) <= best + 1e-12

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import (dense_kkt_solve, random_tangential_instance, tangential_objective,
                     tangential_oracle)
from pgeq import kernels
from pgeq.errors import FactorizationError, SubsolverError
from pgeq.problem import Regularizer, subgradient_membership
from pgeq.tangential import (SubsolverConfig, TangentialSolver, kkt_factor,
                             recover_multiplier, solve_tangential)

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


def _reg(lam, mask):
    return Regularizer.l1(lam, np.flatnonzero(mask)) if lam > 0 and mask.any() else Regularizer.zero()


def _check_certificate(sol, g, J, alpha, r, x_shift, tol=1e-10):
    res = g + sol.u / alpha + sol.g_r - J.T @ sol.y
    assert np.linalg.norm(res) <= tol
    assert np.linalg.norm(J @ sol.u) <= tol
    assert subgradient_membership(r, x_shift + sol.u, sol.g_r, tol)
    nu = float(sol.u @ sol.u)
    assert abs((g + sol.g_r) @ sol.u + nu / alpha) <= 1e-8 * max(1.0, nu / alpha)


def test_smooth_example():
    J, g = np.array([[1.0, 0.0]]), np.array([1.0, 1.0])
    sol = solve_tangential(g, J, 1.0, Regularizer.zero(), np.array([5.0, -2.0]))
    np.testing.assert_allclose(sol.u, [0.0, -1.0], atol=1e-14)
    np.testing.assert_allclose(sol.y, [1.0], atol=1e-14)
    np.testing.assert_array_equal(sol.g_r, [0.0, 0.0])


@pytest.mark.parametrize("polish", [True, False])
def test_l1_example_stays_at_zero(polish):
    J, g = np.array([[1.0, 0.0]]), np.array([1.0, 1.0])
    r = Regularizer.l1(2.0, [1])
    cfg = SubsolverConfig(polish=polish)
    sol = solve_tangential(g, J, 1.0, r, np.zeros(2), cfg)
    np.testing.assert_allclose(sol.u, [0.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(sol.g_r, [0.0, -1.0], atol=1e-9)
    np.testing.assert_allclose(sol.y, [1.0], atol=1e-9)
    _check_certificate(sol, g, J, 1.0, r, np.zeros(2))


def test_square_invertible_jacobian_gives_zero_step():
    rng = np.random.default_rng(0)
    J = rng.standard_normal((3, 3))
    g, xs = rng.standard_normal(3), np.array([0.5, 0.0, -1.0])
    r = Regularizer.l1(1.0, [0, 1])
    sol = solve_tangential(g, J, 1.0, r, xs)
    np.testing.assert_allclose(sol.u, 0.0, atol=1e-12)
    _check_certificate(sol, g, J, 1.0, r, xs)


def test_kkt_factor_examples():
    fac = kkt_factor(np.array([[1.0, 0.0]]), 1.0, 1.0)
    np.testing.assert_array_equal(fac.matrix, [[2, 0, 1], [0, 2, 0], [1, 0, 0]])
    np.testing.assert_array_equal(fac.solve(np.zeros(3)), np.zeros(3))
    with pytest.raises(FactorizationError):
        kkt_factor(np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]]), 1.0, 1.0)
    with pytest.raises(ValueError):
        kkt_factor(np.array([[1.0, 0.0]]), -1.0, 1.0)


def test_kkt_factor_against_dense_inverse():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, min(3, n) + 1))
        J = rng.standard_normal((m, n))
        alpha, rho = float(rng.choice([0.1, 1, 10])), float(rng.choice([0.5, 1, 4]))
        rhs = rng.standard_normal(n + m)
        fac = kkt_factor(J, alpha, rho)
        x = fac.solve(rhs)
        assert np.linalg.norm(fac.matrix @ x - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs)) * 10
        np.testing.assert_allclose(x, dense_kkt_solve(J, alpha, rho, rhs), atol=1e-9)


def test_nullspace_operator_is_scaled_projector():
    rng = np.random.default_rng(6)
    J = rng.standard_normal((2, 5))
    fac = kkt_factor(J, 2.0, 1.0)
    P = np.eye(5) - J.T @ np.linalg.inv(J @ J.T) @ J
    np.testing.assert_allclose(fac.nullspace_operator, P / 1.5, atol=1e-12)


def test_recover_multiplier_examples():
    J = np.array([[1.0, 0.0]])
    y = recover_multiplier(J, np.array([1.0, 1.0]), np.zeros(2), np.zeros(2), 1.0)
    np.testing.assert_allclose(y, [1.0])
    y = recover_multiplier(np.array([[2.0, 0.0]]), np.array([4.0, 0.0]), np.zeros(2), np.zeros(2), 1.0)
    np.testing.assert_allclose(y, [2.0])
    Jr = np.array([[1.0, 2.0, 0.5], [0.0, 1.0, -1.0]])
    yhat = np.array([0.7, -2.0])
    y = recover_multiplier(Jr, Jr.T @ yhat, np.zeros(3), np.zeros(3), 1.0)
    np.testing.assert_allclose(y, yhat, atol=1e-12)


def test_iteration_limit_raises():
    rng = np.random.default_rng(2)
    g, J = rng.standard_normal(6), rng.standard_normal((2, 6))
    r = Regularizer.l1(1.0, [0, 1, 2, 3])
    cfg = SubsolverConfig(polish=False, max_inner_iterations=2)
    with pytest.raises(SubsolverError):
        solve_tangential(g, J, 1.0, r, rng.standard_normal(6), cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        SubsolverConfig(sub_tol_stat=0.0)
    with pytest.raises(ValueError):
        SubsolverConfig(max_inner_iterations=0)
    with pytest.raises(ValueError):
        SubsolverConfig(penalty_rho=-1.0)


def test_warm_start_reuses_pattern():
    rng = np.random.default_rng(9)
    J = rng.standard_normal((2, 5))
    g, xs = rng.standard_normal(5), np.array([0.0, 0.0, 1.0, -2.0, 0.5])
    r = Regularizer.l1(5.0, [0, 1, 2])
    solver = TangentialSolver()
    first = solver.solve(g, J, 1.0, r, xs)
    second = solver.solve(g, J, 1.0, r, xs)
    assert second.iterations == 0 and second.polished
    np.testing.assert_allclose(first.u, second.u, atol=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(BACKENDS), st.booleans())
def test_matches_sign_pattern_oracle(seed, backend, polish):
    g, J, alpha, lam, mask, xs = random_tangential_instance(np.random.default_rng(seed))
    r = _reg(lam, mask)
    sol = solve_tangential(g, J, alpha, r, xs, SubsolverConfig(backend=backend, polish=polish))
    u_star, best = tangential_oracle(g, J, alpha, lam, mask, xs)
    assert np.linalg.norm(sol.u - u_star) <= 1e-6
    val = tangential_objective(sol.u, g, alpha, lam, mask, xs)
    assert best - 1e-9 <= val <= best + 1e-9
    _check_certificate(sol, g, J, alpha, r, xs)


@given(st.integers(0, 2 ** 32 - 1))
def test_row_scaling_leaves_solution_unchanged(seed):
    g, J, alpha, lam, mask, xs = random_tangential_instance(np.random.default_rng(seed))
    r = _reg(lam, mask)
    a = solve_tangential(g, J, alpha, r, xs)
    b = solve_tangential(g, 10.0 * J, alpha, r, xs)
    assert np.linalg.norm(a.u - b.u) <= 1e-9

import math

import numpy as np
import pytest

from pgeq import (ProblemInstance, Regularizer, SolverConfig, Status, SubsolverConfig,
                  instantiate, reformulate, solve)
from pgeq.driver import accept_step, kkt_residual, zero_step_test
from pgeq.problem import subgradient_membership


def test_defaults_are_table_one():
    cfg = SolverConfig()
    assert (cfg.alpha0, cfg.tau_init, cfg.kappa_v, cfg.sigma_c, cfg.eps_tau, cfg.xi,
            cfg.eta, cfg.sigma_u) == (10, 1, 1000, 0.1, 0.1, 0.5, 1e-4, 0.1)
    assert (cfg.max_iterations, cfg.tol_feas, cfg.tol_stat) == (1000, 1e-6, 1e-6)
    assert (cfg.isp_feas_floor, cfg.isp_stat_tol) == (1e-2, 1e-12)


@pytest.mark.parametrize("kw", [dict(alpha0=0.0), dict(sigma_c=1.0), dict(xi=0.0),
                                dict(sigma_u=0.6), dict(eta=-1.0), dict(max_iterations=-1),
                                dict(zero_step_threshold=-1.0)])
def test_config_ranges(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_accept_step_examples():
    assert accept_step(9.0, 10.0, 1.0, 1e-4)
    assert not accept_step(10.0, 10.0, 1.0, 1e-4)
    assert accept_step(10.0 - 1e-4, 10.0, 1.0, 1e-4)


def test_kkt_residual_examples():
    J = np.array([[1.0, 0.0]])
    assert kkt_residual(np.array([1.0, 0.0]), np.zeros(2), J, np.array([1.0]), np.zeros(1)) == (0, 0, 0)
    chi, stat, feas = kkt_residual(np.array([1.0, 0.0]), np.zeros(2), J, np.array([1.0]),
                                   np.array([0.3]))
    assert (chi, stat, feas) == (0.3, 0.0, 0.3)
    chi, stat, feas = kkt_residual(np.array([0.5, 0.0]), np.zeros(2), J, np.array([0.0]),
                                   np.array([0.2]))
    assert (chi, stat, feas) == (0.5, 0.5, 0.2)


def test_zero_step_examples():
    assert zero_step_test(np.zeros(3), 1e-12)
    assert zero_step_test(np.array([1e-14]), 1e-12)
    assert not zero_step_test(np.array([1e-3]), 1e-12)


def _one_dim(f, g, c, J, x0, name="p"):
    return ProblemInstance(name=name, n=1, m=1, eval_objective=f,
                           eval_gradient=g, eval_constraints=c, eval_jacobian=J,
                           x0=np.array([x0]))


def test_feasible_stationary_start_terminates_immediately():
    e = instantiate("circle-min-x")
    rep = solve(e.base_problem, x0=np.array([-2.0, 0.0]))
    assert rep.status is Status.KKT_POINT
    assert rep.iterations == 0 and rep.trace == []
    np.testing.assert_allclose(rep.final_multiplier, [-0.25], atol=1e-12)


def test_infeasible_circle_reports_infeasible_stationary():
    p = _one_dim(lambda x: x[0], lambda x: np.array([1.0]),
                 lambda x: np.array([x[0] ** 2 + 1.0]), lambda x: np.array([[2 * x[0]]]), 1.0)
    rep = solve(p)
    assert rep.status is Status.INFEASIBLE_STATIONARY
    assert rep.final_feasibility >= 1e-2
    x = rep.final_x[0]
    assert abs(2 * x * (x * x + 1)) <= 1e-12


def test_max_iterations():
    e = instantiate("hs7")
    rep = solve(e.base_problem, cfg=SolverConfig(max_iterations=3))
    assert rep.status is Status.MAX_ITERATIONS
    assert rep.iterations == 3 and len(rep.trace) == 3
    assert math.isfinite(rep.final_stationarity)


def test_evaluation_failure_maps_to_error_status():
    p = _one_dim(lambda x: math.log(x[0]) if x[0] > 0 else math.nan,
                 lambda x: np.array([1.0 / x[0]]),
                 lambda x: np.array([x[0] - 5.0]), lambda x: np.array([[1.0]]), 1.0)
    rep = solve(p, x0=np.array([-1.0]))  # log of a negative number at the start
    assert rep.status is Status.SUBSOLVER_ERROR
    assert "evaluation" in rep.message


def test_rank_deficient_base_problem_is_error():
    rep = solve(instantiate("dup-circle").base_problem)
    assert rep.status is Status.SUBSOLVER_ERROR
    assert "rank deficient" in rep.message


def test_alpha_halves_exactly_on_rejections():
    rep = solve(instantiate("hs7").base_problem)
    tr = rep.trace
    assert any(not t.accepted for t in tr)
    for a, b in zip(tr, tr[1:]):
        assert b.alpha == (a.alpha if a.accepted else 0.5 * a.alpha)
    assert rep.accepted_count == sum(t.accepted for t in tr)


def test_kkt_status_certificate():
    e = instantiate("hs39")
    ref = reformulate(e)
    rep = solve(ref.problem, ref.regularizer)
    assert rep.status is Status.KKT_POINT
    assert rep.final_feasibility <= 1e-6 and rep.final_stationarity <= 1e-6
    assert subgradient_membership(ref.regularizer, rep.certificate_point,
                                  rep.final_subgradient, 1e-6)


def test_runs_are_deterministic():
    ref = reformulate(instantiate("rosenbrock-eq"))
    a = solve(ref.problem, ref.regularizer)
    b = solve(ref.problem, ref.regularizer)
    assert a.iterations == b.iterations
    np.testing.assert_array_equal(a.final_x, b.final_x)
    assert [t.tau for t in a.trace] == [t.tau for t in b.trace]


def test_zero_step_without_certificate_is_flagged():
    # without the pattern polish the splitting iterates leave a slack at ~1e-10,
    # the steps shrink to nothing while the certificate keeps failing
    ref = reformulate(instantiate("hs28"))
    cfg = SolverConfig(max_iterations=120, subsolver=SubsolverConfig(polish=False))
    rep = solve(ref.problem, ref.regularizer, cfg)
    assert any("zero_step_without_certificate" in t.flags for t in rep.trace)


def test_regularizer_default_is_zero():
    e = instantiate("hs48")
    a = solve(e.base_problem)
    b = solve(e.base_problem, Regularizer.zero())
    np.testing.assert_array_equal(a.final_x, b.final_x)

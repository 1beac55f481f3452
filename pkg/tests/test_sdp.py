import numpy as np
import pytest

from ramstap.scene import space_time_steering
from ramstap.sdp import (
    SdpProblem, SolverSettings, kkt_residuals, objective_value, solve_weighted_subproblem)

TIGHT = SolverSettings(tolerance=1e-8, max_iterations=20000)


def random_instance(seed, N=2, M=2, K=2, eps_fraction=0.3):
    rng = np.random.default_rng(seed)
    nm = N * M
    B = rng.standard_normal((nm, nm)) + 1j * rng.standard_normal((nm, nm))
    W = B @ B.conj().T / nm + 0.1 * np.eye(nm)
    X = rng.standard_normal((nm, K)) + 1j * rng.standard_normal((nm, K))
    return SdpProblem(W, X, eps_fraction * np.linalg.norm(X) ** 2, N, M)


@pytest.mark.parametrize("x", [1.0, 2.5 - 1.0j, 1e-3j, 40.0])
def test_scalar_instance_matches_am_gm(x):
    # N = M = K = 1, W = 1, eps = 0: phi * u >= |x|^2, minimize u + phi -> u = phi = |x|.
    sol = solve_weighted_subproblem(SdpProblem(np.eye(1), np.array([[x]]), 0.0, 1, 1), TIGHT)
    assert sol.converged
    assert sol.u[0, 0].real == pytest.approx(abs(x), rel=1e-6)
    assert sol.phi[0, 0].real == pytest.approx(abs(x), rel=1e-6)
    assert sol.objective == pytest.approx(2 * abs(x), rel=1e-6)


def test_scalar_instance_with_weight_and_radius():
    # tr(W S) + phi with W = w: minimum over the ball |xc - x| <= r is 2 sqrt(w) (|x| - r).
    w, x, r = 4.0, 3.0, 1.0
    sol = solve_weighted_subproblem(SdpProblem(np.array([[w]]), np.array([[x]]), r ** 2, 1, 1),
                                    TIGHT)
    assert sol.objective == pytest.approx(2 * np.sqrt(w) * (x - r), rel=1e-6)
    assert abs(sol.x_c[0, 0]) == pytest.approx(x - r, rel=1e-6)


def test_zero_data_gives_zero_solution():
    sol = solve_weighted_subproblem(SdpProblem(np.eye(4), np.zeros((4, 2)), 0.0, 2, 2))
    assert sol.converged and sol.objective == 0.0
    assert sol.u.norm() == 0 and np.all(sol.x_c == 0) and np.all(sol.phi == 0)


def test_data_inside_ball_gives_zero_solution():
    X = np.ones((4, 1))
    sol = solve_weighted_subproblem(SdpProblem(np.eye(4), X, 4.5, 2, 2))
    assert sol.objective == 0.0 and np.all(sol.x_c == 0)


def test_single_atom_recovery():
    s = space_time_steering(0.1, 0.2, 4, 4)
    sol = solve_weighted_subproblem(SdpProblem(np.eye(16), 3 * s[:, None], 0.0, 4, 4))
    assert sol.converged
    w, V = np.linalg.eigh(sol.toeplitz)
    assert np.all(np.abs(w[:-1]) < 1e-4 * w[-1])
    top = V[:, -1]
    collinearity = abs(np.vdot(top, s)) / np.linalg.norm(s)
    assert collinearity == pytest.approx(1.0, abs=1e-4)
    # the atomic norm of 3 s is 3 ||s|| ... objective tr(S) + phi = 2 * 3 * sqrt(NM)
    assert sol.objective == pytest.approx(2 * 3 * 4, rel=1e-4)


@pytest.mark.parametrize("seed", range(8))
def test_kkt_residuals_on_random_instances(seed):
    problem = random_instance(seed, N=2 + seed % 2, M=2, K=1 + seed % 3)
    sol = solve_weighted_subproblem(problem)
    assert sol.converged
    res = kkt_residuals(problem, sol)
    assert res.max_violation() <= 1e-6
    assert sol.primal_residual <= 1e-6 and sol.dual_residual <= 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_solution_beats_feasible_perturbations(seed):
    # Any feasible point built from the solution's structure has a larger objective.
    problem = random_instance(seed, K=1)
    sol = solve_weighted_subproblem(problem, TIGHT)
    S = sol.toeplitz
    for scale in (1.05, 1.2):
        S2 = scale * S
        phi2 = sol.x_c.conj().T @ np.linalg.pinv(S2) @ sol.x_c
        assert objective_value(problem.weight, phi2, S2) >= sol.objective - 1e-6


@pytest.mark.parametrize("c", [0.25, 3.0, 100.0])
def test_scaling_equivariance(c):
    problem = random_instance(11, N=2, M=3, K=2)
    base = solve_weighted_subproblem(problem, TIGHT)
    scaled = solve_weighted_subproblem(
        SdpProblem(problem.weight, c * problem.data, c ** 2 * problem.fidelity_radius, 2, 3), TIGHT)
    np.testing.assert_allclose(scaled.u.values, c * base.u.values, rtol=1e-4,
                               atol=1e-4 * c * base.u.norm())
    np.testing.assert_allclose(scaled.phi, c * base.phi, rtol=1e-4, atol=1e-4 * c)
    np.testing.assert_allclose(scaled.x_c, c * base.x_c, rtol=1e-4, atol=1e-4 * c)


def test_warm_start_reaches_same_solution():
    problem = random_instance(5, N=2, M=2, K=2)
    cold = solve_weighted_subproblem(problem, TIGHT)
    reweighted = SdpProblem(np.linalg.inv(cold.toeplitz + np.eye(4)), problem.data,
                            problem.fidelity_radius, 2, 2)
    from_cold = solve_weighted_subproblem(reweighted, TIGHT)
    from_warm = solve_weighted_subproblem(reweighted, TIGHT, warm_start=cold)
    assert from_warm.converged
    assert from_warm.objective == pytest.approx(from_cold.objective, rel=1e-5)


def test_fidelity_constraint_holds():
    problem = random_instance(2, K=3, eps_fraction=0.1)
    sol = solve_weighted_subproblem(problem)
    gap = np.linalg.norm(sol.x_c - problem.data) ** 2
    assert gap <= problem.fidelity_radius * (1 + 1e-6)


def test_singular_weight_is_supported():
    problem = random_instance(3)
    W = np.zeros((4, 4))
    W[0, 0] = 1.0
    sol = solve_weighted_subproblem(SdpProblem(W, problem.data, problem.fidelity_radius, 2, 2))
    assert sol.converged
    assert kkt_residuals(SdpProblem(W, problem.data, problem.fidelity_radius, 2, 2),
                         sol).max_violation() <= 1e-6


def test_iteration_cap_reports_nonconvergence():
    problem = random_instance(4, N=3, M=3, K=2)
    sol = solve_weighted_subproblem(problem, SolverSettings(max_iterations=3))
    assert not sol.converged and sol.iterations == 3
    assert sol.primal_residual > 0


@pytest.mark.parametrize("W, msg", [
    (np.diag([1.0, -1.0, 1.0, 1.0]), "positive semidefinite"),
    (np.triu(np.ones((4, 4))), "Hermitian"),
    (np.eye(3), "4x4")])
def test_problem_validation(W, msg):
    with pytest.raises(ValueError, match=msg):
        SdpProblem(W, np.ones((4, 1)), 0.0, 2, 2)


def test_problem_rejects_bad_data_shape():
    with pytest.raises(ValueError, match="data"):
        SdpProblem(np.eye(4), np.ones((5, 1)), 0.0, 2, 2)


@pytest.mark.parametrize("kwargs", [{"rho": 0}, {"over_relaxation": 2.0}, {"tolerance": -1},
                                    {"max_iterations": 0}])
def test_settings_validation(kwargs):
    with pytest.raises(ValueError):
        SolverSettings(**kwargs)

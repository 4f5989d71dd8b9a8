import numpy as np
import pytest
from scipy.integrate import simpson, trapezoid

from spadp import bvp_oracle
from spadp.errors import ConfigError, UnreachableBoundaryError
from spadp.odeint import simulate
from spadp.systems import BoundarySpec, LTVSystem, mass_example


def series_expm(m, terms=30):
    """exp(m) by scaling and squaring around a truncated Taylor series."""
    s = max(0, int(np.ceil(np.log2(max(np.abs(m).sum(axis=1).max(), 1e-16) / 0.5))))
    a = m / 2.0**s
    out = np.eye(len(m))
    term = np.eye(len(m))
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def min_energy():
    return LTVSystem.constant(0.0, 1.0, 0.0, 1.0), BoundarySpec([0.0], [1.0], 1.0)


@pytest.fixture(scope="module")
def mass_solutions():
    sys, spec = mass_example()
    return sys, {eps: bvp_oracle.solve_bvp(sys, spec.with_epsilon(eps)) for eps in (0.9, 0.5, 0.1)}


def test_transition_nilpotent():
    sys, _ = min_energy()
    np.testing.assert_allclose(bvp_oracle.transition_matrix(sys, 1.0), [[1.0, -1.0], [0.0, 1.0]], atol=1e-14)


@pytest.mark.parametrize("T", [0.5, 2.0, 4.0])
def test_transition_nilpotent_scaled(T):
    sys, _ = min_energy()
    phi = bvp_oracle.transition_matrix(sys, 1.0 / T)
    assert phi[0, 1] == pytest.approx(-T, abs=1e-12)


def test_transition_matches_series(rng):
    for n in (1, 2):
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, 1))
        sys = LTVSystem.constant(A, B, np.eye(n), np.eye(1))
        eps = 0.5
        expected = series_expm(bvp_oracle.hamiltonian_matrix(sys, 0.0) / eps)
        np.testing.assert_allclose(bvp_oracle.transition_matrix(sys, eps), expected, atol=1e-8)


def test_series_oracle_sanity():
    np.testing.assert_allclose(series_expm(np.diag([1.0, -2.0])), np.diag(np.exp([1.0, -2.0])), rtol=1e-13)


def test_symplectic_determinant(rng):
    A = rng.standard_normal((2, 2))
    sys = LTVSystem.constant(A, rng.standard_normal((2, 1)), np.eye(2), np.eye(1))
    assert np.trace(bvp_oracle.hamiltonian_matrix(sys, 0.3)) == pytest.approx(0.0, abs=1e-14)
    assert abs(np.linalg.det(bvp_oracle.transition_matrix(sys, 0.5)) - 1.0) <= 1e-6


def test_min_energy_closed_form():
    sys, spec = min_energy()
    sol = bvp_oracle.solve_bvp(sys, spec)
    assert sol.p0[0] == pytest.approx(-1.0, abs=1e-8)
    np.testing.assert_allclose(sol.trajectory.controls, 1.0, atol=1e-8)
    assert sol.cost == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(sol.trajectory.states[:, 0], sol.trajectory.times, atol=1e-8)
    costate, stationarity = bvp_oracle.optimality_residual(sol, sys)
    assert costate <= 1e-10 and stationarity <= 1e-10


def test_symmetric_instance_dips():
    sys = LTVSystem.constant(0.0, 1.0, 1.0, 1.0)
    sol = bvp_oracle.solve_bvp(sys, BoundarySpec([1.0], [1.0], 0.5))
    x = sol.trajectory.states[:, 0]
    assert sol.boundary_residual <= 1e-6
    assert sol.cost > 0
    assert x.min() < 1.0
    np.testing.assert_allclose(x, x[::-1], atol=1e-8)


def test_mass_pontryagin(mass_solutions):
    sys, sols = mass_solutions
    for sol in sols.values():
        assert sol.boundary_residual <= 1e-6
        costate, stationarity = bvp_oracle.optimality_residual(sol, sys)
        assert costate <= 1e-5
        assert stationarity <= 1e-5


def test_mass_grid_refinement(mass_solutions):
    sys, sols = mass_solutions
    _, spec = mass_example(0.1)
    fine = bvp_oracle.solve_bvp(sys, spec, h=5e-4)
    assert abs(fine.cost - sols[0.1].cost) <= 1e-6


def test_corrupted_control_detected(mass_solutions):
    sys, sols = mass_solutions
    sol = sols[0.5]
    sol.trajectory.controls += 0.1
    try:
        _, stationarity = bvp_oracle.optimality_residual(sol, sys)
    finally:
        sol.trajectory.controls -= 0.1
    assert stationarity >= 0.1 - 1e-6


def _perturbed_cost(sys, sol, delta):
    """Cost and terminal state of ``u* + delta`` run alongside the optimal pair."""
    eps = sol.epsilon

    def f(tau, z, u):
        x, p, y = z[0:1], z[1:2], z[2:3]
        A, B, Q, R = sys.matrices(tau)
        ustar = -np.linalg.solve(R, B.T @ p)
        v = ustar + delta(tau)
        return np.concatenate([A @ x + B @ ustar, -Q @ x - A.T @ p, A @ y + B @ v]) / eps

    def cost(tau, z, u):
        A, B, Q, R = sys.matrices(tau)
        y = z[2:3]
        v = -np.linalg.solve(R, B.T @ z[1:2]) + delta(tau)
        return y @ Q @ y + v @ R @ v

    z0 = np.concatenate([sol.trajectory.states[0], sol.p0, sol.trajectory.states[0]])
    traj = simulate(f, None, 0.0, 1.0, z0, 1e-3, running_cost=cost, blowup=np.inf)
    return traj.cost / eps, traj.states[-1, 2]


def test_cost_optimal_under_admissible_perturbations(mass_solutions, rng):
    sys, sols = mass_solutions
    sol = sols[0.5]
    xT = sol.trajectory.states[-1, 0]
    zero = lambda tau: np.zeros(1)
    base, _ = _perturbed_cost(sys, sol, zero)
    assert base == pytest.approx(sol.cost, abs=1e-8)

    def effect(d):
        # terminal response to d alone is linear in d
        return _perturbed_cost(sys, sol, d)[1] - xT

    grid = np.linspace(0, 1, 2001)
    for _ in range(5):
        c1, c2 = rng.standard_normal(2)
        w1, w2 = rng.uniform(1, 6, 2)
        d1 = lambda t, c=c1, w=w1: np.array([c * np.sin(w * t) + 0.3])
        d2 = lambda t, c=c2, w=w2: np.array([np.cos(w * t) + c * t])
        k = effect(d1) / effect(d2)
        raw = lambda t: d1(t) - k * d2(t)
        scale = np.sqrt(1e-4 / trapezoid([raw(t)[0] ** 2 for t in grid], grid))
        delta = lambda t: scale * raw(t)
        cost, x1 = _perturbed_cost(sys, sol, delta)
        assert abs(x1 - xT) <= 1e-8
        assert cost >= sol.cost - 1e-9


def test_epsilon_floor():
    sys, spec = mass_example(0.04)
    with pytest.raises(ConfigError):
        bvp_oracle.solve_bvp(sys, spec)


def test_unreachable_boundary():
    sys = LTVSystem.constant(-1.0, 0.0, 1.0, 1.0)
    with pytest.raises(UnreachableBoundaryError):
        bvp_oracle.solve_bvp(sys, BoundarySpec([0.0], [1.0], 0.5))


def test_cost_matches_control_energy(mass_solutions):
    # J recomputed from the recorded trajectory with Simpson weights
    sys, sols = mass_solutions
    sol = sols[0.9]
    traj = sol.trajectory
    integrand = traj.states[:, 0] ** 2 + traj.controls[:, 0] ** 2
    assert sol.cost == pytest.approx(simpson(integrand, x=traj.times) / sol.epsilon, abs=1e-9)


def test_smallest_supported_epsilon():
    sys, spec = mass_example(0.05)
    sol = bvp_oracle.solve_bvp(sys, spec)
    assert sol.boundary_residual <= 1e-6
    assert max(bvp_oracle.optimality_residual(sol, sys)) <= 1e-5
    assert sol.trajectory.states[0, 0] == 0.5 and sol.trajectory.states[-1, 0] == 0.9


def test_backward_map_inverts_forward(rng):
    sys = LTVSystem.constant(rng.standard_normal((2, 2)), rng.standard_normal((2, 1)), np.eye(2), np.eye(1))
    fwd = bvp_oracle.transition_matrix(sys, 0.5)
    bwd = bvp_oracle.transition_matrix(sys, 0.5, reverse=True)
    np.testing.assert_allclose(fwd @ bwd, np.eye(4), atol=1e-8)

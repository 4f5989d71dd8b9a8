"""Exact two-point boundary solution of the LTV problem by transition-matrix shooting.

The state/costate pair obeys ``eps d/dtau [x; p] = M_H(tau) [x; p]`` with the
Hamiltonian matrix ``M_H = [[A, -B R^-1 B'], [-Q, -A']]`` and control
``u = -R^-1 B' p``. Because the dynamics are linear, ``x(1) = Phi11 x0 +
Phi12 p0`` fixes the unknown initial costate in one linear solve; the
backward map fixes the terminal costate the same way.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import matlib
from .errors import ConfigError, UnreachableBoundaryError
from .odeint import DEFAULT_STEP, Trajectory, rk4_step, simulate, step_count
from .systems import BoundarySpec, LTVSystem

MIN_EPSILON = 0.05


def hamiltonian_matrix(sys: LTVSystem, tau: float) -> np.ndarray:
    A, B, Q, R = sys.matrices(tau)
    S = B @ np.linalg.solve(R, B.T)
    return np.block([[A, -S], [-Q, -A.T]])


def transition_matrix(
    sys: LTVSystem, epsilon: float, h: float = DEFAULT_STEP, reverse: bool = False
) -> np.ndarray:
    """``Phi(1, 0)`` of ``eps dPhi/dtau = M_H(tau) Phi``, integrated by RK4 with tau-step ``h``.

    With ``reverse`` the integration runs from ``tau = 1`` down to ``0`` and
    returns ``Phi(0, 1)``. A tau-step ``h`` is a step ``h T`` in the original
    clock; the arithmetic is the same as integrating ``dPhi/dt = M_H(t/T) Phi``
    on ``[0, T]``.
    """
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    N = 2 * sys.n
    steps = step_count(0.0, 1.0, h)
    sign = -1.0 if reverse else 1.0
    start = 1.0 if reverse else 0.0
    scale = sign / epsilon

    def f(s, flat):
        return (scale * hamiltonian_matrix(sys, start + sign * s) @ flat.reshape(N, N)).ravel()

    phi = np.eye(N).ravel()
    for k in range(steps):
        phi = rk4_step(f, k * h, phi, h)
    return phi.reshape(N, N)


@dataclass
class BVPSolution:
    p0: np.ndarray
    trajectory: Trajectory  # tau grid; running_cost already scaled by T
    costates: np.ndarray
    cost: float
    boundary_residual: float  # defect where the forward and backward sweeps meet
    epsilon: float
    condition: float


def _sweep(sys: LTVSystem, epsilon: float, z0, tau0: float, tau1: float, h: float):
    """Integrate the Hamiltonian system from ``tau0`` to ``tau1`` (either direction).

    Backward sweeps run in ``s = tau0 - tau`` so the step stays positive; the
    running cost is accumulated as a positive integral in both cases.
    """
    n = sys.n
    sign = 1.0 if tau1 > tau0 else -1.0
    scale = sign / epsilon

    def f(s, z, u):
        return scale * (hamiltonian_matrix(sys, tau0 + sign * s) @ z)

    def running(s, z, u):
        _, B, Q, R = sys.matrices(tau0 + sign * s)
        x, p = z[:n], z[n:]
        uu = -np.linalg.solve(R, B.T @ p)
        return x @ Q @ x + uu @ R @ uu

    return simulate(f, None, 0.0, abs(tau1 - tau0), z0, h, running_cost=running, blowup=np.inf)


def solve_bvp(sys: LTVSystem, spec: BoundarySpec, h: float = DEFAULT_STEP) -> BVPSolution:
    """Optimal trajectory from ``x(0) = x0`` to ``x(1) = xT`` on the horizon ``T = 1/eps``.

    ``p0`` comes from one LU solve with ``Phi12`` and ``p(1)`` from the
    matching solve with the backward map ``Phi(0, 1)``. The trajectory is then
    built from two sweeps that meet at mid-horizon: forward from ``(x0, p0)``
    and backward from ``(xT, p(1))``. Each sweep only crosses half of the hyperbolic
    growth, so rounding in ``p0`` is not amplified by the full ``e^{cT}``.
    ``boundary_residual`` is the defect where the sweeps meet.
    """
    eps = spec.epsilon
    if eps < MIN_EPSILON:
        raise ConfigError(f"epsilon {eps} below the supported minimum {MIN_EPSILON}")
    n = sys.n
    if spec.x0.size != n:
        raise ConfigError(f"boundary states have dimension {spec.x0.size}, system has {n}")
    phi = transition_matrix(sys, eps, h)
    phi11, phi12 = phi[:n, :n], phi[:n, n:]
    rank = matlib.numerical_rank(phi12)
    if rank < n:
        raise UnreachableBoundaryError(f"Phi12 is singular (rank {rank} < {n}); x_T unreachable")
    lu = scipy.linalg.lu_factor(phi12)
    cond = float(np.linalg.cond(phi12))
    p0 = scipy.linalg.lu_solve(lu, spec.xT - phi11 @ spec.x0)
    # the terminal costate is solved from the backward map rather than pushed
    # through Phi22, whose entries grow like e^{cT}
    psi = transition_matrix(sys, eps, h, reverse=True)
    try:
        p1 = np.linalg.solve(psi[:n, n:], spec.x0 - psi[:n, :n] @ spec.xT)
    except np.linalg.LinAlgError:
        raise UnreachableBoundaryError("backward transition block is singular; x0 unreachable from x_T") from None

    steps = step_count(0.0, 1.0, h)
    mid = steps // 2
    tau_mid = mid * h
    fwd = _sweep(sys, eps, np.concatenate([spec.x0, p0]), 0.0, tau_mid, h)
    bwd = _sweep(sys, eps, np.concatenate([spec.xT, p1]), 1.0, tau_mid, h)
    defect = float(np.linalg.norm(fwd.states[-1] - bwd.states[-1]))

    z = np.vstack([fwd.states, bwd.states[-2::-1]])
    times = np.linspace(0.0, 1.0, steps + 1)
    running = np.concatenate(
        [fwd.running_cost, fwd.running_cost[-1] + bwd.cost - bwd.running_cost[-2::-1]]
    )
    x, p = z[:, :n], z[:, n:]
    u = np.array([-np.linalg.solve(sys.R(t), sys.B(t).T @ pk) for t, pk in zip(times, p)])
    out = Trajectory(
        times=times,
        states=x.copy(),
        controls=u.reshape(len(times), sys.m),
        running_cost=spec.T * running,
        meta={"epsilon": eps, "kind": "optimal"},
    )
    return BVPSolution(
        p0=p0,
        trajectory=out,
        costates=p.copy(),
        cost=out.cost,
        boundary_residual=defect,
        epsilon=eps,
        condition=cond,
    )


def _derivative(y: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central difference on interior nodes (two dropped at each end)."""
    return (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)


def optimality_residual(sol: BVPSolution, sys: LTVSystem):
    """``(costate_res, stationarity_res)`` in max-abs norm.

    The costate residual is measured in the original clock, ``dp/dt + Q x + A' p``,
    with ``dp/dt = eps dp/dtau`` from finite differences on the interior nodes.
    """
    traj = sol.trajectory
    tau = traj.times
    x, p, u = traj.states, sol.costates, traj.controls
    h = traj.step
    dp_dt = sol.epsilon * _derivative(p, h)
    interior = range(2, len(tau) - 2)
    costate = 0.0
    for row, k in zip(dp_dt, interior):
        A, _, Q, _ = sys.matrices(tau[k])
        costate = max(costate, matlib.inf_norm(row + Q @ x[k] + A.T @ p[k]))
    stationarity = 0.0
    for k, t in enumerate(tau):
        _, B, _, R = sys.matrices(t)
        stationarity = max(stationarity, matlib.inf_norm(u[k] + np.linalg.solve(R, B.T @ p[k])))
    return costate, stationarity

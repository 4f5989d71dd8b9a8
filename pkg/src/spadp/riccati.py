"""Model-based Riccati chain: Lyapunov solves, Kleinman iteration, both ARE branches.

This is the oracle the data-driven learner is checked against; it needs the
plant matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from . import matlib
from .errors import ConvergenceError, ResonanceError, StabilizationError
from .systems import INITIAL, TERMINAL, RegulatorProblem, freeze

STABILIZING = "stabilizing"
ANTISTABILIZING = "antistabilizing"

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 60
GAIN_SEARCH_GRID = (0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1000.0)


@dataclass
class RiccatiSolution:
    P: np.ndarray
    K: np.ndarray
    branch: str
    residual: float
    iterations: int
    trace: List[np.ndarray] = field(default_factory=list, repr=False)


def solve_lyapunov(a, q) -> np.ndarray:
    """Solve ``a' P + P a + q = 0`` through the n^2 x n^2 Kronecker system."""
    a = matlib.as_matrix(a, "a")
    q = matlib.as_matrix(q, "q")
    n = a.shape[0]
    eye = np.eye(n)
    # row-major vec: vec(a' P) = (a' kron I) vec P, vec(P a) = (I kron a') vec P
    L = matlib.kron(a.T, eye) + matlib.kron(eye, a.T)
    s = matlib.singular_values(L)
    if s[0] == 0.0 or s[-1] <= matlib.RANK_RTOL * s[0]:
        raise ResonanceError(
            f"singular Lyapunov operator (sigma_min/sigma_max = {s[-1] / max(s[0], 1e-300):.2e})"
        )
    P = np.linalg.solve(L, -q.ravel()).reshape(n, n)
    return matlib.symmetrize(P)


def lyapunov_residual(a, q, P) -> float:
    return matlib.inf_norm(a.T @ P + P @ a + q)


def are_residual(A, B, Q, R, P) -> float:
    A, B, Q, R, P = (np.atleast_2d(M) for M in (A, B, Q, R, P))
    return matlib.inf_norm(A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T) @ P + Q)


def gain(B, R, P) -> np.ndarray:
    return np.linalg.solve(np.atleast_2d(R), np.atleast_2d(B).T @ np.atleast_2d(P))


def is_stabilizing(A, B, K) -> bool:
    """Lyapunov certificate: ``Ak' X + X Ak = -I`` has ``X > 0`` for ``Ak = A - B K``."""
    Ak = np.atleast_2d(A) - np.atleast_2d(B) @ np.atleast_2d(K)
    try:
        X = solve_lyapunov(Ak, np.eye(Ak.shape[0]))
    except ResonanceError:
        return False
    return matlib.is_posdef(X)


def find_stabilizing_gain(A, B, grid: Sequence[float] = GAIN_SEARCH_GRID) -> np.ndarray:
    """Try ``K = c B'`` over ``grid``; adequate for small systems only."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    for c in grid:
        K = c * B.T
        if is_stabilizing(A, B, K):
            return K
    raise StabilizationError("no stabilizing gain of the form c*B' found; supply k0 explicitly")


def kleinman_step(A, B, Q, R, K):
    """One policy evaluation + improvement: returns ``(P_k, K_{k+1})``."""
    A, B, Q, R, K = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R, K))
    Ak = A - B @ K
    P = solve_lyapunov(Ak, Q + K.T @ R @ K)
    return P, gain(B, R, P)


def kleinman_solve(A, B, Q, R, k0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> RiccatiSolution:
    A, B, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R))
    K = np.atleast_2d(np.asarray(k0, dtype=float)).reshape(B.shape[1], A.shape[0])
    if not is_stabilizing(A, B, K):
        raise StabilizationError("initial gain does not stabilize A - B K")
    trace = []
    P_prev = None
    for k in range(max_iter + 1):
        P, K = kleinman_step(A, B, Q, R, K)
        trace.append(P)
        if P_prev is not None and matlib.inf_norm(P - P_prev) <= tol:
            return RiccatiSolution(
                P=P,
                K=K,
                branch=STABILIZING,
                residual=are_residual(A, B, Q, R, P),
                iterations=k,
                trace=trace,
            )
        P_prev = P
    res = are_residual(A, B, Q, R, P)
    raise ConvergenceError(
        f"Kleinman iteration did not converge in {max_iter} iterations (ARE residual {res:.3e})",
        residual=res,
        trace=trace,
    )


def kleinman(prob: RegulatorProblem, k0=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> RiccatiSolution:
    """Kleinman iteration on the layer's own clock matrices.

    For an initial problem this is the stabilizing ARE root. For a terminal
    problem it is the stabilizing root of the reversed-clock regulator; see
    :func:`antistabilizing_root` for the conversion to the original clock.
    """
    A, B = prob.clock_matrices()
    if k0 is None:
        k0 = find_stabilizing_gain(A, B)
    return kleinman_solve(A, B, prob.Q0, prob.R0, k0, tol, max_iter)


def stabilizing_root(prob: RegulatorProblem, k0=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> RiccatiSolution:
    A, B = prob.A0, prob.B0
    if k0 is None:
        k0 = find_stabilizing_gain(A, B)
    return kleinman_solve(A, B, prob.Q0, prob.R0, k0, tol, max_iter)


def antistabilizing_root(prob: RegulatorProblem, k0=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> RiccatiSolution:
    """Negative semidefinite ARE root ``P_b`` of the frozen matrices.

    Solved as ``-Pbar`` where ``Pbar`` is the stabilizing root for the
    reversed-clock pair ``(-A, -B)``. The returned gain ``K_b = R^-1 B' P_b``
    equals the reversed-clock Kleinman gain, so ``k0`` is given in that clock
    (negative branch for scalar examples).
    """
    reversed_prob = RegulatorProblem(prob.A0, prob.B0, prob.Q0, prob.R0, TERMINAL)
    sol = kleinman(reversed_prob, k0, tol, max_iter)
    Pb = -sol.P
    return RiccatiSolution(
        P=Pb,
        K=gain(prob.B0, prob.R0, Pb),
        branch=ANTISTABILIZING,
        residual=are_residual(prob.A0, prob.B0, prob.Q0, prob.R0, Pb),
        iterations=sol.iterations,
        trace=[-P for P in sol.trace],
    )


def boundary_gains(sys, k0_a=None, k0_b=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Model-based ``(initial, terminal)`` solutions for an :class:`LTVSystem`."""
    sol_a = stabilizing_root(freeze(sys, INITIAL), k0_a, tol, max_iter)
    sol_b = antistabilizing_root(freeze(sys, TERMINAL), k0_b, tol, max_iter)
    return sol_a, sol_b

"""Off-policy policy iteration for the boundary-layer regulators.

The plant matrices are touched only inside the data-collection simulator.
Everything downstream of :class:`DataLog` works from measured quantities:

* ``delta_xx`` -- increments of ``x' P x`` regressors over each window,
* ``I_xx``     -- window integrals of ``x kron x``,
* ``I_xu0``    -- window integrals of ``x kron u`` for the applied input ``u``.

For a gain ``K`` the identity

    x'P x |_t^{t+dt} - 2 int (K x + u)' R K_next x = - int x' (Q + K'RK) x

holds along any trajectory of ``dx = A x + B u`` when ``P`` solves the
Lyapunov equation for ``A - B K`` and ``K_next = R^-1 B' P``. Stacking it over
windows gives a linear regression in ``(sym(P), vec(K_next))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import matlib
from .errors import ConvergenceError, InsufficientDataError, RankError
from .odeint import DEFAULT_STEP, simulate
from .systems import INITIAL, TERMINAL, LTVSystem, RegulatorProblem
from .riccati import ANTISTABILIZING, STABILIZING

DEFAULT_DT = 0.1
DEFAULT_HORIZON = 10.0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 30
DEFAULT_COUNT = 100
DEFAULT_AMPLITUDE = 0.1
DEFAULT_FREQ_RANGE = (0.1, 100.0)


@dataclass(frozen=True)
class ExcitationSignal:
    """``u0(t) = sum_i a_i sin(w_i t)`` per input channel."""

    seed: int
    frequencies: np.ndarray  # (m, count)
    amplitudes: np.ndarray  # (m, count)

    @property
    def count(self) -> int:
        return self.frequencies.shape[1]

    @property
    def m(self) -> int:
        return self.frequencies.shape[0]

    @property
    def bound(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes), axis=1)

    def __call__(self, t: float) -> np.ndarray:
        return np.sum(self.amplitudes * np.sin(self.frequencies * t), axis=1)


def make_excitation(
    seed: int,
    count: int = DEFAULT_COUNT,
    amplitude: float = DEFAULT_AMPLITUDE,
    freq_range: Sequence[float] = DEFAULT_FREQ_RANGE,
    m: int = 1,
) -> ExcitationSignal:
    w_min, w_max = (float(v) for v in freq_range)
    if count < 1:
        raise ValueError(f"need at least one sinusoid, got {count}")
    if not 0.0 < w_min < w_max:
        raise ValueError(f"frequency range must satisfy 0 < w_min < w_max, got {freq_range}")
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(w_min, w_max, size=(m, count))
    return ExcitationSignal(int(seed), freqs, np.full((m, count), float(amplitude)))


def zero_excitation(m: int = 1) -> ExcitationSignal:
    return ExcitationSignal(0, np.zeros((m, 1)), np.zeros((m, 1)))


@dataclass
class DataLog:
    n: int
    m: int
    dt: float
    delta_xx: np.ndarray  # (rows, n(n+1)/2)
    I_xx: np.ndarray  # (rows, n^2)
    I_xu0: np.ndarray  # (rows, n*m), column i*m + k integrates x_i u_k

    def __post_init__(self):
        rows = {self.delta_xx.shape[0], self.I_xx.shape[0], self.I_xu0.shape[0]}
        if len(rows) != 1:
            raise ValueError(f"block row counts differ: {sorted(rows)}")

    @property
    def rows(self) -> int:
        return self.delta_xx.shape[0]

    def stacked(self) -> np.ndarray:
        """``[I_xx (symmetric columns merged), I_xu0]`` -- the rank-test matrix."""
        return np.hstack([matlib.sym_merge_columns(self.I_xx), self.I_xu0])

    def take(self, rows) -> "DataLog":
        return DataLog(self.n, self.m, self.dt, self.delta_xx[rows], self.I_xx[rows], self.I_xu0[rows])


def required_rank(n: int, m: int) -> int:
    return matlib.sym_size(n) + n * m


def _as_gain(k, m, n) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        return float(k) * np.eye(m, n)
    return k.reshape(m, n)


def log_from_trajectory(traj, dt: float, reflect: bool = False) -> DataLog:
    """Cut a recorded trajectory into windows of length ``dt``.

    ``traj.integrals`` must hold the running integrals of ``x kron x`` followed
    by ``x kron u``. With ``reflect`` the windows are read backwards in time,
    which is how forward data of ``(A, B)`` becomes data of ``(-A, -B)``.
    """
    h = traj.step
    per = int(round(dt / h))
    if per < 1 or abs(per * h - dt) > 1e-9 * dt:
        raise ValueError(f"window {dt} is not a multiple of the integration step {h}")
    n, m = traj.n, traj.m
    rows = (len(traj.times) - 1) // per
    idx = np.arange(rows + 1) * per
    x = traj.states[idx]
    phi = np.array([matlib.sym_quadratic(v) for v in x])
    cum = traj.integrals[idx]
    delta = np.diff(phi, axis=0)
    windows = np.diff(cum, axis=0)
    I_xx = windows[:, : n * n]
    I_xu = windows[:, n * n : n * n + n * m]
    if reflect:
        delta, I_xx, I_xu = -delta[::-1], I_xx[::-1], I_xu[::-1]
    return DataLog(n, m, dt, delta, I_xx.copy(), I_xu.copy())


def _data_integrands():
    # outer(...).ravel() is kron for 1-D vectors, several times cheaper
    return [lambda t, x, u: np.outer(x, x).ravel(), lambda t, x, u: np.outer(x, u).ravel()]


def collect(
    prob: RegulatorProblem,
    u0: ExcitationSignal,
    horizon: float = DEFAULT_HORIZON,
    dt: float = DEFAULT_DT,
    k_behavior=0.0,
    x0=None,
    h: float = DEFAULT_STEP,
    reflect: bool = True,
) -> DataLog:
    """Excite the frozen plant once and assemble the regression blocks.

    The applied input is ``u = -k_behavior x + u0(t)``; ``k_behavior = 0`` is
    pure open-loop excitation. Terminal problems are simulated in the reversed
    clock beta by default; with ``reflect=False`` the un-reversed plant is run
    forward in time instead and the windows are time-reflected afterwards.
    """
    n, m = prob.n, prob.m
    need = required_rank(n, m)
    windows = horizon / dt
    if int(round(windows)) < need:
        raise InsufficientDataError(
            f"{int(round(windows))} windows available, rank condition needs {need}",
            rank=int(round(windows)),
            required=need,
        )
    K = _as_gain(k_behavior, m, n)
    x_start = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).ravel()
    forward_terminal = prob.orientation == TERMINAL and not reflect
    if forward_terminal:
        A, B = prob.A0, prob.B0
    else:
        A, B = prob.clock_matrices()
    traj = simulate(
        lambda t, x, u: A @ x + B @ u,
        lambda t, x: -K @ x + u0(t),
        0.0,
        horizon,
        x_start,
        h,
        integrands=_data_integrands(),
    )
    return log_from_trajectory(traj, dt, reflect=forward_terminal)


def collect_ltv(
    sys: LTVSystem,
    orientation: str,
    epsilon: float,
    u0: ExcitationSignal,
    fraction: float = 0.1,
    dt: float = DEFAULT_DT,
    k_behavior=0.0,
    x0=None,
    h: float = DEFAULT_STEP,
) -> DataLog:
    """Collect on the true time-varying plant near one end of the horizon.

    Runs the original-time plant over the first (initial) or last (terminal,
    in the reversed clock) ``fraction`` of ``T = 1/epsilon``.
    """
    T = 1.0 / epsilon
    horizon = fraction * T
    n, m = sys.n, sys.m
    K = _as_gain(k_behavior, m, n)
    if orientation == INITIAL:
        def f(t, x, u):
            tau = t / T
            return sys.A(tau) @ x + sys.B(tau) @ u
    elif orientation == TERMINAL:
        def f(t, x, u):
            tau = 1.0 - t / T
            return -(sys.A(tau) @ x) - sys.B(tau) @ u
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    windows = int(round(horizon / dt))
    if windows < required_rank(n, m):
        raise InsufficientDataError(
            f"{windows} windows in the boundary fraction, rank condition needs {required_rank(n, m)}",
            rank=windows,
            required=required_rank(n, m),
        )
    x_start = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).ravel()
    traj = simulate(f, lambda t, x: -K @ x + u0(t), 0.0, windows * dt, x_start, h,
                    integrands=_data_integrands())
    return log_from_trajectory(traj, dt)


def regressor_rank(log: DataLog) -> int:
    return matlib.numerical_rank(log.stacked())


def rank_check(log: DataLog) -> bool:
    return regressor_rank(log) == required_rank(log.n, log.m)


@dataclass
class PolicyIterate:
    k: int
    P: np.ndarray
    K: np.ndarray  # improved gain K_{k+1}
    step_change: float


def regression(log: DataLog, Kk, Q0, R0):
    """Assemble ``(psi, gamma)`` for the unknowns ``[sym(P_k); vec(K_{k+1})]`` (row-major vec)."""
    n, m = log.n, log.m
    Kk = _as_gain(Kk, m, n)
    Q0 = np.atleast_2d(Q0)
    R0 = np.atleast_2d(R0)
    Qk = Q0 + Kk.T @ R0 @ Kk
    # reorder x kron u -> u kron x so it pairs with row-major vec(K_next)
    I_ux = log.I_xu0.reshape(-1, n, m).transpose(0, 2, 1).reshape(-1, m * n)
    eye = np.eye(n)
    cross = log.I_xx @ np.kron(R0 @ Kk, eye).T + I_ux @ np.kron(R0, eye).T
    psi = np.hstack([log.delta_xx, -2.0 * cross])
    gamma = -log.I_xx @ Qk.ravel()
    return psi, gamma


def pi_step(log: DataLog, Kk, Q0, R0, k: int = 0, P_prev=None) -> PolicyIterate:
    need = required_rank(log.n, log.m)
    if not rank_check(log):
        rank = regressor_rank(log)
        raise InsufficientDataError(
            f"insufficient excitation: rank {rank}, required {need}", rank=rank, required=need
        )
    psi, gamma = regression(log, Kk, Q0, R0)
    z = matlib.lstsq(psi, gamma)
    s = matlib.sym_size(log.n)
    P = matlib.sym_expand(z[:s])
    K_next = z[s:].reshape(log.m, log.n)
    change = float("inf") if P_prev is None else matlib.inf_norm(P - P_prev)
    return PolicyIterate(k=k, P=P, K=K_next, step_change=change)


@dataclass
class LearnedGain:
    """Result of :func:`learn_gain`, shaped like a Riccati solution without a residual."""

    P: np.ndarray
    K: np.ndarray
    branch: str
    iterations: int
    trace: List[PolicyIterate] = field(default_factory=list, repr=False)
    log: Optional[DataLog] = field(default=None, repr=False)


def learn_gain(
    prob: RegulatorProblem,
    u0: ExcitationSignal,
    dt: float = DEFAULT_DT,
    horizon: float = DEFAULT_HORIZON,
    k_init=1.0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0=None,
    h: float = DEFAULT_STEP,
    reflect: bool = True,
    log: Optional[DataLog] = None,
):
    """Collect once, then iterate :func:`pi_step` until ``||P_k - P_{k-1}|| <= tol``.

    ``k_init`` is the starting gain in the layer's own clock and also the
    behaviour gain used while collecting (must keep the excited loop bounded).
    Terminal problems return ``P = -P_reversed`` (the non-positive branch) and
    the reversed-clock gain, which already equals ``R^-1 B' P``.

    Returns ``(LearnedGain, trace)``.
    """
    n, m = prob.n, prob.m
    K = _as_gain(k_init, m, n)
    if log is None:
        log = collect(prob, u0, horizon, dt, k_behavior=K, x0=x0, h=h, reflect=reflect)
    need = required_rank(n, m)
    rank = regressor_rank(log)
    if rank < need:
        raise InsufficientDataError(
            f"rank condition failed: rank {rank} < required {need}", rank=rank, required=need
        )
    trace: List[PolicyIterate] = []
    P_prev = None
    for k in range(max_iter):
        try:
            it = pi_step(log, K, prob.Q0, prob.R0, k=k, P_prev=P_prev)
        except RankError as exc:
            raise InsufficientDataError(str(exc), rank=exc.rank, required=exc.required) from exc
        trace.append(it)
        K = it.K
        if P_prev is not None and it.step_change <= tol:
            terminal = prob.orientation == TERMINAL
            result = LearnedGain(
                P=-it.P if terminal else it.P,
                K=it.K,
                branch=ANTISTABILIZING if terminal else STABILIZING,
                iterations=k,
                trace=trace,
                log=log,
            )
            return result, trace
        P_prev = it.P
    raise ConvergenceError(
        f"policy iteration did not converge in {max_iter} iterations "
        f"(last change {trace[-1].step_change:.3e})",
        residual=trace[-1].step_change,
        trace=trace,
    )

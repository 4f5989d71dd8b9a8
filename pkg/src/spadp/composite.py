"""Composite sub-optimal controller built from the two boundary-layer gains.

Two composition modes are supported:

``switching``
    state feedback ``u = -Ka x`` before the crossover time and ``u = -Kb x``
    after it.
``superposition``
    open-loop ``u(tau) = -Ka x_a(tau/eps) - Kb x_b((1 - tau)/eps)`` from the
    precomputed layer trajectories.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.optimize

from .errors import DimensionError, InstabilityError
from .odeint import DEFAULT_STEP, Trajectory, rk4_step, simulate, step_count
from .riccati import is_stabilizing
from .systems import INITIAL, TERMINAL, BoundarySpec, LTVSystem, RegulatorProblem, freeze

SWITCHING = "switching"
SUPERPOSITION = "superposition"
FLAT_TOL = 1e-14


class DegenerateCrossoverWarning(RuntimeWarning):
    pass


@dataclass
class BoundaryLayers:
    """Layer trajectories sampled on a common tau grid.

    ``xa[k] = x_a(gamma = tau_k / eps)`` and ``xb[k] = x_b(beta = (1 - tau_k) / eps)``.
    """

    tau: np.ndarray
    xa: np.ndarray
    xb: np.ndarray
    epsilon: float
    Fa: np.ndarray  # dx_a/dgamma = Fa x_a
    Fb: np.ndarray  # dx_b/dbeta = Fb x_b

    @property
    def h(self) -> float:
        return float(self.tau[1] - self.tau[0])

    def _node_step(self, F, grid_pos, samples, clock_offset):
        k = min(int(np.floor(grid_pos)), len(samples) - 1)
        rem = (grid_pos - k) * self.h / self.epsilon
        if rem <= 0.0:
            return samples[k].copy()
        return rk4_step(lambda s, x: F @ x, clock_offset, samples[k], rem)

    def eval_a(self, tau: float) -> np.ndarray:
        return self._node_step(self.Fa, tau / self.h, self.xa, 0.0)

    def eval_b(self, tau: float) -> np.ndarray:
        # x_b is sampled forward in beta, i.e. backwards along the tau grid
        return self._node_step(self.Fb, (1.0 - tau) / self.h, self.xb[::-1], 0.0)


def boundary_trajectories(
    x0,
    xT,
    Ka,
    Kb,
    prob_init: RegulatorProblem,
    prob_term: RegulatorProblem,
    epsilon: float,
    h: float = DEFAULT_STEP,
) -> BoundaryLayers:
    """Integrate both layers under their gains and map them onto ``tau`` with step ``h``."""
    Ka = np.atleast_2d(Ka)
    Kb = np.atleast_2d(Kb)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    xT = np.atleast_1d(np.asarray(xT, dtype=float))
    if not is_stabilizing(prob_init.A0, prob_init.B0, Ka):
        raise InstabilityError("Ka does not stabilize the initial layer", time=0.0)
    Ab, Bb = prob_term.clock_matrices()
    if not is_stabilizing(Ab, Bb, Kb):
        raise InstabilityError("Kb does not stabilize the reversed terminal layer", time=1.0)
    Fa = prob_init.A0 - prob_init.B0 @ Ka
    Fb = Ab - Bb @ Kb
    steps = step_count(0.0, 1.0, h)
    span = 1.0 / epsilon
    ha = span / steps
    ta = simulate(lambda t, x, u: Fa @ x, None, 0.0, span, x0, ha)
    tb = simulate(lambda t, x, u: Fb @ x, None, 0.0, span, xT, ha)
    tau = np.linspace(0.0, 1.0, steps + 1)
    return BoundaryLayers(tau, ta.states, tb.states[::-1].copy(), epsilon, Fa, Fb)


def crossover(layers: BoundaryLayers) -> float:
    """Time ``t_c`` where the initial layer meets the terminal layer.

    Scalar states: bisection on ``x_a - x_b`` after locating a sign change on the
    grid. Vector states (or no sign change): grid scan of ``||x_a - x_b||`` and
    bounded scalar minimisation around the best node. Identically flat layers
    give the 0.5 convention.
    """
    tau, xa, xb = layers.tau, layers.xa, layers.xb
    diff = xa - xb
    if np.max(np.abs(diff)) <= FLAT_TOL:
        return 0.5
    if xa.shape[1] == 1:
        g = diff[:, 0]
        sign = np.sign(g)
        zero = np.flatnonzero(sign == 0.0)
        if zero.size:
            return float(tau[zero[0]])
        change = np.flatnonzero(sign[:-1] != sign[1:])
        if change.size:
            k = change[0]
            fn = lambda t: (layers.eval_a(t) - layers.eval_b(t))[0]
            return float(scipy.optimize.bisect(fn, tau[k], tau[k + 1], xtol=1e-13))

    dist = np.linalg.norm(diff, axis=1)
    k = int(np.argmin(dist))
    lo, hi = tau[max(k - 1, 0)], tau[min(k + 1, len(tau) - 1)]
    res = scipy.optimize.minimize_scalar(
        lambda t: np.linalg.norm(layers.eval_a(t) - layers.eval_b(t)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-8},
    )
    t_c = float(res.x) if res.fun <= dist[k] else float(tau[k])
    if k in (0, len(tau) - 1):
        warnings.warn(
            f"layers do not cross; crossover clamped to boundary minimiser tau={t_c:.4g}",
            DegenerateCrossoverWarning,
            stacklevel=2,
        )
    return t_c


@dataclass
class CompositeController:
    Ka: np.ndarray
    Kb: np.ndarray
    t_c: float
    mode: str = SWITCHING
    layers: Optional[BoundaryLayers] = None

    def __post_init__(self):
        self.Ka = np.atleast_2d(np.asarray(self.Ka, dtype=float))
        self.Kb = np.atleast_2d(np.asarray(self.Kb, dtype=float))
        if not 0.0 <= self.t_c <= 1.0:
            raise ValueError(f"crossover time {self.t_c} outside [0, 1]")
        if self.mode not in (SWITCHING, SUPERPOSITION):
            raise ValueError(f"unknown composition mode {self.mode!r}")
        if self.mode == SUPERPOSITION and self.layers is None:
            raise ValueError("superposition mode needs boundary layer trajectories")

    def __call__(self, tau: float, x: np.ndarray) -> np.ndarray:
        if self.mode == SWITCHING:
            K = self.Ka if tau < self.t_c else self.Kb
            return -K @ x
        return -self.Ka @ self.layers.eval_a(tau) - self.Kb @ self.layers.eval_b(tau)


def build_controller(sys: LTVSystem, spec: BoundarySpec, Ka, Kb, mode=SUPERPOSITION, h=DEFAULT_STEP):
    layers = boundary_trajectories(
        spec.x0, spec.xT, Ka, Kb, freeze(sys, INITIAL), freeze(sys, TERMINAL), spec.epsilon, h
    )
    return CompositeController(Ka, Kb, crossover(layers), mode, layers)


def simulate_composite(sys: LTVSystem, spec: BoundarySpec, ctrl: CompositeController, h: float = DEFAULT_STEP) -> Trajectory:
    """Run the true plant ``eps dx/dtau = A(tau) x + B(tau) u`` under ``ctrl``.

    The reported running cost includes the factor ``T`` so costs are in
    original-time units.
    """
    inv_eps = 1.0 / spec.epsilon

    def f(tau, x, u):
        return inv_eps * (sys.A(tau) @ x + sys.B(tau) @ u)

    def running(tau, x, u):
        return x @ sys.Q(tau) @ x + u @ sys.R(tau) @ u

    # feedback is evaluated per stage: a held gain lags the anti-stable
    # post-crossover loop and the lag compounds into a large terminal miss
    traj = simulate(f, ctrl, 0.0, 1.0, spec.x0, h, running_cost=running, hold=False)
    traj.running_cost = spec.T * traj.running_cost
    traj.meta = {"epsilon": spec.epsilon, "mode": ctrl.mode, "t_c": ctrl.t_c, "kind": "composite"}
    return traj


def _resample(traj: Trajectory, grid: np.ndarray):
    def interp(values):
        return np.column_stack([np.interp(grid, traj.times, col) for col in values.T])

    return interp(traj.states), interp(traj.controls)


def _nested_nodes(ta: np.ndarray, tb: np.ndarray):
    """Index pairs of the coarser grid inside the finer one, or None if they do not nest."""
    swap = len(ta) > len(tb)
    coarse, fine = (tb, ta) if swap else (ta, tb)
    if (len(fine) - 1) % (len(coarse) - 1):
        return None
    stride = (len(fine) - 1) // (len(coarse) - 1)
    idx = np.arange(len(coarse)) * stride
    if not np.allclose(fine[idx], coarse, rtol=0.0, atol=1e-12):
        return None
    full = np.arange(len(coarse))
    return (idx, full) if swap else (full, idx)


def approx_error(traj: Trajectory, optimal: Trajectory):
    """``(sup_state_err, sup_control_err, cost_gap)``.

    Nested grids (equal, or one an integer refinement of the other) are compared
    on their shared nodes; otherwise both are linearly resampled onto the finer grid.
    """
    if traj.n != optimal.n or traj.m != optimal.m:
        raise DimensionError(
            f"trajectory dims (n={traj.n}, m={traj.m}) vs (n={optimal.n}, m={optimal.m})"
        )
    nested = _nested_nodes(traj.times, optimal.times)
    if nested is not None:
        # grids share nodes: compare there, free of O(h^2) interpolation error
        (ia, ib) = nested
        xs, us = traj.states[ia], traj.controls[ia]
        xo, uo = optimal.states[ib], optimal.controls[ib]
    else:
        grid = traj.times if len(traj.times) >= len(optimal.times) else optimal.times
        xs, us = _resample(traj, grid)
        xo, uo = _resample(optimal, grid)
    state_err = float(np.max(np.abs(xs - xo)))
    control_err = float(np.max(np.abs(us - uo)))
    return state_err, control_err, traj.cost - optimal.cost


def reconstruct_costate(layers: BoundaryLayers, Pa, Pb) -> np.ndarray:
    """``p(tau) ~ Pa x_a + Pb x_b`` on the layer grid."""
    return layers.xa @ np.atleast_2d(Pa).T + layers.xb @ np.atleast_2d(Pb).T

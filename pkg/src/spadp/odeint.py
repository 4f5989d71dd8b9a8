"""Fixed-step RK4 integration with running integrals.

Controls are sampled once per step (zero-order hold) and every requested
integrand is carried as an extra ODE state, so the RK4 update doubles as a
Simpson-type quadrature on the same grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DivergenceError, InstabilityError

DEFAULT_STEP = 1e-3
BLOWUP_BOUND = 1e9


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    running_cost: np.ndarray
    # cumulative integrand values, shape (len(times), total integrand size)
    integrals: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def cost(self) -> float:
        return float(self.running_cost[-1])

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def m(self) -> int:
        return self.controls.shape[1]


def rk4_step(f, t, x, h):
    x = np.asarray(x, dtype=float)
    k1 = _stage(f, t, x, t)
    k2 = _stage(f, t + 0.5 * h, x + 0.5 * h * k1, t)
    k3 = _stage(f, t + 0.5 * h, x + 0.5 * h * k2, t)
    k4 = _stage(f, t + h, x + h * k3, t)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _stage(f, t, x, t_step):
    k = np.asarray(f(t, x), dtype=float)
    if not np.all(np.isfinite(k)):
        raise DivergenceError(f"non-finite vector field in step starting at t={t_step:.6g}", time=t_step)
    return k


def step_count(t0: float, t1: float, h: float) -> int:
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    ratio = (t1 - t0) / h
    steps = int(round(ratio))
    if steps < 1 or abs(ratio - steps) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"interval length {t1 - t0} is not a multiple of step {h}")
    return steps


def quadratic_cost(Q, R) -> Callable:
    """Running cost ``x'Q(t)x + u'R(t)u``; Q and R may be arrays or callables of t."""
    Qf = Q if callable(Q) else (lambda t, _Q=np.atleast_2d(Q): _Q)
    Rf = R if callable(R) else (lambda t, _R=np.atleast_2d(R): _R)

    def cost(t, x, u):
        val = x @ Qf(t) @ x
        if u.size:
            val += u @ Rf(t) @ u
        return val

    return cost


def simulate(
    f: Callable,
    controller: Optional[Callable],
    t0: float,
    t1: float,
    x0,
    h: float = DEFAULT_STEP,
    integrands: Optional[Sequence[Callable]] = None,
    running_cost: Optional[Callable] = None,
    blowup: float = BLOWUP_BOUND,
    hold: bool = True,
) -> Trajectory:
    """Integrate ``dx/dt = f(t, x, u)`` with ``u = controller(t, x)`` held over each step.

    With ``hold=False`` the controller is re-evaluated at every RK4 stage
    (continuous feedback); the recorded control is still the step-start value.

    ``integrands`` are callables ``g(t, x, u)`` returning arrays; their running
    integrals are returned column-stacked in ``Trajectory.integrals``.
    ``running_cost`` is a scalar integrand accumulated into ``running_cost``.
    ``controller=None`` means a zero-dimensional input.
    """
    steps = step_count(t0, t1, h)
    x = np.asarray(x0, dtype=float).ravel().copy()
    n = x.size
    integrands = list(integrands or [])

    def control(t, xs):
        if controller is None:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(controller(t, xs), dtype=float)).ravel()

    u = control(t0, x)
    m = u.size
    sizes = [np.atleast_1d(g(t0, x, u)).size for g in integrands]
    total = sum(sizes)
    cost_fn = running_cost
    width = n + 1 + total
    bounds = np.cumsum([n + 1] + sizes)

    def augmented(t, z, u):
        out = np.empty(width)
        xs = z[:n]
        if not hold:
            u = control(t, xs)
        out[:n] = f(t, xs, u)
        out[n] = cost_fn(t, xs, u) if cost_fn else 0.0
        for g, lo, hi in zip(integrands, bounds[:-1], bounds[1:]):
            out[lo:hi] = g(t, xs, u)
        return out

    times = t0 + h * np.arange(steps + 1)
    times[-1] = t1
    states = np.empty((steps + 1, n))
    controls = np.empty((steps + 1, m))
    acc = np.zeros((steps + 1, 1 + total))
    z = np.concatenate([x, np.zeros(1 + total)])
    states[0] = x
    half = 0.5 * h
    sixth = h / 6.0
    for k in range(steps):
        t = times[k]
        controls[k] = u
        # inlined rk4_step; finiteness is checked once per step below
        k1 = augmented(t, z, u)
        k2 = augmented(t + half, z + half * k1, u)
        k3 = augmented(t + half, z + half * k2, u)
        k4 = augmented(t + h, z + h * k3, u)
        z = z + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(z).all():
            raise DivergenceError(f"non-finite state in step starting at t={t:.6g}", time=float(t))
        xs = z[:n]
        norm = np.abs(xs).max() if n else 0.0
        if norm > blowup:
            raise InstabilityError(
                f"state norm {norm:.3g} exceeded {blowup:.3g} at t={times[k + 1]:.6g}",
                time=float(times[k + 1]),
            )
        states[k + 1] = xs
        acc[k + 1] = z[n:]
        u = control(times[k + 1], xs)
    controls[steps] = u
    return Trajectory(
        times=times,
        states=states,
        controls=controls,
        running_cost=acc[:, 0].copy(),
        integrals=acc[:, 1:].copy() if total else None,
    )

"""Problem definitions on the normalised horizon tau in [0, 1].

An :class:`LTVSystem` holds the four matrix functions of tau. The horizon
``T`` (``epsilon = 1/T``) lives in :class:`BoundarySpec`, so one system can be
reused across an epsilon sweep.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import ConfigError, DimensionError
from .matlib import as_matrix

INITIAL = "initial"
TERMINAL = "terminal"

MAX_POLY_DEGREE = 6

# Values reported for the dissipating-mass example in the literature. P_b(1) and
# the learned K_b there correspond to A = -1 rather than A(1) = -1.2.
MASS_PUBLISHED = {
    "P_a(0)": 0.414,
    "P_b(1)": -2.414,
    "K_a learned": 0.410,
    "K_b learned": -2.46,
}


@dataclass(frozen=True)
class LTVSystem:
    n: int
    m: int
    A: Callable[[float], np.ndarray]
    B: Callable[[float], np.ndarray]
    Q: Callable[[float], np.ndarray]
    R: Callable[[float], np.ndarray]
    name: str = "custom"

    def matrices(self, tau: float):
        return self.A(tau), self.B(tau), self.Q(tau), self.R(tau)

    def check(self, samples: int = 11) -> None:
        """Shape, finiteness, Q >= 0 and R > 0 at ``samples`` evenly spaced tau."""
        for tau in np.linspace(0.0, 1.0, samples):
            A, B, Q, R = (as_matrix(M) for M in self.matrices(tau))
            if A.shape != (self.n, self.n) or B.shape != (self.n, self.m):
                raise DimensionError(f"A/B shapes {A.shape}/{B.shape} at tau={tau}")
            if Q.shape != (self.n, self.n) or R.shape != (self.m, self.m):
                raise DimensionError(f"Q/R shapes {Q.shape}/{R.shape} at tau={tau}")
            if not (np.allclose(Q, Q.T) and np.allclose(R, R.T)):
                raise ConfigError(f"Q or R not symmetric at tau={tau}")
            if np.min(np.linalg.eigvalsh(Q)) < -1e-12:
                raise ConfigError(f"Q not positive semidefinite at tau={tau}")
            if np.min(np.linalg.eigvalsh(R)) <= 0.0:
                raise ConfigError(f"R not positive definite at tau={tau}")

    @classmethod
    def constant(cls, A, B, Q, R, name="lti") -> "LTVSystem":
        A, B, Q, R = (as_matrix(M) for M in (A, B, Q, R))
        return cls(
            n=A.shape[0],
            m=B.shape[1],
            A=lambda tau: A,
            B=lambda tau: B,
            Q=lambda tau: Q,
            R=lambda tau: R,
            name=name,
        )

    @classmethod
    def from_polynomials(cls, tables: Mapping[str, object], name="custom") -> "LTVSystem":
        """Build from per-entry polynomial coefficients in tau.

        ``tables[key]`` for key in A, B, Q, R is a nested list ``[rows][cols][coeffs]``
        with ascending coefficients (``c0 + c1*tau + ...``, degree <= 6). A bare
        number in place of a coefficient list is a constant entry.
        """
        funcs = {}
        for key in ("A", "B", "Q", "R"):
            if key not in tables:
                raise ConfigError(f"system table missing matrix {key}")
            funcs[key] = _poly_matrix(key, tables[key])
        n = funcs["A"].shape[0]
        m = funcs["B"].shape[1]
        sys = cls(n=n, m=m, name=name, **{k: v for k, v in funcs.items()})
        sys.check()
        return sys


class _PolyMatrix:
    def __init__(self, coeffs: np.ndarray):
        # coeffs: (rows, cols, degree+1), ascending powers
        self.coeffs = coeffs
        self.shape = coeffs.shape[:2]

    def __call__(self, tau):
        powers = float(tau) ** np.arange(self.coeffs.shape[2])
        return self.coeffs @ powers


def _poly_matrix(key, table) -> _PolyMatrix:
    rows = table if isinstance(table, (list, tuple)) else [[table]]
    if rows and not isinstance(rows[0], (list, tuple)):
        rows = [rows]
    try:
        entries = [[np.atleast_1d(np.asarray(c, dtype=float)) for c in row] for row in rows]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix {key}: non-numeric coefficient") from exc
    if not entries or len({len(r) for r in entries}) != 1 or not entries[0]:
        raise ConfigError(f"matrix {key}: ragged or empty table")
    degree = max(c.size for r in entries for c in r) - 1
    if degree > MAX_POLY_DEGREE:
        raise ConfigError(f"matrix {key}: degree {degree} exceeds {MAX_POLY_DEGREE}")
    out = np.zeros((len(entries), len(entries[0]), degree + 1))
    for i, r in enumerate(entries):
        for j, c in enumerate(r):
            out[i, j, : c.size] = c
    if not np.all(np.isfinite(out)):
        raise ConfigError(f"matrix {key}: non-finite coefficient")
    return _PolyMatrix(out)


@dataclass(frozen=True)
class BoundarySpec:
    x0: np.ndarray
    xT: np.ndarray
    epsilon: float

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        object.__setattr__(self, "xT", np.atleast_1d(np.asarray(self.xT, dtype=float)))
        if self.x0.shape != self.xT.shape:
            raise DimensionError(f"x0 {self.x0.shape} and xT {self.xT.shape} differ")

    @property
    def T(self) -> float:
        return 1.0 / self.epsilon

    @classmethod
    def from_horizon(cls, x0, xT, T: float) -> "BoundarySpec":
        if not T > 0:
            raise ConfigError(f"horizon must be positive, got {T}")
        return cls(x0, xT, 1.0 / T)

    def with_epsilon(self, epsilon: float) -> "BoundarySpec":
        return BoundarySpec(self.x0, self.xT, epsilon)


@dataclass(frozen=True)
class RegulatorProblem:
    """Time-invariant boundary-layer regulator frozen at tau = 0 or tau = 1.

    The matrices are stored as evaluated. For the terminal orientation the
    layer evolves in the reversed clock beta, ``dx/dbeta = -A x - B u``;
    :meth:`clock_matrices` returns the pair that drives it.
    """

    A0: np.ndarray
    B0: np.ndarray
    Q0: np.ndarray
    R0: np.ndarray
    orientation: str = INITIAL

    def __post_init__(self):
        if self.orientation not in (INITIAL, TERMINAL):
            raise ValueError(f"orientation must be {INITIAL!r} or {TERMINAL!r}")
        for name in ("A0", "B0", "Q0", "R0"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    @property
    def m(self) -> int:
        return self.B0.shape[1]

    @property
    def tau(self) -> float:
        return 0.0 if self.orientation == INITIAL else 1.0

    def clock_matrices(self):
        if self.orientation == INITIAL:
            return self.A0, self.B0
        return -self.A0, -self.B0

    def vector_field(self):
        """``f(t, x, u)`` of the layer in its own clock (gamma or beta)."""
        A, B = self.clock_matrices()
        return lambda t, x, u: A @ x + B @ u


def freeze(sys: LTVSystem, orientation: str) -> RegulatorProblem:
    tau = 0.0 if orientation == INITIAL else 1.0
    if orientation not in (INITIAL, TERMINAL):
        raise ValueError(f"unknown orientation {orientation!r}")
    A, B, Q, R = sys.matrices(tau)
    return RegulatorProblem(A, B, Q, R, orientation)


def mass_example(epsilon: float = 0.1):
    """Dissipating-mass system: m(t) = -1/(1 + 0.2 t), so A(tau) = -(1 + 0.2 tau).

    Returns ``(system, boundary)`` with x0 = 0.5, xT = 0.9, q = r = 1, B = 1.
    """
    one = np.ones((1, 1))
    sys = LTVSystem(
        n=1,
        m=1,
        A=lambda tau: np.array([[-(1.0 + 0.2 * tau)]]),
        B=lambda tau: one,
        Q=lambda tau: one,
        R=lambda tau: one,
        name="mass",
    )
    return sys, BoundarySpec(np.array([0.5]), np.array([0.9]), epsilon)


BUILTINS = {"mass": mass_example}


def to_scaled(t: float, T: float) -> float:
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    if not 0.0 <= t <= T:
        raise ValueError(f"time {t} outside [0, {T}]")
    return t / T


def clocks(tau: float, epsilon: float):
    """Boundary-layer clocks ``(gamma, beta) = (tau/eps, (1 - tau)/eps)``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau {tau} outside [0, 1]")
    return tau / epsilon, (1.0 - tau) / epsilon


def lookup(name: str, epsilon: Optional[float] = None):
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown builtin system {name!r}; known: {sorted(BUILTINS)}") from None
    return factory() if epsilon is None else factory(epsilon)

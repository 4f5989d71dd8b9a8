"""Small dense linear-algebra kernel.

Thin, contract-checking wrappers over numpy/scipy for the handful of
operations the rest of the package needs. Matrices are plain 2-D float
``ndarray`` objects; vectors are 1-D.

Symmetric vectorisation ("SymVec") uses the upper triangle in row-major
order, e.g. for n = 3::

    (p00, p01, p02, p11, p12, p22)

That ordering is used everywhere a symmetric unknown is regressed.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionError, RankError, SymmetryError

RANK_RTOL = 1e-10
SYMMETRY_RTOL = 1e-12


def as_matrix(a, name="matrix") -> np.ndarray:
    """Coerce scalars / 1-D / 2-D input to a finite 2-D float array."""
    arr = np.atleast_2d(np.asarray(a, dtype=float))
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def kron(a, b) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DimensionError(f"kron of empty operand: {a.shape} x {b.shape}")
    return np.kron(a, b)


def sym_size(n: int) -> int:
    return n * (n + 1) // 2


def sym_dim(length: int) -> int:
    """Inverse of :func:`sym_size`."""
    n = int(round((np.sqrt(8 * length + 1) - 1) / 2))
    if sym_size(n) != length:
        raise DimensionError(f"{length} is not a triangular number")
    return n


def _check_symmetric(p: np.ndarray) -> None:
    if p.shape[0] != p.shape[1]:
        raise DimensionError(f"expected a square matrix, got {p.shape}")
    scale = np.max(np.abs(p)) if p.size else 0.0
    if np.max(np.abs(p - p.T), initial=0.0) > SYMMETRY_RTOL * scale:
        raise SymmetryError("matrix is not symmetric")


def sym_reduce(p) -> np.ndarray:
    p = as_matrix(p)
    _check_symmetric(p)
    return p[np.triu_indices(p.shape[0])].copy()


def sym_expand(s) -> np.ndarray:
    s = np.asarray(s, dtype=float).ravel()
    n = sym_dim(s.size)
    p = np.zeros((n, n))
    iu = np.triu_indices(n)
    p[iu] = s
    p.T[iu] = s
    return p


def sym_weights(n: int) -> np.ndarray:
    """Multiplicity of each SymVec entry inside ``vec(P)``: 1 on the diagonal, 2 off it."""
    i, j = np.triu_indices(n)
    return np.where(i == j, 1.0, 2.0)


def sym_merge_columns(m) -> np.ndarray:
    """Fold the n^2 columns of a ``x kron x`` regressor onto the n(n+1)/2 symmetric unknowns.

    For symmetric P, ``m @ vec(P) == sym_merge_columns(m) @ sym_reduce(P)``.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    n = int(round(np.sqrt(m.shape[1])))
    if n * n != m.shape[1]:
        raise DimensionError(f"column count {m.shape[1]} is not a square")
    full = m.reshape(m.shape[0], n, n)
    folded = full + np.swapaxes(full, 1, 2)
    folded[:, np.arange(n), np.arange(n)] *= 0.5
    i, j = np.triu_indices(n)
    return folded[:, i, j]


def sym_quadratic(x) -> np.ndarray:
    """Regressor ``phi(x)`` with ``x' P x == phi(x) @ sym_reduce(P)``."""
    x = np.asarray(x, dtype=float).ravel()
    i, j = np.triu_indices(x.size)
    return sym_weights(x.size) * x[i] * x[j]


def singular_values(a) -> np.ndarray:
    return np.linalg.svd(np.atleast_2d(np.asarray(a, dtype=float)), compute_uv=False)


def numerical_rank(a, rtol: float = RANK_RTOL) -> int:
    """Count singular values above ``rtol`` times the largest one."""
    s = singular_values(a)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def lstsq(a, b, rtol: float = RANK_RTOL) -> np.ndarray:
    """Least-squares solve by column-pivoted QR on an equilibrated ``a``.

    Raises :class:`RankError` when ``a`` lacks full column rank at ``rtol``.
    """
    a = as_matrix(a, "a")
    b = np.asarray(b, dtype=float)
    squeeze = b.ndim == 1
    b = b.reshape(a.shape[0], -1)
    rows, cols = a.shape
    if rows < cols:
        raise RankError(f"underdetermined system {rows}x{cols}", rank=rows, required=cols)

    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0.0):
        rank = numerical_rank(a, rtol)
        raise RankError(f"zero column in {rows}x{cols} system", rank=rank, required=cols)
    scaled = a / norms
    q, r, piv = scipy.linalg.qr(scaled, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > rtol * diag[0]))
    if rank < cols:
        raise RankError(
            f"rank-deficient system: numerical rank {rank} < {cols} columns",
            rank=rank,
            required=cols,
        )
    zp = scipy.linalg.solve_triangular(r, q.T @ b)
    z = np.empty_like(zp)
    z[piv] = zp
    z /= norms[:, None]
    return z[:, 0] if squeeze else z


def is_posdef(p) -> bool:
    """Cholesky test; asymmetric input is rejected with :class:`SymmetryError`."""
    p = as_matrix(p)
    _check_symmetric(p)
    try:
        c = np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.diag(c) > 0.0))


def symmetrize(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return 0.5 * (p + p.T)


def inf_norm(a) -> float:
    """Infinity norm: max-abs for vectors, max absolute row sum for matrices."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    if a.ndim < 2:
        return float(np.max(np.abs(a)))
    return float(np.linalg.norm(a, np.inf))

"""Singular value decomposition for small square matrices (one-sided Jacobi)."""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import NumericError, ShapeError
from .tensor import Tensor

MAX_SWEEPS = 100
TOLERANCE = 1e-12


def svd_small(
    m, tol: float = TOLERANCE, max_sweeps: int = MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decompose ``m = U @ diag(S) @ V.T`` in 64-bit arithmetic.

    Columns of ``m`` are rotated pairwise until every pair is orthogonal to
    within ``tol`` (cosine of the angle between them). Singular values are
    returned non-negative and descending.

    Raises:
        NumericError: no convergence within ``max_sweeps``; ``residual`` holds
            the largest remaining column cosine.
    """
    a = np.array(m.data if isinstance(m, Tensor) else m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"svd_small expects a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError("svd_small input contains non-finite entries")
    d = a.shape[0]
    g = np.ascontiguousarray(a.T)
    vt = np.eye(d)
    worst = 0.0
    for _ in range(max_sweeps):
        worst = kernels.jacobi_sweep(g, vt, tol)
        if worst <= tol:
            break
    else:
        raise NumericError(
            f"Jacobi SVD did not converge in {max_sweeps} sweeps (off-diagonal {worst:.3e})",
            residual=worst,
        )

    s = np.sqrt(np.einsum("ij,ij->i", g, g))
    order = np.argsort(-s, kind="stable")
    s, g, vt = s[order], g[order], vt[order]
    cutoff = (s[0] if d else 0.0) * d * np.finfo(np.float64).eps
    u = np.zeros((d, d))
    rank = int(np.count_nonzero(s > cutoff))
    u[:, :rank] = (g[:rank] / s[:rank, None]).T
    s[rank:] = 0.0
    if rank < d:
        u = _complete_basis(u, rank)
    return u, s, vt.T.copy()


def _complete_basis(u: np.ndarray, rank: int) -> np.ndarray:
    """Fill columns ``rank:`` with an orthonormal complement (Gram-Schmidt)."""
    d = u.shape[0]
    col = rank
    for e in np.eye(d):
        if col == d:
            break
        x = e.copy()
        for _ in range(2):
            x -= u[:, :col] @ (u[:, :col].T @ x)
        norm = np.linalg.norm(x)
        if norm > 1e-8:
            u[:, col] = x / norm
            col += 1
    return u

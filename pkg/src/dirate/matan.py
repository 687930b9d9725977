"""Symmetric-matrix utilities: Cholesky log-determinants, Schur complements,
spectral norms and extreme eigenvalues.

Positive definiteness is decided by the sign of the Cholesky pivots (LAPACK
``potrf``) with no jitter, so a failure here is a real signal and never
papered over.
"""
import numpy as np
from scipy import linalg

from .errors import NotPositiveDefinite


def symmetrize(M):
    """Return ``(M + M^T) / 2`` as a float array."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return 0.5 * (M + M.T)


def cholesky(S, error=NotPositiveDefinite, what="matrix"):
    """Lower Cholesky factor of symmetric ``S``.

    Raises ``error`` when a pivot is nonpositive or, relative to the largest
    diagonal entry, below ``n * eps``: such a matrix is singular to working
    precision (for example a Gram matrix with fewer samples than columns).
    """
    S = symmetrize(S)
    if not np.all(np.isfinite(S)):
        raise error(f"{what} has non-finite entries")
    try:
        L = linalg.cholesky(S, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise error(f"{what} is not positive definite ({exc})") from None
    n = S.shape[0]
    floor = n * np.finfo(np.float64).eps * float(np.max(np.diag(S), initial=0.0))
    pivots = np.diag(L) ** 2
    if n and np.min(pivots) <= floor:
        raise error(f"{what} is numerically singular (pivot {np.min(pivots):.3g} <= {floor:.3g})")
    return L


def cholesky_logdet(S):
    """Natural log-determinant of an SPD matrix as ``2 * sum(log(diag(L)))``."""
    L = cholesky(S)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def schur_complement(M, split, error=NotPositiveDefinite):
    """Schur complement ``C - B A^{-1} B^T`` of the leading ``split`` block.

    ``M`` is partitioned as ``[[A, B^T], [B, C]]`` with ``A`` of size
    ``split x split``. ``A^{-1}`` is never formed; the product goes through a
    triangular solve against the Cholesky factor of ``A``.
    """
    M = symmetrize(M)
    n = M.shape[0]
    if not 0 < split < n:
        raise ValueError(f"split must satisfy 0 < split < {n}, got {split}")
    A = M[:split, :split]
    B = M[split:, :split]
    C = M[split:, split:]
    L = cholesky(A, error=error, what="leading block")
    W = linalg.solve_triangular(L, B.T, lower=True, check_finite=False)
    return symmetrize(C - W.T @ W)


def spectral_norm(M):
    """Largest singular value."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def eig_bounds(S):
    """``(lambda_min, lambda_max)`` of a symmetric matrix."""
    w = np.linalg.eigvalsh(symmetrize(S))
    return float(w[0]), float(w[-1])


def inv_spd(S):
    """Inverse of an SPD matrix via its Cholesky factor."""
    L = cholesky(S)
    return symmetrize(linalg.cho_solve((L, True), np.eye(L.shape[0])))

"""Small dense linear-algebra helpers shared across the package."""

from __future__ import annotations

import numpy as np

# Singular values below max(shape) * sigma_max * RANK_RTOL count as zero.
RANK_RTOL = 2.0 ** -40


def as_square(A, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def is_symmetric(S: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.allclose(S, S.T, rtol=0.0, atol=tol * (1.0 + np.abs(S).max())))


def numerical_rank(S) -> int:
    """Numerical rank via SVD with a fixed conditioning cutoff."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.size == 0:
        return 0
    sv = np.linalg.svd(S, compute_uv=False)
    cutoff = max(S.shape) * sv[0] * RANK_RTOL
    return int(np.count_nonzero(sv > cutoff))


def spectral_norm(S) -> float:
    return float(np.linalg.norm(np.asarray(S, dtype=float), 2))


def sym_sqrt(S) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition."""
    S = as_square(S)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    if w.min() < -1e-10 * max(1.0, w.max()):
        raise ValueError("matrix is not positive semidefinite")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def sym_inv_sqrt(S) -> np.ndarray:
    """Symmetric square root of the inverse of a PD matrix."""
    S = as_square(S)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    if w.min() <= 0.0:
        raise ValueError("matrix is not positive definite")
    return (V / np.sqrt(w)) @ V.T


def pd_inverse(S) -> np.ndarray:
    """Inverse of a small PD matrix via its Cholesky factorization."""
    S = as_square(S)
    np.linalg.cholesky(S)  # raises LinAlgError if not PD
    return np.linalg.solve(S, np.eye(S.shape[0]))

"""Linearization of the lattice about its homogeneous steady state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeParams
from .linalg import as_square, is_symmetric

__all__ = ["LinearModel", "jacobian", "pin_matrix", "linearized_model"]


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Stochastic linear model x_{t+1} = A x_t + B u_t + E kappa_t,
    kappa ~ N(0, Sigma).

    A      L x L state matrix
    B      L x M input matrix
    Sigma  L x L symmetric PSD noise covariance (PD required for design)
    E      L x L noise input matrix, identity by default
    """

    A: np.ndarray
    B: np.ndarray
    Sigma: np.ndarray
    E: np.ndarray = field(default=None)

    def __post_init__(self):
        A = as_square(self.A, "A")
        B = np.asarray(self.B, dtype=float)
        Sigma = as_square(self.Sigma, "Sigma")
        L = A.shape[0]
        if B.ndim != 2 or B.shape[0] != L:
            raise ValueError(f"B must be {L} x M, got shape {B.shape}")
        if Sigma.shape != (L, L):
            raise ValueError(f"Sigma must be {L} x {L}, got shape {Sigma.shape}")
        if not is_symmetric(Sigma):
            raise ValueError("Sigma must be symmetric")
        if np.linalg.eigvalsh(Sigma).min() < -1e-12 * max(1.0, np.abs(Sigma).max()):
            raise ValueError("Sigma must be positive semidefinite")
        E = np.eye(L) if self.E is None else as_square(self.E, "E")
        if E.shape != (L, L):
            raise ValueError(f"E must be {L} x {L}, got shape {E.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "E", E)

    @property
    def L(self) -> int:
        return self.A.shape[0]

    @property
    def M(self) -> int:
        return self.B.shape[1]


def jacobian(params: LatticeParams) -> np.ndarray:
    """Jacobian of the uncontrolled lattice at the homogeneous state z*.

    A circulant L x L matrix: alpha*(1-2*eps) on the diagonal and alpha*eps
    on the two circular neighbors, with alpha = f'(z*) = 2 - a computed
    analytically.  Wrapped contributions accumulate, so L = 2 gets 2*alpha*eps
    off-diagonal.
    """
    if params.a <= 1.0:
        raise ValueError(f"linearization about z* requires a > 1, got {params.a}")
    alpha = 2.0 - params.a
    L, eps = params.L, params.epsilon
    A = np.zeros((L, L))
    for i in range(L):
        A[i, i] += alpha * (1.0 - 2.0 * eps)
        A[i, (i - 1) % L] += alpha * eps
        A[i, (i + 1) % L] += alpha * eps
    return A


def pin_matrix(L: int, pin_sites) -> np.ndarray:
    """Input matrix with one unit column e_{i_m} per pin site (1-based)."""
    sites = [int(p) for p in pin_sites]
    if len(set(sites)) != len(sites):
        raise ValueError(f"pin sites must be distinct, got {sites}")
    if any(p < 1 or p > L for p in sites):
        raise ValueError(f"pin sites must lie in 1..{L}, got {sites}")
    B = np.zeros((L, len(sites)))
    for m, site in enumerate(sites):
        B[site - 1, m] = 1.0
    return B


def linearized_model(params: LatticeParams, Sigma) -> LinearModel:
    """Assemble the (A, B, Sigma) model for a lattice configuration."""
    return LinearModel(jacobian(params), pin_matrix(params.L, params.pin_sites), Sigma)

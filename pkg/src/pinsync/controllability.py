"""Deterministic rank tests and stochastic controllability of the noisy lattice.

The stochastic side analyzes the residual d between the noisy state and the
noise-free propagation: its covariance at horizon k, here called Psi_k, must
be positive definite with a bounded norm sequence for the noise-driven system
to count as completely controllable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_square, is_symmetric, numerical_rank, spectral_norm

__all__ = [
    "ControllabilityReport",
    "ctrb_matrix",
    "ctrb_rank",
    "transition",
    "residual_covariance",
    "stochastic_ctrb_verdict",
]

# Norm values beyond this are treated as already divergent; the Psi recursion
# stops early to avoid overflow.
_NORM_CAP = 1e30


@dataclass
class ControllabilityReport:
    """Outcome of the controllability analysis of one stationary model.

    det_rank / det_controllable refer to the classical rank test on (A, B)
    and are None when no input matrix was supplied.  Psi is the residual
    covariance at horizon L; psi_norm_sequence holds the spectral norms of
    Psi_k for k = 1..horizon (possibly truncated once clearly divergent).
    """

    det_rank: int | None
    det_controllable: bool | None
    Psi: np.ndarray
    psi_norm_sequence: np.ndarray
    psi_pd: bool
    psi_bounded: bool
    sc_rank: int
    stochastically_controllable: bool


def ctrb_matrix(A, B) -> np.ndarray:
    """Stack [B | AB | ... | A^(L-1) B] for an L-dimensional state."""
    A = as_square(A, "A")
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"A is {A.shape} but B has {B.shape[0]} rows")
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def ctrb_rank(A, B) -> int:
    """Numerical rank of the controllability matrix of (A, B)."""
    return numerical_rank(ctrb_matrix(A, B))


def _matrix_seq(seq, L: int, name: str):
    """Normalize a matrix sequence argument: a single 2-D matrix means a
    stationary sequence; otherwise index by absolute time."""
    arr = np.asarray(seq, dtype=float)
    if arr.ndim == 2:
        if arr.shape != (L, L):
            raise ValueError(f"{name} must be {L} x {L}, got {arr.shape}")
        return None, arr  # stationary
    if arr.ndim == 3:
        if arr.shape[1:] != (L, L):
            raise ValueError(f"{name} entries must be {L} x {L}, got {arr.shape[1:]}")
        return arr, None
    raise ValueError(f"{name} must be a matrix or a sequence of matrices")


def _seq_item(varying, stationary, t: int, name: str):
    if stationary is not None:
        return stationary
    if t < 0 or t >= len(varying):
        raise ValueError(f"{name} does not cover time index {t}")
    return varying[t]


def transition(A_seq, start: int, stop: int) -> np.ndarray:
    """State transition matrix phi(stop, start) = A_{stop-1} ... A_{start}.

    A_seq is either one matrix (time-invariant) or a sequence indexed by
    absolute time covering [start, stop).  The empty product is the identity.
    """
    if stop < start:
        raise ValueError(f"need stop >= start, got ({start}, {stop})")
    arr = np.asarray(A_seq, dtype=float)
    if arr.ndim == 2:
        return np.linalg.matrix_power(as_square(arr, "A_seq"), stop - start)
    varying, stationary = _matrix_seq(arr, arr.shape[-1], "A_seq")
    phi = np.eye(arr.shape[-1])
    for t in range(start, stop):
        phi = _seq_item(varying, stationary, t, "A_seq") @ phi
    return phi


def residual_covariance(A_seq, E_seq, Sigma_seq, horizon: int) -> np.ndarray:
    """Covariance of the noise-driven residual over `horizon` steps.

    Evaluates  sum_{j=1}^{H} phi(H, j) E_{j-1} Sigma_{j-1} E_{j-1}^T phi(H, j)^T
    through the equivalent forward recursion
    Psi_{k+1} = A_k Psi_k A_k^T + E_k Sigma_k E_k^T.  Each argument may be a
    single matrix (stationary) or a sequence covering the horizon.  The result
    is symmetric PSD by construction.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    probe = np.asarray(A_seq, dtype=float)
    L = probe.shape[-1]
    A_var, A_st = _matrix_seq(A_seq, L, "A_seq")
    E_var, E_st = _matrix_seq(E_seq, L, "E_seq")
    S_var, S_st = _matrix_seq(Sigma_seq, L, "Sigma_seq")

    Psi = np.zeros((L, L))
    for k in range(horizon):
        Sk = _seq_item(S_var, S_st, k, "Sigma_seq")
        if not is_symmetric(Sk):
            raise ValueError(f"Sigma at time {k} is not symmetric")
        Ek = _seq_item(E_var, E_st, k, "E_seq")
        if k > 0:
            Ak = _seq_item(A_var, A_st, k, "A_seq")
            Psi = Ak @ Psi @ Ak.T
        Psi = Psi + Ek @ Sk @ Ek.T
    return 0.5 * (Psi + Psi.T)


def _psi_norm_sequence(A, Q, max_horizon: int, keep_at: int):
    """Spectral norms of Psi_k for k = 1..max_horizon (stationary model),
    truncated once the norm exceeds a divergence cap.  Also returns Psi at
    horizon keep_at (or at the truncation point if cut short)."""
    Psi = np.zeros_like(Q)
    term = Q.copy()
    norms = []
    psi_kept = None
    for k in range(1, max_horizon + 1):
        Psi = Psi + term
        if k <= keep_at:
            psi_kept = 0.5 * (Psi + Psi.T)
        n = spectral_norm(Psi)
        norms.append(n)
        if not np.isfinite(n) or n > _NORM_CAP:
            break
        term = A @ term @ A.T
    return np.asarray(norms), psi_kept


def stochastic_ctrb_verdict(
    A,
    E,
    Sigma,
    max_horizon: int = 200,
    bound_tol: float = 1e-9,
    B=None,
) -> ControllabilityReport:
    """Full controllability verdict for a stationary model (A, E, Sigma).

    Checks three things: positive definiteness of Psi_L, boundedness of the
    spectral-norm sequence ||Psi_k||, and the rank of the matrix assembled
    like the classical controllability matrix with (A, E) in place of (A, B).
    Unbounded horizons cannot be tested, so boundedness is operationalized as
    the norm increments decaying below bound_tol before max_horizon.  The
    verdict is true iff that rank equals L and the sequence is bounded.

    When B is given, the classical rank test on (A, B) fills the det_* fields.
    """
    A = as_square(A, "A")
    E = as_square(E, "E")
    Sigma = as_square(Sigma, "Sigma")
    L = A.shape[0]
    if max_horizon < L:
        raise ValueError(f"max_horizon must be >= L = {L}, got {max_horizon}")

    Q = E @ Sigma @ E.T
    norms, Psi_L = _psi_norm_sequence(A, Q, max_horizon, keep_at=L)

    eigs = np.linalg.eigvalsh(Psi_L)
    psi_pd = bool(eigs.min() > max(1e-300, 1e-12 * max(eigs.max(), 0.0)))

    # Psi_k is monotone in the Loewner order, so increments are nonnegative;
    # a geometric tail shows up as the last increment falling under bound_tol.
    if len(norms) < max_horizon:
        psi_bounded = False  # truncated by the divergence cap
    elif len(norms) >= 2:
        psi_bounded = bool(norms[-1] - norms[-2] < bound_tol)
    else:
        psi_bounded = True

    sc_rank = numerical_rank(ctrb_matrix(A, E))

    det_rank = None
    det_controllable = None
    if B is not None:
        det_rank = ctrb_rank(A, B)
        det_controllable = bool(det_rank == L)

    return ControllabilityReport(
        det_rank=det_rank,
        det_controllable=det_controllable,
        Psi=Psi_L,
        psi_norm_sequence=norms,
        psi_pd=psi_pd,
        psi_bounded=psi_bounded,
        sc_rank=sc_rank,
        stochastically_controllable=bool(sc_rank == L and psi_bounded),
    )

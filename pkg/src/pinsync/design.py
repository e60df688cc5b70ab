"""Probabilistic gain design for the pinned lattice.

The randomized controller u = C x + omega, omega ~ N(0, Gamma), is obtained
by minimizing the Kullback-Leibler divergence between the closed-loop joint
density and an ideal zero-mean density.  For Gaussian models the minimizer
is linear feedback whose quadratic cost matrix M solves a Riccati-type
fixed-point equation; the remaining functions evaluate the identities that
certify the solution (cost decomposition, Lyapunov balance, argmin property).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import as_square, numerical_rank, pd_inverse, sym_inv_sqrt, sym_sqrt
from .linearize import LinearModel

__all__ = [
    "GainSolution",
    "RiccatiConvergenceError",
    "solve_riccati",
    "gain",
    "closed_loop_spectrum",
    "as_rank",
    "partial_cost",
    "lyapunov_residual",
    "cost_to_go",
    "sample_control",
    "optimality_check",
    "design_controller",
    "write_gain_csv",
]


# Iterations without a new best defect before the floating-point floor
# check may end the iteration.
_STALL_LIMIT = 500


class RiccatiConvergenceError(RuntimeError):
    """Fixed-point iteration failed to converge (unstabilizable or
    mis-specified model)."""

    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"no fixed point after {iterations} iterations "
            f"(last residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True, eq=False)
class GainSolution:
    """Converged controller design.

    C                 M x L feedback gain
    Mcost             L x L symmetric PSD quadratic cost matrix
    Gamma             M x M controller noise covariance (design input)
    riccati_residual  Frobenius norm of the fixed-point defect at Mcost
    iterations        fixed-point iterations used
    eigenvalues       spectrum of A + B C
    spectral_radius   max |eigenvalue|; < 1 means the loop is stable
    as_rank           rank of the stacked [W; WA; ...; WA^(L-1)],
                      W the symmetric root of Sigma^{-1}
    """

    C: np.ndarray
    Mcost: np.ndarray
    Gamma: np.ndarray
    riccati_residual: float
    iterations: int
    eigenvalues: np.ndarray
    spectral_radius: float
    as_rank: int

    @property
    def stabilizing(self) -> bool:
        return self.spectral_radius < 1.0


def _design_terms(model: LinearModel, Gamma):
    """Shared pieces: Sigma^{-1} A, Sigma^{-1} B and Gamma^{-1}."""
    Gamma = as_square(Gamma, "Gamma")
    if Gamma.shape != (model.M, model.M):
        raise ValueError(f"Gamma must be {model.M} x {model.M}, got {Gamma.shape}")
    # Factorization-based solves; Gamma^{-1} appears additively and is formed
    # explicitly from its Cholesky factorization (it is a small M x M block).
    try:
        np.linalg.cholesky(model.Sigma)  # demand PD, not just PSD
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            "design requires a positive definite state-noise covariance Sigma"
        ) from None
    SinvA = np.linalg.solve(model.Sigma, model.A)
    SinvB = np.linalg.solve(model.Sigma, model.B)
    Ginv = pd_inverse(Gamma)
    return SinvA, SinvB, Ginv


def _riccati_rhs(M, model, SinvA, SinvB, Ginv):
    A, B = model.A, model.B
    G = B.T @ M @ B + B.T @ SinvB + Ginv
    S = B.T @ M @ A + B.T @ SinvA
    rhs = A.T @ SinvA + A.T @ M @ A - S.T @ np.linalg.solve(G, S)
    return 0.5 * (rhs + rhs.T)


def solve_riccati(
    model: LinearModel,
    Gamma,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    return_info: bool = False,
):
    """Solve the quadratic cost fixed-point equation

        M = A'S A + A'M A - (A'M B + A'S B)(B'M B + B'S B + G)^{-1}(B'M A + B'S A)

    with S = Sigma^{-1} and G = Gamma^{-1}, by fixed-point iteration from
    M_0 = 0 with symmetrization each step.  Iteration stops once the defect
    ||rhs(M) - M||_F at the returned M falls below tol, so substituting the
    result back into the right-hand side reproduces it to within tol.

    Solutions whose norm is large (stiff noise covariances drive ||M|| past
    1e7) cannot reach a small absolute defect in double precision, so once
    progress stalls with the defect at the floating-point floor (below
    1e-12 * ||M||_F) the best iterate is returned and the achieved defect
    reported.  With return_info=True returns (M, iterations, residual);
    otherwise M.  Raises RiccatiConvergenceError after max_iter without
    convergence, or as soon as the defect overflows.
    """
    SinvA, SinvB, Ginv = _design_terms(model, Gamma)
    M = np.zeros((model.L, model.L))
    best_M, best_residual, stall = M, np.inf, 0
    for it in range(max_iter + 1):
        rhs = _riccati_rhs(M, model, SinvA, SinvB, Ginv)
        residual = float(np.linalg.norm(rhs - M, "fro"))
        if not np.isfinite(residual):
            raise RiccatiConvergenceError(it, residual)
        if residual < best_residual:
            best_M, best_residual, stall = M, residual, 0
        else:
            stall += 1
        if residual < tol:
            if return_info:
                return M, it, residual
            return M
        at_float_floor = best_residual <= 1e-12 * max(
            1.0, float(np.linalg.norm(best_M, "fro"))
        )
        if stall >= _STALL_LIMIT and at_float_floor:
            if return_info:
                return best_M, it, best_residual
            return best_M
        if it == max_iter:
            break
        M = rhs
    raise RiccatiConvergenceError(max_iter, residual)


def gain(model: LinearModel, Gamma, Mcost) -> np.ndarray:
    """Feedback gain C = -(B'M B + B'S B + G)^{-1} (B'M A + B'S A)."""
    SinvA, SinvB, Ginv = _design_terms(model, Gamma)
    Mcost = as_square(Mcost, "Mcost")
    B = model.B
    G = B.T @ Mcost @ B + B.T @ SinvB + Ginv
    S = B.T @ Mcost @ model.A + B.T @ SinvA
    return -np.linalg.solve(G, S)


def closed_loop_spectrum(A, B, C):
    """Eigenvalues of A + B C and their maximum modulus."""
    A = as_square(A, "A")
    eigs = np.linalg.eigvals(A + np.asarray(B, float) @ np.asarray(C, float))
    return eigs, float(np.abs(eigs).max())


def as_rank(Sigma, A) -> int:
    """Rank of the stacked matrix [W; WA; ...; WA^(L-1)] with
    W = ((Sigma^{-1})^{1/2})^T, the symmetric PSD root."""
    A = as_square(A, "A")
    W = sym_inv_sqrt(Sigma).T  # symmetric, so the transpose is itself
    blocks = [W]
    for _ in range(A.shape[0] - 1):
        blocks.append(blocks[-1] @ A)
    return numerical_rank(np.vstack(blocks))


def partial_cost(x, C, model: LinearModel, Gamma) -> float:
    """One-step cost x' [C'G C + (A+BC)' S (A+BC)] x, S = Sigma^{-1},
    G = Gamma^{-1}; nonnegative for all x."""
    x = np.asarray(x, dtype=float)
    C = np.asarray(C, dtype=float)
    Ginv = pd_inverse(Gamma)
    Acl = model.A + model.B @ C
    SinvAcl = np.linalg.solve(model.Sigma, Acl)
    return float(x @ (C.T @ Ginv @ C + Acl.T @ SinvAcl) @ x)


def lyapunov_residual(C, Mcost, model: LinearModel, Gamma) -> float:
    """Frobenius defect of the Lyapunov balance

        C'G C + (A+BC)' S (A+BC) + (A+BC)' M (A+BC) - M = 0

    which a converged (C, M) pair must satisfy; near zero certifies it."""
    C = np.asarray(C, dtype=float)
    Mcost = as_square(Mcost, "Mcost")
    Ginv = pd_inverse(Gamma)
    Acl = model.A + model.B @ C
    SinvAcl = np.linalg.solve(model.Sigma, Acl)
    defect = C.T @ Ginv @ C + Acl.T @ SinvAcl + Acl.T @ Mcost @ Acl - Mcost
    return float(np.linalg.norm(defect, "fro"))


def cost_to_go(x, Mcost) -> float:
    """Optimal cost-to-go 0.5 * x'M x.  The additive constant of the
    underlying log-density is unspecified and fixed to zero; it affects
    neither the gain nor the cost matrix."""
    x = np.asarray(x, dtype=float)
    return float(0.5 * x @ as_square(Mcost, "Mcost") @ x)


def sample_control(C, x, Gamma, rng: np.random.Generator, deterministic: bool = False):
    """Draw u = C x + omega with omega ~ N(0, Gamma) through a symmetric
    factor of Gamma.  With deterministic=True returns the mean C x exactly."""
    C = np.asarray(C, dtype=float)
    u = C @ np.asarray(x, dtype=float)
    if deterministic:
        return u
    return u + sym_sqrt(Gamma) @ rng.standard_normal(C.shape[0])


def _completion_value(C, model, Gamma, Mcost) -> float:
    """Scalar value of the completed-square form whose minimum over C is zero:
    trace of {G^{1/2} C + G^{-1/2} S}' {G^{1/2} C + G^{-1/2} S} with
    G = Gamma^{-1} + B'M B + B'S B and S = B'M A + B'S A."""
    SinvA, SinvB, Ginv = _design_terms(model, Gamma)
    B = model.B
    G = Ginv + B.T @ Mcost @ B + B.T @ SinvB
    S = B.T @ Mcost @ model.A + B.T @ SinvA
    X = sym_sqrt(G) @ C + sym_inv_sqrt(G) @ S
    return float(np.trace(X.T @ X))


def optimality_check(
    C_star,
    Mcost,
    model: LinearModel,
    Gamma,
    trials: int = 100,
    perturbation_norm: float = 0.01,
    rng: np.random.Generator | None = None,
    tol: float = -1e-10,
) -> bool:
    """Verify C_star is the argmin of the completed-square form.

    The form is zero at the optimum and positive semidefinite in structure,
    so no perturbed gain C_star + dC may push its value below the value at
    C_star by more than |tol|.  Perturbations are random with Frobenius norm
    `perturbation_norm`.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    C_star = np.asarray(C_star, dtype=float)
    base = _completion_value(C_star, model, Gamma, Mcost)
    for _ in range(trials):
        dC = rng.standard_normal(C_star.shape)
        dC *= perturbation_norm / np.linalg.norm(dC)
        if _completion_value(C_star + dC, model, Gamma, Mcost) - base < tol:
            return False
    return True


def design_controller(
    model: LinearModel,
    Gamma,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> GainSolution:
    """Full design pipeline: cost matrix, gain, closed-loop spectrum and the
    stacked-root rank required for asymptotic stability."""
    Gamma = as_square(Gamma, "Gamma")
    Mcost, iterations, residual = solve_riccati(
        model, Gamma, tol=tol, max_iter=max_iter, return_info=True
    )
    C = gain(model, Gamma, Mcost)
    eigs, rho = closed_loop_spectrum(model.A, model.B, C)
    return GainSolution(
        C=C,
        Mcost=Mcost,
        Gamma=Gamma,
        riccati_residual=residual,
        iterations=iterations,
        eigenvalues=eigs,
        spectral_radius=rho,
        as_rank=as_rank(model.Sigma, model.A),
    )


def write_gain_csv(solution: GainSolution, out_dir) -> list[Path]:
    """Export the design: gain.csv (C row-major), cost_matrix.csv (M
    row-major) and eigs.csv (re, im pairs), full decimal precision."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    def write_matrix(name, mat):
        path = out / name
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            for row in np.atleast_2d(mat):
                writer.writerow([repr(float(v)) for v in row])
        paths.append(path)

    write_matrix("gain.csv", solution.C)
    write_matrix("cost_matrix.csv", solution.Mcost)
    path = out / "eigs.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im"])
        for lam in solution.eigenvalues:
            writer.writerow([repr(float(lam.real)), repr(float(lam.imag))])
    paths.append(path)
    return paths

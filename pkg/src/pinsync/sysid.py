"""Estimation of the stochastic linear model (A, B, Sigma) from input-state
data by multivariate least squares with an empirical residual covariance."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lattice import LatticeParams, fixed_point, step
from .linalg import numerical_rank, sym_sqrt
from .linearize import LinearModel

__all__ = [
    "Dataset",
    "IdentifiabilityError",
    "PlantDivergenceError",
    "fit_linear_model",
    "excite_and_collect",
    "white_noise_policy",
]

# State-norm overflow threshold used to call a rollout divergent.
_DIVERGENCE_NORM = 1e9


class IdentifiabilityError(ValueError):
    """The dataset cannot pin down the model (too few or degenerate records)."""


class PlantDivergenceError(RuntimeError):
    """A plant rollout overflowed; `step` holds the offending step index."""

    def __init__(self, step_index: int, norm: float):
        super().__init__(
            f"plant diverged at step {step_index} (state norm {norm:.3e})"
        )
        self.step = step_index
        self.norm = norm


@dataclass(frozen=True, eq=False)
class Dataset:
    """Transition records (x_t, u_t, x_{t+1}) stacked row-wise."""

    x: np.ndarray
    u: np.ndarray
    x_next: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        u = np.atleast_2d(np.asarray(self.u, dtype=float))
        xn = np.atleast_2d(np.asarray(self.x_next, dtype=float))
        if not (x.shape[0] == u.shape[0] == xn.shape[0]):
            raise ValueError("x, u, x_next must have the same number of records")
        if x.shape[0] < 1:
            raise ValueError("dataset must contain at least one record")
        if x.shape[1] != xn.shape[1]:
            raise ValueError("x and x_next must have the same state dimension")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "x_next", xn)

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def L(self) -> int:
        return self.x.shape[1]

    @property
    def M(self) -> int:
        return self.u.shape[1]

    def to_csv(self, path) -> None:
        """Write records as `t, x1..xL, u1..uM, xnext1..xnextL`."""
        path = Path(path)
        header = (
            ["t"]
            + [f"x{i + 1}" for i in range(self.L)]
            + [f"u{m + 1}" for m in range(self.M)]
            + [f"xnext{i + 1}" for i in range(self.L)]
        )
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t in range(len(self)):
                row = [t]
                row += [repr(float(v)) for v in self.x[t]]
                row += [repr(float(v)) for v in self.u[t]]
                row += [repr(float(v)) for v in self.x_next[t]]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        """Read a dataset written by `to_csv`."""
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            L = sum(1 for h in header if h.startswith("x") and not h.startswith("xnext"))
            M = sum(1 for h in header if h.startswith("u"))
            rows = [list(map(float, row[1:])) for row in reader if row]
        data = np.asarray(rows)
        return cls(x=data[:, :L], u=data[:, L:L + M], x_next=data[:, L + M:])


def fit_linear_model(data: Dataset, diagonal: bool = False) -> LinearModel:
    """Least-squares fit of (A, B) plus the empirical residual covariance.

    (A, B) minimize sum_t ||x_{t+1} - A x_t - B u_t||^2 over the stacked
    regressors [x_t; u_t]; Sigma is the residual second moment
    mean_t r_t r_t^T.  With `diagonal=True` only its diagonal is kept,
    which is what the gain design consumes.  No intercept is fitted.

    Raises IdentifiabilityError when the records cannot determine the model
    (fewer than L + M records, or rank-deficient regressors).
    """
    L, M, N = data.L, data.M, len(data)
    if N < L + M:
        raise IdentifiabilityError(
            f"need at least L + M = {L + M} records, got {N}"
        )
    Phi = np.hstack([data.x, data.u])
    if numerical_rank(Phi) < L + M:
        raise IdentifiabilityError(
            "regressors are rank deficient (insufficient excitation)"
        )
    Theta, *_ = np.linalg.lstsq(Phi, data.x_next, rcond=None)
    A = Theta[:L].T
    B = Theta[L:].T
    resid = data.x_next - Phi @ Theta
    Sigma = resid.T @ resid / N
    Sigma = 0.5 * (Sigma + Sigma.T)
    if diagonal:
        Sigma = np.diag(np.diag(Sigma))
    return LinearModel(A=A, B=B, Sigma=Sigma)


def white_noise_policy(m: int, std: float = 0.1):
    """Excitation policy drawing i.i.d. N(0, std^2) inputs of dimension m."""

    def policy(t: int, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return std * rng.standard_normal(m)

    return policy


def excite_and_collect(
    plant,
    input_policy=None,
    N: int = 1000,
    seed: int = 0,
    noise_cov=None,
    x0=None,
    reset_every: int | None = None,
) -> Dataset:
    """Roll the plant forward under an excitation policy and record transitions.

    `plant` is either a LinearModel (simulated exactly, noise kappa ~
    N(0, Sigma) through E) or LatticeParams (nonlinear lattice; states are
    recorded as deviations from z*, and `noise_cov` gives the additive
    disturbance covariance, zero when omitted).  `input_policy(t, x, rng)`
    returns the input vector; the default is white noise with std 0.1.
    Everything is drawn from one seeded generator, so a fixed seed gives an
    identical dataset.

    `reset_every` restarts the rollout from x0 every that many steps; short
    segments keep open-loop-unstable plants bounded, and no record ever
    spans a restart.

    Raises PlantDivergenceError with the step index if the state overflows.
    """
    if N < 1:
        raise ValueError(f"need N >= 1 records, got {N}")
    if reset_every is not None and reset_every < 1:
        raise ValueError(f"reset_every must be >= 1, got {reset_every}")
    rng = np.random.default_rng(seed)

    if isinstance(plant, LinearModel):
        L, M = plant.L, plant.M
        noise_factor = sym_sqrt(plant.Sigma)

        def advance(x, u):
            kappa = noise_factor @ rng.standard_normal(L)
            return plant.A @ x + plant.B @ u + plant.E @ kappa
    elif isinstance(plant, LatticeParams):
        L, M = plant.L, plant.M
        zstar = fixed_point(plant.a)
        noise_factor = None if noise_cov is None else sym_sqrt(noise_cov)

        def advance(x, u):
            noise = (
                noise_factor @ rng.standard_normal(L)
                if noise_factor is not None
                else None
            )
            return step(zstar + x, plant, u, noise) - zstar
    else:
        raise TypeError(f"plant must be LinearModel or LatticeParams, got {type(plant)}")

    if input_policy is None:
        input_policy = white_noise_policy(M, 0.1)

    start = np.zeros(L) if x0 is None else np.asarray(x0, dtype=float).copy()
    x = start.copy()
    xs = np.empty((N, L))
    us = np.empty((N, M))
    xns = np.empty((N, L))
    for t in range(N):
        if reset_every is not None and t > 0 and t % reset_every == 0:
            x = start.copy()
        u = np.atleast_1d(np.asarray(input_policy(t, x, rng), dtype=float))
        x_next = advance(x, u)
        norm = float(np.linalg.norm(x_next))
        if not np.isfinite(norm) or norm > _DIVERGENCE_NORM:
            raise PlantDivergenceError(t, norm)
        xs[t], us[t], xns[t] = x, u, x_next
        x = x_next
    return Dataset(x=xs, u=us, x_next=xns)

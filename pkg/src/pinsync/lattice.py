"""Coupled map lattice dynamics: a ring of logistic maps with diffusive
coupling and additive control injected at a small set of pinned sites."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LatticeParams:
    """Configuration of the nonlinear lattice.

    a          logistic map parameter, 0 < a <= 4
    epsilon    diffusive coupling strength, 0 < epsilon < 0.5
    L          number of lattice sites (>= 2), periodic boundaries
    pin_sites  ordered distinct 1-based site indices receiving control
    """

    a: float
    epsilon: float
    L: int
    pin_sites: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "pin_sites", tuple(int(p) for p in self.pin_sites))
        if not 0.0 < self.a <= 4.0:
            raise ValueError(f"map parameter a must be in (0, 4], got {self.a}")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError(f"coupling epsilon must be in (0, 0.5), got {self.epsilon}")
        if self.L < 2:
            raise ValueError(f"lattice length must be >= 2, got {self.L}")
        if not 1 <= len(self.pin_sites) <= self.L:
            raise ValueError("need between 1 and L pin sites")
        if len(set(self.pin_sites)) != len(self.pin_sites):
            raise ValueError(f"pin sites must be distinct, got {self.pin_sites}")
        if any(p < 1 or p > self.L for p in self.pin_sites):
            raise ValueError(f"pin sites must lie in 1..{self.L}, got {self.pin_sites}")

    @property
    def M(self) -> int:
        """Number of pinned (controlled) sites."""
        return len(self.pin_sites)


def logistic_map(z, a):
    """Local map f(z) = a*z*(1 - z), applied elementwise."""
    return a * z * (1.0 - z)


def fixed_point(a: float) -> float:
    """Homogeneous steady state z* = 1 - 1/a of the logistic map.

    Only defined for a > 1; below that the nontrivial fixed point is
    nonpositive and outside the synchronization regime.
    """
    if a <= 1.0:
        raise ValueError(f"fixed point requires a > 1, got {a}")
    return 1.0 - 1.0 / a


def step(state, params: LatticeParams, controls=None, noise=None) -> np.ndarray:
    """Advance the lattice one time step.

    z_i(t+1) = f[(1-2*eps)*z_i + eps*(z_{i-1} + z_{i+1})] + control at pins
               + noise_i

    with indices wrapped modulo L.  Control enters additively after the map,
    one scalar per pin site; noise is an additive per-site disturbance.
    States are never clipped: divergence propagates to the caller.
    """
    z = np.asarray(state, dtype=float)
    if z.shape != (params.L,):
        raise ValueError(f"state must have shape ({params.L},), got {z.shape}")
    if controls is None:
        controls = np.zeros(params.M)
    controls = np.asarray(controls, dtype=float)
    if controls.shape != (params.M,):
        raise ValueError(f"controls must have shape ({params.M},), got {controls.shape}")
    if noise is None:
        noise = np.zeros(params.L)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (params.L,):
        raise ValueError(f"noise must have shape ({params.L},), got {noise.shape}")

    eps = params.epsilon
    coupled = (1.0 - 2.0 * eps) * z + eps * (np.roll(z, 1) + np.roll(z, -1))
    z_next = logistic_map(coupled, params.a)
    pins = np.asarray(params.pin_sites) - 1
    z_next[pins] += controls
    return z_next + noise

"""Closed-loop simulation, experiment orchestration and figure-ready reports.

A run builds (or estimates) the linear model, designs the randomized
controller, records the controllability analysis, then simulates either the
nonlinear lattice or its linearization under sampled control with seeded
noise.  Identical (config, seed) pairs give identical results.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controllability import ControllabilityReport, stochastic_ctrb_verdict
from .design import GainSolution, design_controller, sample_control, write_gain_csv
from .lattice import LatticeParams, fixed_point, step
from .linalg import as_square, is_symmetric, sym_sqrt
from .linearize import LinearModel, linearized_model
from .sysid import excite_and_collect, fit_linear_model, white_noise_policy

__all__ = [
    "ExperimentConfig",
    "Trajectory",
    "SteadyStateStats",
    "ExperimentResult",
    "run_experiment",
    "steady_state_stats",
    "emit_report",
    "load_config",
    "fig1_config",
    "fig3_config",
]

PLANT_KINDS = ("nonlinear", "linearized")
MODEL_SOURCES = ("analytic", "identified")

# |x| beyond this marks the run divergent; the trajectory is truncated there.
_DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """One closed-loop experiment.

    x0 is the initial deviation from the homogeneous state: a vector, or a
    scalar broadcast to every site.  noise_cov is the plant disturbance
    covariance; Gamma the controller covariance.  sigma optionally overrides
    the design covariance used with the analytic model (the identified model
    brings its own fitted covariance).
    """

    lattice: LatticeParams
    noise_cov: np.ndarray
    Gamma: np.ndarray
    plant_kind: str = "nonlinear"
    x0: float | np.ndarray = 0.9
    T: int = 200
    seed: int = 0
    model_source: str = "analytic"
    sysid_samples: int = 10_000
    sigma: np.ndarray | None = None
    deterministic_control: bool = False

    def __post_init__(self):
        L, M = self.lattice.L, self.lattice.M
        if self.plant_kind not in PLANT_KINDS:
            raise ValueError(f"plant_kind must be one of {PLANT_KINDS}")
        if self.model_source not in MODEL_SOURCES:
            raise ValueError(f"model_source must be one of {MODEL_SOURCES}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if self.sysid_samples < 1:
            raise ValueError("sysid_samples must be >= 1")
        noise_cov = as_square(self.noise_cov, "noise_cov")
        if noise_cov.shape != (L, L):
            raise ValueError(f"noise_cov must be {L} x {L}")
        if not is_symmetric(noise_cov):
            raise ValueError("noise_cov must be symmetric")
        if np.linalg.eigvalsh(noise_cov).min() < -1e-12:
            raise ValueError("noise_cov must be positive semidefinite")
        Gamma = as_square(self.Gamma, "Gamma")
        if Gamma.shape != (M, M):
            raise ValueError(f"Gamma must be {M} x {M}")
        np.linalg.cholesky(Gamma)  # PD required
        object.__setattr__(self, "noise_cov", noise_cov)
        object.__setattr__(self, "Gamma", Gamma)
        if self.sigma is not None:
            sigma = as_square(self.sigma, "sigma")
            if sigma.shape != (L, L):
                raise ValueError(f"sigma must be {L} x {L}")
            object.__setattr__(self, "sigma", sigma)

    def initial_deviation(self) -> np.ndarray:
        x0 = np.asarray(self.x0, dtype=float)
        if x0.ndim == 0:
            return np.full(self.lattice.L, float(x0))
        if x0.shape != (self.lattice.L,):
            raise ValueError(f"x0 must be scalar or length {self.lattice.L}")
        return x0.copy()


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States, controls and realized noise of one closed-loop run.

    states holds deviations x_t from the homogeneous state, one row per step
    including t = 0; sync_error is the per-step max-norm of the deviation.
    diverged_at is the step at which the state overflowed (rows after it are
    dropped), or None for a complete run.
    """

    states: np.ndarray
    controls: np.ndarray
    noises: np.ndarray
    sync_error: np.ndarray
    diverged_at: int | None = None


@dataclass(frozen=True, eq=False)
class SteadyStateStats:
    rms_per_site: np.ndarray
    max_abs: float
    mean_control_mag: float


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    trajectory: Trajectory
    gain: GainSolution
    report: ControllabilityReport
    model: LinearModel
    config: ExperimentConfig
    assumption_warning: bool = False


# Excitation rollouts restart periodically so open-loop-unstable lattices
# (spectral radius up to 2 in the chaotic regime) stay bounded.
_SYSID_RESET_EVERY = 20


def _build_model(config: ExperimentConfig, rng_sysid: np.random.Generator) -> LinearModel:
    if config.model_source == "identified":
        # The estimation plant is the linearized lattice driven by the
        # configured plant noise; the fit's diagonal covariance feeds design.
        true_model = linearized_model(config.lattice, config.noise_cov)
        data = excite_and_collect(
            true_model,
            input_policy=white_noise_policy(config.lattice.M, 0.1),
            N=config.sysid_samples,
            seed=rng_sysid.integers(2**63),
            reset_every=_SYSID_RESET_EVERY,
        )
        return fit_linear_model(data, diagonal=True)
    design_sigma = config.sigma if config.sigma is not None else config.noise_cov
    return linearized_model(config.lattice, design_sigma)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Design, verify and simulate one experiment.

    Pipeline: build or identify the linear model, design the gain, record
    the controllability and stability-rank verdicts, then roll the plant
    (nonlinear lattice or linear model) under the sampled controller for T
    steps.  All randomness derives from config.seed through named child
    streams, so runs are reproducible.
    """
    ss = np.random.SeedSequence(config.seed)
    child_sysid, child_noise, child_ctrl = ss.spawn(3)
    model = _build_model(config, np.random.default_rng(child_sysid))

    solution = design_controller(model, config.Gamma)
    report = stochastic_ctrb_verdict(
        model.A, model.E, model.Sigma, B=model.B
    )
    assumption_warning = solution.as_rank < model.L or not solution.stabilizing

    params = config.lattice
    L, M, T = params.L, params.M, config.T
    # The simulated plant is the true system, not the controller's model:
    # the nonlinear lattice, or its exact linearization about z*.
    plant = linearized_model(params, config.noise_cov)
    noise_factor = sym_sqrt(config.noise_cov)
    rng_noise = np.random.default_rng(child_noise)
    rng_ctrl = np.random.default_rng(child_ctrl)

    x = config.initial_deviation()
    zstar = fixed_point(params.a)
    states = np.empty((T + 1, L))
    controls = np.empty((T, M))
    noises = np.empty((T, L))
    states[0] = x
    diverged_at = None
    steps_done = 0
    for t in range(T):
        u = sample_control(
            solution.C, x, config.Gamma, rng_ctrl,
            deterministic=config.deterministic_control,
        )
        kappa = noise_factor @ rng_noise.standard_normal(L)
        if config.plant_kind == "nonlinear":
            x_next = step(zstar + x, params, u, kappa) - zstar
        else:
            x_next = plant.A @ x + plant.B @ u + kappa
        controls[t] = u
        noises[t] = kappa
        states[t + 1] = x_next
        steps_done = t + 1
        if not np.all(np.isfinite(x_next)) or np.abs(x_next).max() > _DIVERGENCE_LIMIT:
            diverged_at = t + 1
            break
        x = x_next

    n = steps_done
    states = states[: n + 1]
    with np.errstate(invalid="ignore"):
        sync_error = np.abs(states).max(axis=1)
    trajectory = Trajectory(
        states=states,
        controls=controls[:n],
        noises=noises[:n],
        sync_error=sync_error,
        diverged_at=diverged_at,
    )
    return ExperimentResult(
        trajectory=trajectory,
        gain=solution,
        report=report,
        model=model,
        config=config,
        assumption_warning=assumption_warning,
    )


def steady_state_stats(traj: Trajectory, burn_in: int) -> SteadyStateStats:
    """Per-site RMS, worst deviation and mean |u| over steps >= burn_in."""
    T = traj.controls.shape[0]
    if burn_in >= T:
        raise ValueError(f"burn_in must be < T = {T}, got {burn_in}")
    tail = traj.states[burn_in:]
    controls = traj.controls[burn_in:]
    return SteadyStateStats(
        rms_per_site=np.sqrt(np.mean(tail**2, axis=0)),
        max_abs=float(np.abs(tail).max()),
        mean_control_mag=float(np.abs(controls).mean()),
    )


def _write_csv(path: Path, header, rows):
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            if header:
                writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write report file {path}: {exc}") from exc


def emit_report(result: ExperimentResult, out_dir) -> list[Path]:
    """Write figure-ready CSVs plus a plain-text verdict summary.

    states.csv (t, x1..xL), controls.csv (t, u1..uM), gain.csv (C row-major),
    cost_matrix.csv, eigs.csv (re, im) and report.txt with ranks, spectral
    radius, residuals and verdicts, all at full decimal precision.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc

    traj, sol, report = result.trajectory, result.gain, result.report
    L = result.model.L
    M = result.model.M
    paths = []

    p = out / "states.csv"
    _write_csv(
        p,
        ["t"] + [f"x{i + 1}" for i in range(L)],
        ([t] + [repr(float(v)) for v in row] for t, row in enumerate(traj.states)),
    )
    paths.append(p)

    p = out / "controls.csv"
    _write_csv(
        p,
        ["t"] + [f"u{m + 1}" for m in range(M)],
        ([t] + [repr(float(v)) for v in row] for t, row in enumerate(traj.controls)),
    )
    paths.append(p)

    paths.extend(write_gain_csv(sol, out))

    lines = [
        f"lattice: a={result.config.lattice.a} epsilon={result.config.lattice.epsilon} "
        f"L={L} pins={list(result.config.lattice.pin_sites)}",
        f"plant_kind: {result.config.plant_kind}",
        f"model_source: {result.config.model_source}",
        f"seed: {result.config.seed}",
        f"det_rank: {report.det_rank}",
        f"det_controllable: {report.det_controllable}",
        f"sc_rank: {report.sc_rank}",
        f"psi_pd: {report.psi_pd}",
        f"psi_bounded: {report.psi_bounded}",
        f"stochastically_controllable: {report.stochastically_controllable}",
        f"as_rank: {sol.as_rank}",
        f"assumption1_satisfied: {sol.as_rank == L and sol.stabilizing}",
        f"spectral_radius: {sol.spectral_radius!r}",
        f"riccati_residual: {sol.riccati_residual!r}",
        f"riccati_iterations: {sol.iterations}",
        f"stabilizing: {sol.stabilizing}",
        f"diverged_at: {traj.diverged_at}",
        f"final_sync_error: {float(traj.sync_error[-1])!r}",
    ]
    p = out / "report.txt"
    try:
        p.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report file {p}: {exc}") from exc
    paths.append(p)
    return paths


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _cov_from_section(section, prefix: str, dim: int, what: str) -> np.ndarray:
    """Read `<prefix>_var` (scalar -> var * I) or `<prefix>_diag` (list)."""
    var_key, diag_key = f"{prefix}_var", f"{prefix}_diag"
    if diag_key in section:
        diag = _parse_floats(section[diag_key])
        if len(diag) != dim:
            raise ValueError(f"{what}: {diag_key} needs {dim} entries, got {len(diag)}")
        return np.diag(diag)
    if var_key in section:
        return float(section[var_key]) * np.eye(dim)
    raise ValueError(f"{what}: set {var_key} or {diag_key}")


def load_config(path) -> ExperimentConfig:
    """Read a line-oriented `key = value` experiment file with
    [lattice], [noise], [model] and [simulation] sections."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    read = parser.read(path)
    if not read:
        raise OSError(f"cannot read config file {path}")

    lat = parser["lattice"]
    lattice = LatticeParams(
        a=lat.getfloat("a"),
        epsilon=lat.getfloat("epsilon"),
        L=lat.getint("length"),
        pin_sites=tuple(int(p) for p in _parse_floats(lat["pins"])),
    )

    noise = parser["noise"]
    noise_cov = _cov_from_section(noise, "plant", lattice.L, "[noise]")
    Gamma = _cov_from_section(noise, "controller", lattice.M, "[noise]")

    sigma = None
    sigma_text = parser.get("model", "sigma_diag", fallback=None)
    if sigma_text is not None:
        diag = _parse_floats(sigma_text)
        if len(diag) != lattice.L:
            raise ValueError(f"[model] sigma_diag needs {lattice.L} entries")
        sigma = np.diag(diag)

    x0_values = _parse_floats(parser.get("simulation", "x0", fallback="0.9"))
    x0 = x0_values[0] if len(x0_values) == 1 else np.asarray(x0_values)

    return ExperimentConfig(
        lattice=lattice,
        noise_cov=noise_cov,
        Gamma=Gamma,
        plant_kind=parser.get("simulation", "plant", fallback="nonlinear"),
        x0=x0,
        T=parser.getint("simulation", "steps", fallback=200),
        seed=parser.getint("simulation", "seed", fallback=0),
        model_source=parser.get("model", "source", fallback="analytic"),
        sysid_samples=parser.getint("model", "sysid_samples", fallback=10_000),
        sigma=sigma,
        deterministic_control=parser.getboolean(
            "simulation", "deterministic_control", fallback=False
        ),
    )


def fig1_config(seed: int = 42, plant_kind: str = "nonlinear",
                model_source: str = "analytic") -> ExperimentConfig:
    """Non-chaotic experiment: L=5, a=3, eps=0.33, pins {1,5}, plant noise
    0.001 I, controller covariance 0.01 I, start 0.9, 200 steps."""
    lattice = LatticeParams(a=3.0, epsilon=0.33, L=5, pin_sites=(1, 5))
    return ExperimentConfig(
        lattice=lattice,
        noise_cov=0.001 * np.eye(5),
        Gamma=0.01 * np.eye(2),
        plant_kind=plant_kind,
        x0=0.9,
        T=200,
        seed=seed,
        model_source=model_source,
        sigma=np.diag([0.00095, 0.00105, 0.00097, 0.0009, 0.0011]),
    )


def fig3_config(seed: int = 42, plant_kind: str = "nonlinear",
                model_source: str = "analytic") -> ExperimentConfig:
    """Chaotic experiment: L=10, a=4, eps=0.25, pins {1,10}."""
    lattice = LatticeParams(a=4.0, epsilon=0.25, L=10, pin_sites=(1, 10))
    return ExperimentConfig(
        lattice=lattice,
        noise_cov=0.001 * np.eye(10),
        Gamma=0.01 * np.eye(2),
        plant_kind=plant_kind,
        x0=0.9,
        T=200,
        seed=seed,
        model_source=model_source,
        sigma=np.diag(
            [0.00094, 0.0017, 0.00109, 0.00089, 0.0008,
             0.00097, 0.00104, 0.00092, 0.0011, 0.00101]
        ),
    )

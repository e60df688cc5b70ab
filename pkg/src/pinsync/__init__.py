"""Probabilistic pinning control and synchronization of stochastic coupled
map lattices: nonlinear dynamics, linearization, controllability analysis,
least-squares model estimation, randomized gain design and closed-loop
experiment reproduction."""

from .controllability import (
    ControllabilityReport,
    ctrb_matrix,
    ctrb_rank,
    residual_covariance,
    stochastic_ctrb_verdict,
    transition,
)
from .design import (
    GainSolution,
    RiccatiConvergenceError,
    as_rank,
    closed_loop_spectrum,
    cost_to_go,
    design_controller,
    gain,
    lyapunov_residual,
    optimality_check,
    partial_cost,
    sample_control,
    solve_riccati,
    write_gain_csv,
)
from .lattice import LatticeParams, fixed_point, logistic_map, step
from .linearize import LinearModel, jacobian, linearized_model, pin_matrix
from .simulate import (
    ExperimentConfig,
    ExperimentResult,
    SteadyStateStats,
    Trajectory,
    emit_report,
    fig1_config,
    fig3_config,
    load_config,
    run_experiment,
    steady_state_stats,
)
from .sysid import (
    Dataset,
    IdentifiabilityError,
    PlantDivergenceError,
    excite_and_collect,
    fit_linear_model,
    white_noise_policy,
)

__version__ = "0.1.0"

__all__ = [
    "ControllabilityReport",
    "Dataset",
    "ExperimentConfig",
    "ExperimentResult",
    "GainSolution",
    "IdentifiabilityError",
    "LatticeParams",
    "LinearModel",
    "PlantDivergenceError",
    "RiccatiConvergenceError",
    "SteadyStateStats",
    "Trajectory",
    "as_rank",
    "closed_loop_spectrum",
    "cost_to_go",
    "ctrb_matrix",
    "ctrb_rank",
    "design_controller",
    "emit_report",
    "excite_and_collect",
    "fig1_config",
    "fig3_config",
    "fit_linear_model",
    "fixed_point",
    "gain",
    "jacobian",
    "linearized_model",
    "load_config",
    "logistic_map",
    "lyapunov_residual",
    "optimality_check",
    "partial_cost",
    "pin_matrix",
    "residual_covariance",
    "run_experiment",
    "sample_control",
    "solve_riccati",
    "steady_state_stats",
    "step",
    "stochastic_ctrb_verdict",
    "transition",
    "white_noise_policy",
    "write_gain_csv",
]

"""Command-line interface: linearize, ctrb, identify, design, simulate and
the two built-in experiment reproductions."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .controllability import stochastic_ctrb_verdict
from .design import RiccatiConvergenceError, design_controller, write_gain_csv
from .linearize import linearized_model
from .simulate import (
    _SYSID_RESET_EVERY,
    ExperimentConfig,
    emit_report,
    fig1_config,
    fig3_config,
    load_config,
    run_experiment,
)
from .sysid import (
    IdentifiabilityError,
    PlantDivergenceError,
    excite_and_collect,
    fit_linear_model,
)

EXIT_OK = 0
EXIT_DESIGN = 3
EXIT_IDENTIFIABILITY = 4
EXIT_IO = 5


def _fmt_matrix(mat) -> str:
    return np.array2string(np.asarray(mat), precision=6, suppress_small=True)


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    return _apply_overrides(config, args)


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "plant", None) is not None:
        updates["plant_kind"] = args.plant
    if getattr(args, "model", None) is not None:
        updates["model_source"] = args.model
    return replace(config, **updates) if updates else config


def _design_model(config: ExperimentConfig):
    sigma = config.sigma if config.sigma is not None else config.noise_cov
    return linearized_model(config.lattice, sigma)


def cmd_linearize(args) -> int:
    config = _load(args)
    model = _design_model(config)
    print("A =")
    print(_fmt_matrix(model.A))
    print("B =")
    print(_fmt_matrix(model.B))
    return EXIT_OK


def cmd_ctrb(args) -> int:
    config = _load(args)
    model = _design_model(config)
    report = stochastic_ctrb_verdict(model.A, model.E, model.Sigma, B=model.B)
    print(f"det_rank: {report.det_rank} / {model.L}")
    print(f"det_controllable: {report.det_controllable}")
    print(f"sc_rank: {report.sc_rank}")
    print(f"psi_pd: {report.psi_pd}")
    print(f"psi_bounded: {report.psi_bounded}")
    print(f"stochastically_controllable: {report.stochastically_controllable}")
    return EXIT_OK


def cmd_identify(args) -> int:
    config = _load(args)
    true_model = linearized_model(config.lattice, config.noise_cov)
    try:
        data = excite_and_collect(
            true_model, N=config.sysid_samples, seed=config.seed,
            reset_every=_SYSID_RESET_EVERY,
        )
        model = fit_linear_model(data, diagonal=True)
    except (IdentifiabilityError, PlantDivergenceError) as exc:
        print(f"identification failed: {exc}", file=sys.stderr)
        return EXIT_IDENTIFIABILITY
    print(f"fitted A ({config.sysid_samples} samples):")
    print(_fmt_matrix(model.A))
    print("fitted Sigma diagonal:")
    print(_fmt_matrix(np.diag(model.Sigma)))
    err = np.linalg.norm(model.A - true_model.A, "fro")
    print(f"Frobenius error vs analytic A: {err:.3e}")
    return EXIT_OK


def cmd_design(args) -> int:
    config = _load(args)
    model = _design_model(config)
    try:
        solution = design_controller(model, config.Gamma)
    except RiccatiConvergenceError as exc:
        print(f"design failed: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    print("C =")
    print(_fmt_matrix(solution.C))
    print(f"as_rank: {solution.as_rank} / {model.L}")
    print(f"spectral_radius: {solution.spectral_radius:.6f}")
    print(f"riccati_residual: {solution.riccati_residual:.3e}")
    print(f"iterations: {solution.iterations}")
    print(f"stabilizing: {solution.stabilizing}")
    if args.out:
        try:
            for path in write_gain_csv(solution, args.out):
                print(f"wrote {path}")
        except OSError as exc:
            print(f"output failed: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def _run_and_report(config: ExperimentConfig, out) -> int:
    try:
        result = run_experiment(config)
    except RiccatiConvergenceError as exc:
        print(f"design failed: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    except (IdentifiabilityError, PlantDivergenceError) as exc:
        print(f"identification failed: {exc}", file=sys.stderr)
        return EXIT_IDENTIFIABILITY

    traj = result.trajectory
    print(f"steps: {traj.controls.shape[0]}  (requested {config.T})")
    print(f"initial sync error: {traj.sync_error[0]:.6g}")
    print(f"final sync error:   {traj.sync_error[-1]:.6g}")
    if traj.diverged_at is not None:
        print(f"plant diverged at step {traj.diverged_at}")
    if result.assumption_warning:
        print("warning: stability assumption violated "
              f"(as_rank={result.gain.as_rank}, rho={result.gain.spectral_radius:.4f})")
    if out:
        try:
            for path in emit_report(result, out):
                print(f"wrote {path}")
        except OSError as exc:
            print(f"output failed: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def cmd_simulate(args) -> int:
    return _run_and_report(_load(args), args.out)


def cmd_reproduce(args) -> int:
    builders = {"fig1": fig1_config, "fig3": fig3_config}
    config = builders[args.figure](seed=args.seed if args.seed is not None else 42)
    config = _apply_overrides(config, args)
    return _run_and_report(config, args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinsync",
        description="Probabilistic pinning control of stochastic coupled map lattices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment .ini file")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--plant", choices=("nonlinear", "linearized"), default=None)
        p.add_argument("--model", choices=("analytic", "identified"), default=None)

    p = sub.add_parser("linearize", help="print the analytic (A, B) model")
    add_common(p)
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("ctrb", help="controllability analysis of the model")
    add_common(p)
    p.set_defaults(func=cmd_ctrb)

    p = sub.add_parser("identify", help="estimate (A, B, Sigma) from excitation data")
    add_common(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("design", help="solve the gain design for the model")
    add_common(p)
    p.add_argument("--out", default=None, help="directory for gain/eigenvalue CSVs")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="run one closed-loop experiment")
    add_common(p)
    p.add_argument("--out", default=None, help="directory for CSV report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", help="run a built-in experiment configuration")
    p.add_argument("figure", choices=("fig1", "fig3"))
    add_common(p, needs_config=False)
    p.add_argument("--out", default=None, help="directory for CSV report")
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

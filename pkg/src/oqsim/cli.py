"""Command-line entry point: run one experiment, write CSV/JSON/SVG bundles.

Exit codes: 0 on success, 2 on usage or configuration errors, 3 on numerical
failure inside an experiment.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .channels import CompletePositivityError, IntegrationError, SingularityError
from .decomp import SolverError
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oqsim",
        description="Simulate open-quantum-system experiments and write CSV/SVG reports.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS, help="experiment to run")
    parser.add_argument("--shots", type=int, default=8192, help="shots per circuit (default 8192)")
    parser.add_argument("--seed", type=int, default=1234, help="base random seed")
    parser.add_argument(
        "--noise",
        default="default",
        help="'default', 'none', or a JSON file with {eps1, eps2, readout}",
    )
    parser.add_argument("--mitigate", action="store_true", help="apply readout-error mitigation")
    parser.add_argument("--out", default=None, help="output directory (default oqsim_out/<experiment>)")
    parser.add_argument("--plot", action="store_true", help="also render figure.svg")
    parser.add_argument("--dump-circuit", action="store_true", help="write circuits.json")
    parser.add_argument("--dump-channel", action="store_true", help="write channels.json")
    parser.add_argument("--points", type=int, default=None, help="grid points (experiment default)")
    parser.add_argument("--n-max", type=int, default=7, help="collisions in the collisional sweep")
    parser.add_argument("--g-tau", type=float, default=None, help="collision phase g*tau (default pi/6)")
    parser.add_argument("--R", type=float, default=100.0, help="coupling/width ratio for damping")
    parser.add_argument("--t-max", type=float, default=None, help="time-grid upper end")
    parser.add_argument("--threads", type=int, default=1, help="worker threads over grid points")
    parser.add_argument(
        "--from-manifest",
        default=None,
        help="re-run the configuration stored in a manifest.json (other options ignored)",
    )
    return parser


def _load_noise(spec: str):
    if spec in ("default", "none"):
        return spec
    path = Path(spec)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read noise file {spec!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"noise file {spec!r} is not valid JSON: {exc}") from exc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.from_manifest:
            config = ExperimentConfig.from_manifest(args.from_manifest)
        else:
            kwargs = dict(
                experiment=args.experiment,
                shots=args.shots,
                seed=args.seed,
                noise=_load_noise(args.noise),
                mitigate=args.mitigate,
                points=args.points,
                n_max=args.n_max,
                R=args.R,
                t_max=args.t_max,
                threads=args.threads,
            )
            if args.g_tau is not None:
                kwargs["g_tau"] = args.g_tau
            config = ExperimentConfig(**kwargs)
    except (ConfigError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"oqsim: configuration error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or Path("oqsim_out") / config.experiment
    try:
        paths = run_experiment(
            config,
            out_dir,
            plot=args.plot,
            dump_circuit=args.dump_circuit,
            dump_channel=args.dump_channel,
        )
    except ConfigError as exc:
        print(f"oqsim: configuration error: {exc}", file=sys.stderr)
        return 2
    except (SingularityError, IntegrationError, CompletePositivityError, SolverError) as exc:
        print(f"oqsim: numerical failure: {exc}", file=sys.stderr)
        return 3
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

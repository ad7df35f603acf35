"""Command-line entry point.

Subcommands: ``run <experiment>`` executes one named experiment,
``dump-state`` writes a correlation matrix with its invariant sidecar,
``list-experiments`` shows what is available.  Exit codes: 0 success,
1 usage or configuration error, 2 analysis failure, 3 numerical
invariant violation.
"""

import argparse
import dataclasses
import sys

from .errors import AnalysisError, NumericalInvariantError
from .experiments import (
    EXPERIMENT_NAMES,
    ExperimentConfig,
    run_experiment,
    state_dump,
)

_DESCRIPTIONS = {
    "ff-maps": "momentum-space form-factor magnitude maps per state family",
    "wigner-cones": "spreading fronts of the period-P occupation patterns",
    "dimer-cones": "spreading fronts of the bond patterns (dimer, dimer-q)",
    "rainbow-cones": "rainbow front plus frozen-rainbow stationarity check",
    "ee-growth": "block entanglement growth, stages, and saturation",
    "ee-collapse": "rescaled entanglement data collapse across states",
    "oncone-decay": "power-law decay of the correlator along the front",
    "airy-region": "interior oscillation structure against the Bessel form",
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON or key = value config file")
    common.add_argument("--family", help="state family or concrete label (e.g. dimer-2)")
    common.add_argument("--n", type=int, dest="n_sites", help="ring length N")
    common.add_argument("--block", type=int, dest="block_length", help="entanglement block length")
    common.add_argument("--dt", type=float, help="time-grid step")
    common.add_argument("--tmax", type=float, dest="t_max", help="final time")
    common.add_argument("--p", type=int, help="pattern period P (wigner / island)")
    common.add_argument("--q", type=int, help="sign-block length q (dimer-q)")
    common.add_argument("--gamma", type=float, help="island bond weakening in (0, 1)")
    common.add_argument("--out", dest="out_dir", help="output directory")
    common.add_argument("--format", dest="fmt", choices=["csv", "json"], help="data file format")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="patterned-quench",
        description="Quench diagnostics for patterned free-fermion states on a ring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()
    run_p = sub.add_parser("run", parents=[common], help="run a named experiment")
    run_p.add_argument("experiment", help="experiment name (see list-experiments)")
    sub.add_parser("dump-state", parents=[common], help="write a correlation matrix + sidecar")
    sub.add_parser("list-experiments", help="list available experiments")
    return parser


_FLAG_FIELDS = (
    "family",
    "n_sites",
    "block_length",
    "dt",
    "t_max",
    "p",
    "q",
    "gamma",
    "out_dir",
    "fmt",
)


def _config_from_args(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig()
    overrides = {}
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    cfg = dataclasses.replace(cfg, **overrides)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "list-experiments":
        for name in EXPERIMENT_NAMES:
            print(f"{name:15s} {_DESCRIPTIONS[name]}")
        return 0

    try:
        cfg = _config_from_args(args)
        if args.command == "run":
            report = run_experiment(args.experiment, cfg)
            for key, verdict in sorted(report["criteria"].items()):
                print(f"[{'PASS' if verdict['pass'] else 'FAIL'}] {key}")
            print(f"report: {cfg.out_dir}/{args.experiment}-report.json")
            return 0
        if args.command == "dump-state":
            result = state_dump(cfg)
            inv = result["invariants"]
            for key in ("hermitian_pass", "spectrum_pass", "purity_pass"):
                print(f"[{'PASS' if inv[key] else 'FAIL'}] {key.removesuffix('_pass')}")
            print(f"half_filling: {inv['half_filling']}")
            for path in result["files"]:
                print(f"wrote: {path}")
            return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalInvariantError as exc:
        print(f"numerical invariant violation: {exc}", file=sys.stderr)
        return 3
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())

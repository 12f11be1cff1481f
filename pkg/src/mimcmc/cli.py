"""Command line entry point.

Subcommands
-----------
rates          per-index increment variances and fitted decay rates
cost-error     replicated cost-vs-error comparison against the analytic oracle
validate       fast internal consistency checks (no data needed)
generate-data  write the synthetic observation fixture for a seed
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import validate as validate_mod
from .experiments import ExperimentConfig, cmd_cost_error, cmd_generate_data, cmd_rates


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON file overriding config defaults")
    p.add_argument("--seed", type=int, default=None, help="experiment seed (overrides config)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--workers", type=int, default=None, help="parallel worker processes")
    p.add_argument("--paper-scale", action="store_true", help="lift level ceilings to the full-scale study")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimcmc", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="increment variance decay over the level grid")
    _add_common(p)
    p.add_argument("--samples", type=int, default=None, help="prior samples per index")
    p.add_argument("--levels", type=int, nargs=2, default=None, metavar=("LX", "LT"), help="grid extent")

    p = sub.add_parser("cost-error", help="cost-vs-error study, both methods")
    _add_common(p)
    p.add_argument("--replicates", type=int, default=None, help="independent replicates per level")
    p.add_argument("--levels", type=int, nargs="+", default=None, metavar="ELL", help="precision levels")

    p = sub.add_parser("validate", help="run internal consistency checks")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("generate-data", help="write the observation fixture")
    _add_common(p)
    p.add_argument("--force", action="store_true", help="overwrite an existing fixture")
    return parser


def _config(args: argparse.Namespace, **extra) -> ExperimentConfig:
    overrides = dict(
        seed=args.seed,
        workers=args.workers,
        paper_scale=args.paper_scale or None,
        **extra,
    )
    return ExperimentConfig.from_json(args.config, **overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "rates":
        cfg = _config(
            args,
            rates_samples=args.samples,
            rates_levels=tuple(args.levels) if args.levels else None,
        )
        summary = cmd_rates(cfg, args.out)
        print(json.dumps(summary, indent=1, sort_keys=True))
        return 0
    if args.command == "cost-error":
        cfg = _config(
            args,
            replicates=args.replicates,
            cost_levels=tuple(args.levels) if args.levels else None,
        )
        summary = cmd_cost_error(cfg, args.out)
        print(json.dumps(summary, indent=1, sort_keys=True))
        return 0
    if args.command == "validate":
        seed = args.seed if args.seed is not None else ExperimentConfig().seed
        ok = validate_mod.run_all(seed=seed)
        return 0 if ok else 1
    if args.command == "generate-data":
        cfg = _config(args)
        path = cmd_generate_data(cfg, args.out, force=args.force)
        print(f"wrote {path}")
        return 0
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())

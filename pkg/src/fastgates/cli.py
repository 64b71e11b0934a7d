"""Command-line interface: one subcommand per study kind.

    fastgates <kind> --config run.toml [--seed N] [--out DIR] [--workers K]
                     [--verify]

The subcommand must match the ``kind`` declared in the config file; --seed
overrides the config seed; --verify runs a short closed-form vs Fock-oracle
check before the study and aborts if it fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import STUDY_KINDS, ConfigError, config_from_dict, parse_config
from .studies import StudyFailure, run_study


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastgates",
        description="Fast microtrap entangling-gate studies",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in STUDY_KINDS:
        p = sub.add_parser(kind, help=f"run a '{kind}' study")
        p.add_argument("--config", required=True, help="TOML (or echoed JSON) config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--workers", type=int, default=1, help="parallel workers")
        p.add_argument(
            "--verify", action="store_true",
            help="run a 25-case oracle check before the study",
        )
    return parser


def _verify_first(seed: int, out_dir: str, workers: int) -> None:
    cfg = config_from_dict(
        {"kind": "oracle-check", "seed": seed, "output": "verify",
         "oracle": {"cases": 25}},
        source="<--verify>",
    )
    run_study(cfg, out_dir, workers=workers)
    print("verify: oracle check passed (25 cases)")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg.kind != args.kind:
        print(
            f"config error: config declares kind '{cfg.kind}' but the "
            f"'{args.kind}' subcommand was invoked",
            file=sys.stderr,
        )
        return 2
    if args.seed is not None:
        if args.seed < 0:
            print("config error: --seed must be non-negative", file=sys.stderr)
            return 2
        cfg = dataclasses.replace(cfg, seed=args.seed)
    try:
        if args.verify:
            _verify_first(cfg.seed, args.out, args.workers)
        csv_path = run_study(cfg, args.out, workers=args.workers)
    except StudyFailure as exc:
        print(f"study failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

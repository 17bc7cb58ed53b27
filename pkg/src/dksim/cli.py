"""
Batch command-line front end:

    dk-sim <subcommand> --config <path> [--out <dir>] [--seed <u64>]
           [--replicas <n>] [--threads <n>]

Exit codes: 0 ok, 2 config error, 3 numerical abort. Failures leave a
machine-readable error.json in the output directory when one exists.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import RUNNERS, run_experiment
from .records import NumericalBlowupError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dk-sim",
        description="Dean-Kawasaki pseudo-spectral simulation laboratory (batch).",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for kind in RUNNERS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", required=True, help="experiment config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--replicas", type=int, default=None, help="override replica count")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker threads (falls back to DK_SIM_THREADS, then the config)",
        )
    return parser


def _resolve_threads(cli_value: int | None) -> int | None:
    if cli_value is not None:
        return cli_value
    env = os.environ.get("DK_SIM_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"DK_SIM_THREADS is not an integer: {env!r}") from exc
    return None


def _write_error(out_dir: Path | None, code: int, kind: str, message: str) -> None:
    if out_dir is None:
        return
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "error.json").write_text(
            json.dumps({"exit_code": code, "kind": kind, "message": message}, indent=2) + "\n"
        )
    except OSError:
        pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out) if args.out else None
    try:
        cfg = load_config(args.config)
        out_dir = Path(args.out or cfg.out_directory or "dksim-out")
        threads = _resolve_threads(args.threads)
        summary = run_experiment(
            args.subcommand, cfg, out_dir, seed=args.seed, replicas=args.replicas, threads=threads
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        _write_error(out_dir, EXIT_CONFIG, "config", str(exc))
        return EXIT_CONFIG
    except NumericalBlowupError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        _write_error(out_dir, EXIT_NUMERICAL, "numerical", str(exc))
        return EXIT_NUMERICAL
    except ValueError as exc:
        # parameter validation raised outside the config layer
        print(f"config error: {exc}", file=sys.stderr)
        _write_error(out_dir, EXIT_CONFIG, "config", str(exc))
        return EXIT_CONFIG

    print(f"[dk-sim {args.subcommand}] out={out_dir}")
    for key, value in summary.items():
        print(f"  {key} = {value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

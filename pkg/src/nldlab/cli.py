"""Command line entry points: run <config>, verify, sweep <config>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .runner import DEFAULT_SEED, EXIT_CONFIG, run_mode


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (default: from the config)")
    parser.add_argument("--workers", metavar="K", type=int, default=1,
                        help="concurrent sweep entries")
    parser.add_argument("--seed", metavar="S", type=int, default=DEFAULT_SEED,
                        help="seed for the Monte Carlo validators")
    parser.add_argument("--strict", action="store_true",
                        help="escalate report-only diagnostics to failures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nldlab",
        description="Numerical laboratory for radial nonlocal diffusion on a ball.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the mode declared in a config file")
    p_run.add_argument("config", help="path to a YAML configuration")
    _add_common(p_run)

    p_verify = sub.add_parser("verify", help="run the built-in regression battery")
    _add_common(p_verify)

    p_sweep = sub.add_parser("sweep", help="run the sweep block of a config file")
    p_sweep.add_argument("config", help="path to a YAML configuration")
    _add_common(p_sweep)
    return parser


def _load(path: str):
    text = Path(path).read_text()
    return parse_config(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            from .config import RunConfig, RunBlock
            cfg = RunConfig(run=RunBlock(mode="verify"))
        else:
            cfg = _load(args.config)
            if args.command == "sweep":
                if cfg.sweep is None:
                    print("configuration error: sweep command needs a sweep block")
                    return EXIT_CONFIG
                from dataclasses import replace
                cfg = replace(cfg, run=replace(cfg.run, mode="sweep"))
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}")
        return EXIT_CONFIG
    status = run_mode(cfg, out_dir=args.out, seed=args.seed,
                      workers=args.workers, strict=args.strict)
    if status != 0:
        print(f"exit status {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())

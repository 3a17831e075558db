"""Command line entry point.

    ngf run <config>                 run a key=value config (or a run's manifest.json)
    ngf preset <name> [--emit-config] show or run one of the named scenarios
    ngf diagnose <trajectory.csv>    summary statistics of a filter trajectory

``NGF_SEED`` in the environment overrides the config seed. On failure the
last line on stderr is ``error: {json}`` with keys ``kind`` and ``problems``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .config import PRESETS, RunConfig, from_mapping, preset
from .errors import ConfigError
from .runner import load_run_config, run, summarize_csv


def _error(kind: str, problems) -> int:
    print("error: " + json.dumps({"kind": kind, "problems": list(problems)}), file=sys.stderr)
    return 2 if kind == "config" else 1


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    overrides = {}
    seed = os.environ.get("NGF_SEED")
    if seed is not None and seed != "":
        overrides["seed"] = seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "output_dir", None):
        overrides["output_dir"] = args.output_dir
    cfg = from_mapping(overrides, cfg) if overrides else cfg
    return cfg.validate()


def _execute(cfg: RunConfig) -> int:
    result = run(cfg)
    print(json.dumps({"output_dir": result.output_dir, "status": result.status, **result.summary}, sort_keys=True))
    return 0 if result.status == "ok" else 1


def cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    return _execute(_apply_overrides(cfg, args))


def cmd_preset(args) -> int:
    cfg = preset(args.name)
    if args.emit_config:
        sys.stdout.write(_apply_overrides(cfg, args).to_text())
        return 0
    return _execute(_apply_overrides(cfg, args))


def cmd_diagnose(args) -> int:
    summary = summarize_csv(args.trajectory)
    for key, value in summary.items():
        print(f"{key}={value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ngf", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"ngf {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a config file or manifest.json")
    p.add_argument("config")
    p.add_argument("--workers", type=int, help="cap on the worker pool (default: config value)")
    p.add_argument("--output-dir", help="override output_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="run or print a named scenario")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--emit-config", action="store_true", help="print the resolved config instead of running")
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("diagnose", help="summarize a filter trajectory CSV")
    p.add_argument("trajectory")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        return _error("config", exc.problems)
    except (OSError, ValueError, KeyError) as exc:
        return _error(type(exc).__name__, [str(exc)])
    except (RuntimeError, FloatingPointError) as exc:
        return _error(type(exc).__name__, [str(exc)])


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

One subcommand per scenario, all driven by a JSON config; a few file
level knobs (output dir, epsilon list, thread count) can be overridden
on the command line or through ROSSBYTRAP_* environment variables, with
the command line winning. Overrides are folded back into the config
document and re-validated, so the manifest always echoes the effective
configuration. Exit codes: 0 ok, 2 bad config or usage, 3 failed
computation, 4 I/O trouble.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import (EXIT_COMPUTE, EXIT_CONFIG, EXIT_IO, EXIT_OK, ConfigError,
                     IoError, ManifestMismatch, RossbytrapError)
from .io import load_config, parse_epsilon_list, validate_config

_SCENARIO_COMMANDS = ("rays", "lambda", "evolve", "modes", "spectrum")

ENV_PREFIX = "ROSSBYTRAP_"


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rossbytrap",
        description="Wave trapping and dispersion runs for the rotating "
                    "shallow-water channel.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SCENARIO_COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", required=True, help="JSON config path")
        _common_overrides(p)
    p = sub.add_parser("report", help="merge finished runs into a report")
    p.add_argument("runs", nargs="*", help="run directories to merge")
    p.add_argument("--config", help="JSON config path (optional)")
    _common_overrides(p)
    return parser


def _common_overrides(p):
    p.add_argument("--out", help="output directory")
    p.add_argument("--epsilon-list",
                   help="comma separated, fractions like 1/8 allowed")
    p.add_argument("--threads", type=int, help="worker thread count")


def _env(name):
    return os.environ.get(ENV_PREFIX + name)


def _effective_config(args):
    """Load the config and fold in CLI/env overrides, CLI winning."""
    if args.config:
        config = load_config(args.config)
        doc = dict(config.raw)
    elif args.command == "report":
        doc = {"scenario": "report", "params": {}}
    else:
        raise ConfigError(f"{args.command} needs --config")

    if args.command == "report":
        runs = list(args.runs) or list(
            doc.get("params", {}).get("runs", ()))
        if not runs:
            raise ConfigError("report needs run directories, on the command "
                              "line or as params.runs in the config")
        doc["params"] = {"runs": runs}

    out = args.out or _env("OUT")
    if out:
        doc["out"] = out
    threads = args.threads if args.threads is not None else _env("THREADS")
    if threads is not None:
        try:
            doc["threads"] = int(threads)
        except ValueError:
            raise ConfigError(f"bad thread count {threads!r}")
    eps = args.epsilon_list or _env("EPSILON_LIST")
    if eps:
        doc["epsilons"] = list(parse_epsilon_list(eps))

    config = validate_config(doc)
    if config.scenario != args.command:
        raise ConfigError(
            f"config declares scenario {config.scenario!r} but the "
            f"subcommand is {args.command!r}")
    return config


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code or 0
        return EXIT_CONFIG if code not in (0, EXIT_OK) else code
    try:
        config = _effective_config(args)
        from .runs import run_config
        run_config(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IoError, ManifestMismatch) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RossbytrapError as exc:
        print(f"compute error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command line: ``nelson-lab run|validate <config>`` and ``nelson-lab list-experiments``.

Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..estimators import UnderpoweredError
from .config import ConfigError, load_config, load_raw, validate
from .experiments import REGISTRY
from .runner import run

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _cmd_run(path: str) -> int:
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run(cfg)
    except UnderpoweredError as exc:
        print(f"config error: experiment underpowered: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for m in report.metrics:
        print(m.line())
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict}  {report.experiment} in {report.duration_s:.1f} s -> {cfg.output_dir}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_validate(path: str) -> int:
    try:
        problems = validate(load_raw(path))
    except ConfigError as exc:
        problems = exc.violations
    for v in problems:
        print(f"config error: {v}", file=sys.stderr)
    if not problems:
        print("ok")
    return EXIT_CONFIG if problems else EXIT_PASS


def _cmd_list() -> int:
    width = max(map(len, REGISTRY))
    for name, exp in REGISTRY.items():
        print(f"{name:<{width}}  {exp.summary}")
    return EXIT_PASS


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nelson-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run an experiment"), ("validate", "check a config file")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config")
    sub.add_parser("list-experiments", help="list the registered experiments")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "run":
        return _cmd_run(args.config)
    if args.command == "validate":
        return _cmd_validate(args.config)
    return _cmd_list()


if __name__ == "__main__":
    sys.exit(main())

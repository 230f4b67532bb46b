#!/usr/bin/env python3
"""
Command entry points for Poetry scripts.
Each command lives in src/services/<command>/handler.py and exposes add_arguments() and run().
"""

import argparse
import logging
import sys
from importlib import import_module
from pathlib import Path
from typing import List, Optional

PROJECT_DIR = Path(__file__).parent.parent

# Library and project modules import as top-level packages
for path in (PROJECT_DIR / "src" / "common", PROJECT_DIR / "src"):
    if str(path) not in sys.path:
        sys.path.insert(0, str(path))


def _commands() -> List[str]:
    return sorted(p.parent.name for p in PROJECT_DIR.glob("src/services/*/handler.py"))


def _configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")


def _execute(command: str, argv: Optional[List[str]] = None) -> int:
    if command not in _commands():
        raise ValueError(f"Unknown command: {command}")
    handler = import_module(f"services.{command}.handler")
    ap = argparse.ArgumentParser(prog=f"windgrav-{command}", description=handler.__doc__)
    _add_common(ap)
    handler.add_arguments(ap)
    args = ap.parse_args(argv)
    _configure_logging(args.verbose)
    return handler.run(args)


def forward():
    sys.exit(_execute("forward"))


def inverse():
    sys.exit(_execute("inverse"))


def basis():
    sys.exit(_execute("basis"))


def selftest():
    sys.exit(_execute("selftest"))


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    ap = argparse.ArgumentParser(description="Wind-induced gravity harmonics of a gas giant")
    ap.add_argument("command", choices=_commands(), help="Command to run")
    args, rest = ap.parse_known_args(argv[:1])
    return _execute(args.command, rest + argv[1:])


if __name__ == "__main__":
    sys.exit(main())

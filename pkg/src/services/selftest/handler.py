#!/usr/bin/env python3
"""
selftest: run the basis and forward-model invariant suites
"""

import argparse

from windgrav.errors import EXIT_FAILURE, EXIT_OK

from core.core_utils import guarded
from core.test_utils import SUITE_NAMES, SelfTester


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--perturb-zeros",
        type=float,
        default=0.0,
        metavar="EPS",
        help="Shift every Bessel zero by EPS before running (fault injection)",
    )
    parser.add_argument(
        "--suite",
        action="append",
        choices=SUITE_NAMES,
        help="Run only the named suite (repeatable)",
    )


@guarded
def run(args: argparse.Namespace) -> int:
    tester = SelfTester(zero_perturbation=args.perturb_zeros)
    results = tester.test(only=args.suite)
    return EXIT_OK if all(result.passed for result in results) else EXIT_FAILURE

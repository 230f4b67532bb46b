#!/usr/bin/env python3
"""
basis: tabulate lambda_{n,m}, gamma_{n,m} and B_{m,n}(R) for one degree
"""

import argparse
import sys

from windgrav.basis_utils import BasisContext, basis_table
from windgrav.errors import EXIT_OK, ParameterError
from windgrav.io_utils import write_zero_table_csv

from core.core_utils import guarded, say

# The table only needs zeros and norms; quadrature orders are irrelevant
_TABLE_QUADRATURE = 16


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--n", type=int, required=True, help="Degree n >= 0")
    parser.add_argument("--mmax", type=int, required=True, help="Number of radial modes")
    parser.add_argument("--radius", type=float, default=1.0, help="Planet radius R (default 1)")
    parser.add_argument("--out", help="CSV path (default: stdout)")


@guarded
def run(args: argparse.Namespace) -> int:
    if args.n < 0:
        raise ParameterError(f"--n must be >= 0, got {args.n}")
    if args.mmax < 1:
        raise ParameterError(f"--mmax must be >= 1, got {args.mmax}")
    if not args.radius > 0.0:
        raise ParameterError(f"--radius must be positive, got {args.radius}")

    ctx = BasisContext.build(
        args.radius,
        args.mmax,
        max(args.n, 1),
        radial_order=_TABLE_QUADRATURE,
        angular_order=_TABLE_QUADRATURE,
    )
    rows = basis_table(ctx, args.n)
    if args.out:
        write_zero_table_csv(args.out, rows)
        say(f"[PASS] Wrote {len(rows)} rows for n={args.n} to {args.out}")
    else:
        write_zero_table_csv(sys.stdout, rows)
    return EXIT_OK

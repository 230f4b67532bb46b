#!/usr/bin/env python3
"""
inverse: fit the decay parameters to observed J_n
"""

import argparse
import logging
import sys

from windgrav.errors import EXIT_OK, EXIT_SOFT, ConfigError
from windgrav.inverse_utils import fit
from windgrav.io_utils import encode_json, read_observed_csv, write_fit_json

from core.config_utils import load_config
from core.core_utils import RunConstructor, guarded, say

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="Run configuration (YAML or JSON)")
    parser.add_argument("--observed", required=True, help="Observed coefficients CSV (n,J[,sigma])")
    parser.add_argument("--out", help="FitResult JSON path (default: output block or stdout)")
    parser.add_argument(
        "--workers", type=int, help="Grid-search threads (default: config value or CPU count)"
    )


@guarded
def run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.workers is not None and args.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {args.workers}")
    constructor = RunConstructor("inverse", cfg)

    decay = constructor.decay()
    if decay.family.arity == 0:
        raise ConfigError(f"Decay family '{decay.family.value}' has no parameters to fit")
    if not decay.bounds:
        raise ConfigError("wind.bounds must give a (low, high) pair for every decay parameter")

    observed = read_observed_csv(args.observed)
    weighting = "1/sigma^2" if observed.sigma is not None else "unit (no sigma column)"
    say(f"• Loaded {len(observed.n)} observed coefficients, weights {weighting}")

    forward = constructor.forward_model(N=observed.N)
    options = constructor.fit_options(args.workers)
    say(
        f"• Fitting {decay.family.value} decay {list(decay.family.parameter_names)} "
        f"({cfg.model.value}, grid points {options.grid_points}, workers {options.workers})"
    )
    result = fit(observed, forward, decay, options)

    out = args.out or cfg.output.fit
    if out:
        write_fit_json(out, result)
        say(f"• Wrote fit result to {out}")
    else:
        sys.stdout.buffer.write(encode_json(result))
        sys.stdout.flush()

    summary = ", ".join(f"{k}={v:.6g}" for k, v in zip(result.parameter_names, result.p_best))
    if result.converged:
        say(f"[PASS] Converged after {result.evaluations} evaluations: {summary}")
        return EXIT_OK
    say(f"[FAIL] Fit {result.status.value} after {result.evaluations} evaluations: {summary}")
    return EXIT_SOFT

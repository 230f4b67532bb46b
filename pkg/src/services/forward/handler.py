#!/usr/bin/env python3
"""
forward: wind-induced gravity harmonics dJ_n, n = 2..N, for a fixed wind and decay law
"""

import argparse
import logging
import sys

from core_types.gravity import ModelTag, ObservedCoeffs
from windgrav.dynamics_utils import compute_gravity_coeffs, tgwe_contributions
from windgrav.errors import EXIT_OK, ConfigError
from windgrav.io_utils import (
    encode_json,
    write_contributions_csv,
    write_gravity_json,
    write_observed_csv,
)
from windgrav.planet_utils import background_Jn

from core.config_utils import load_config
from core.core_utils import RunConstructor, guarded, say

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="Run configuration (YAML or JSON)")
    parser.add_argument("--out", help="GravityCoeffs JSON path (default: output block or stdout)")
    parser.add_argument("--contributions", help="Per-(n, m) TGWE series table CSV")
    parser.add_argument(
        "--observed-out", help="Write J0_n + dJ_n as an observed-coefficient CSV (n,J)"
    )


@guarded
def run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    constructor = RunConstructor("forward", cfg)
    planet = constructor.planet()
    ctx = constructor.context(planet)
    evaluator = constructor.evaluator(ctx, planet)
    N = constructor.degree_cut()

    say(f"• Computing {cfg.model.value} coefficients for n = 2..{N}")
    coeffs = compute_gravity_coeffs(
        ctx, evaluator, cfg.model, N, cfg.truncation.m_max, constructor.numerics
    )
    for n, tail, value in zip(coeffs.n, coeffs.tail, coeffs.dJ):
        if tail > constructor.numerics.tail_warning_ratio * abs(value) and tail > 0.0:
            say(f"⚠️  dJ_{n}: series tail {tail:.3e} against partial sum {value:.3e}")

    out = args.out or cfg.output.coefficients
    if out:
        write_gravity_json(out, coeffs)
        say(f"[PASS] Wrote coefficients to {out}")
    else:
        sys.stdout.buffer.write(encode_json(coeffs))
        sys.stdout.flush()

    contributions = args.contributions or cfg.output.contributions
    if contributions:
        if cfg.model != ModelTag.TGWE:
            raise ConfigError("The contribution table is only defined for the TGWE model")
        rows = tgwe_contributions(ctx, evaluator, N, cfg.truncation.m_max)
        write_contributions_csv(contributions, rows)
        say(f"[PASS] Wrote {len(rows)} contribution rows to {contributions}")

    if args.observed_out:
        background = constructor.background()
        values = [background_Jn(planet, n, background) + dj for n, dj in zip(coeffs.n, coeffs.dJ)]
        write_observed_csv(args.observed_out, ObservedCoeffs(n=list(coeffs.n), J=values))
        say(f"[PASS] Wrote synthetic observations to {args.observed_out}")
    return EXIT_OK

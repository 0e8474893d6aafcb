"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 stability
violation.
"""

from __future__ import annotations

import argparse
import io
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from tempered_ldg.fractional import (
    MAX_LUBICH_ORDER,
    QuadratureError,
    TemperedParams,
    mittag_leffler,
    tempered_weights,
)
from tempered_ldg.harness import (
    ConfigError,
    StudyError,
    build_study,
    profile_csv,
    read_config,
    run_profile,
    run_spatial_study,
    run_stability_sweep,
    run_temporal_study,
    stability_csv,
)
from tempered_ldg.timestep import run

logger = logging.getLogger("tempered_ldg")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_STABILITY = 3

STUDY_COMMANDS = ("solve", "converge-space", "converge-time", "stability", "profile")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempered-ldg",
        description="LDG solver for the time-tempered fractional diffusion equation.",
    )
    parser.add_argument("--config", help="INI file with [problem] and per-command sections")
    parser.add_argument("--out", help="write CSV output here instead of stdout")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for studies")
    parser.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    for name in STUDY_COMMANDS:
        p = sub.add_parser(name, help=f"run the [{name}] study")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a configuration entry (repeatable)",
        )

    w = sub.add_parser("weights", help="print tempered convolution weights")
    w.add_argument("q", type=int)
    w.add_argument("alpha", type=float)
    w.add_argument("lam", metavar="lambda", type=float)
    w.add_argument("tau", type=float)
    w.add_argument("n", type=int)

    m = sub.add_parser("ml", help="evaluate the Mittag-Leffler function E_beta(z)")
    m.add_argument("beta", type=float)
    m.add_argument("z", type=float)
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fp:
            fp.write(text)


def _weights_csv(q: int, alpha: float, lam: float, tau: float, n: int) -> str:
    if not 1 <= q <= MAX_LUBICH_ORDER:
        raise ConfigError(f"q must be in 1..{MAX_LUBICH_ORDER}")
    if n < 0:
        raise ConfigError("n must be non-negative")
    if not tau > 0.0:
        raise ConfigError("tau must be positive")
    w = tempered_weights(q, TemperedParams(alpha, lam), tau, n)
    buf = io.StringIO()
    buf.write("k,l_k,d_k\n")
    for k in range(n + 1):
        buf.write(f"{k},{w.l[k]:.17g},{w.d[k]:.17g}\n")
    return buf.getvalue()


def _solve(study) -> str:
    problem = study.problem.build()
    result = run(problem, study.N, study.k, study.q, study.steps,
                 initial_projection=study.initial_projection, errors="final")
    lines = [f"# {key}={value}\n" for key, value in result.metadata.items()]
    if result.final_error is not None:
        lines.append(f"# l2_error={result.final_error:.17g}\n")
        logger.info("L2 error at T: %.6e", result.final_error)
    return "".join(lines) + result.final.to_csv()


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "weights":
        try:
            text = _weights_csv(args.q, args.alpha, args.lam, args.tau, args.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        _emit(text, args.out)
        return EXIT_OK

    if args.command == "ml":
        try:
            value = mittag_leffler(args.beta, args.z)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        _emit(f"{value:.17g}\n", args.out)
        return EXIT_OK

    parser = read_config(args.config, args.set)
    study = build_study(parser, args.command)
    threads = max(1, args.threads)

    if args.command == "solve":
        _emit(_solve(study), args.out)
    elif args.command == "converge-space":
        _emit(run_spatial_study(study, threads=threads).to_csv(), args.out)
    elif args.command == "converge-time":
        _emit(run_temporal_study(study, threads=threads).to_csv(), args.out)
    elif args.command == "profile":
        _emit(profile_csv(run_profile(study)), args.out)
    elif args.command == "stability":
        results = run_stability_sweep(study, threads=threads)
        _emit(stability_csv(results), args.out)
        failed = [r for r in results if not r.passed]
        for r in failed:
            logger.error(
                "norm growth: alpha=%g lambda=%g tau=%s N=%d max ratio %.17g",
                r.alpha, r.lam, r.tau_rule, r.N, r.max_ratio,
            )
        if failed:
            return EXIT_STABILITY
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return _dispatch(args)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (StudyError, QuadratureError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except ValueError as exc:
        # remaining ValueErrors come from argument validation in the library
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

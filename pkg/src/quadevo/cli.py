"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical or conditioning
error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .sim import StageError, run_keyrate, run_pipeline, sweep_m

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

log = logging.getLogger("quadevo")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadevo",
        description="Multicarrier quadrature evolution simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one pipeline and write the figure tables")
    p.add_argument("--config", required=True, help="configuration file")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sweep", help="sweep the subcarrier count m")
    p.add_argument("--config", required=True, help="configuration file")
    p.add_argument("--m-min", type=int, required=True)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("keyrate", help="compute the spectral key rate")
    p.add_argument("--config", required=True, help="configuration file")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    return EXIT_NUMERICAL


def run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    try:
        if args.command == "simulate":
            report, _ = run_pipeline(cfg, args.out)
            log.info("simulate finished in %.2f s, trace_ee=%.6g", report.wallclock,
                     report.summary["trace_ee"])
        elif args.command == "sweep":
            if args.m_min > args.m_max or args.m_min < 1:
                log.error("invalid m range [%d, %d]", args.m_min, args.m_max)
                return EXIT_CONFIG
            try:
                cfg.with_m(args.m_min)
            except ValueError as exc:
                log.error("config error: %s", exc)
                return EXIT_CONFIG
            result = sweep_m(cfg, args.m_min, args.m_max, args.out)
            log.info("sweep finished in %.2f s, spearman=%.4f, violations=%d",
                     result.wallclock, result.spearman, result.violations)
        else:
            payload = run_keyrate(cfg, args.out)
            log.info("key rate %.6g", payload["keyrate"]["rate"])
    except (StageError, ValueError, ArithmeticError, OSError) as exc:
        code = _exit_code(exc)
        log.error("%s", exc)
        return code
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())

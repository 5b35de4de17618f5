# -*- coding: utf-8 -*-
import argparse
import logging
import os
import sys
from typing import List, Optional

import sentry_sdk
from dotenv import load_dotenv

# Load environment variables before the config is read
load_dotenv()

from commands import cmd_bench, cmd_bound, cmd_check, cmd_figure1, cmd_oracle, cmd_solve  # noqa: E402
from lagro.multiplier import U_BRUTEFORCE, U_INTERVAL  # noqa: E402
from lagro.utils import METHOD_CCG, METHODS, log_level  # noqa: E402


def _level() -> str:
    try:
        return log_level()
    except FileNotFoundError:
        return os.getenv("LAGRO_LOG", "INFO").upper()


# Setup logging
logging.basicConfig(
    level=_level(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)
logging.getLogger("py.warnings").setLevel(logging.ERROR)

SENTRY_DSN = os.getenv("SENTRY_DSN")

if SENTRY_DSN:
    sentry_sdk.init(
        dsn=SENTRY_DSN,
        traces_sample_rate=float(os.getenv("SENTRY_TRACES_SAMPLE_RATE", "0.1")),
        environment=os.getenv("LAGRO_ENV", "production"),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lagro", description="Two-stage robust optimization with binary uncertainty.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve an instance with restarts and ex-post verification")
    solve.add_argument("instance")
    solve.add_argument("--method", choices=METHODS, default=METHOD_CCG)
    solve.add_argument("--eps", default=None, help="optimality tolerance as an integer or 'p/q'")
    solve.add_argument("--lambda0", default=None, help="starting multiplier as an integer or 'p/q'")
    solve.add_argument("--trace-out", default=None, help="write engine trace records as JSON lines")

    oracle = sub.add_parser("oracle", help="brute-force optimum, worst-case scenario and multiplier interval")
    oracle.add_argument("instance")
    oracle.add_argument("--x", type=int, default=None, dest="x_index", help="index into X instead of the optimum")

    check = sub.add_parser("check", help="check the sufficient conditions for an exact Lagrangian")
    check.add_argument("instance")

    bound = sub.add_parser("bound", help="factorial multiplier bound for a general instance")
    bound.add_argument("instance")
    bound.add_argument("--u-source", choices=(U_BRUTEFORCE, U_INTERVAL), default=U_BRUTEFORCE)
    bound.add_argument("--lift", action="store_true", help="prepend a constant scenario component first")

    bench = sub.add_parser("bench", help="solve every instance file in a directory")
    bench.add_argument("suite")
    bench.add_argument("--method", choices=METHODS, default=METHOD_CCG)
    bench.add_argument("--out", default=None, help="TSV path, or .xlsx")
    bench.add_argument("--workers", type=int, default=None)

    figure1 = sub.add_parser("figure1", help="worst-case Lagrangian of the counterexample over a lambda grid")
    figure1.add_argument("--gamma", default="1")
    figure1.add_argument("--grid", type=int, default=None)
    figure1.add_argument("--out", default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logger.debug("Running %s", args.command)

    if args.command == "solve":
        return cmd_solve(args.instance, method=args.method, eps=args.eps, lambda0=args.lambda0, trace_out=args.trace_out)
    if args.command == "oracle":
        return cmd_oracle(args.instance, x_index=args.x_index)
    if args.command == "check":
        return cmd_check(args.instance)
    if args.command == "bound":
        return cmd_bound(args.instance, u_source=args.u_source, lift=args.lift)
    if args.command == "bench":
        return cmd_bench(args.suite, method=args.method, out=args.out, workers=args.workers)
    return cmd_figure1(gamma=args.gamma, grid=args.grid, out=args.out)


if __name__ == "__main__":
    sys.exit(main())

"""Argument parsing and the ``gridsolve`` entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

from gridsolve import __version__
from gridsolve.backend import BACKENDS
from gridsolve.cli.commands import cmd_bench, cmd_gen, cmd_solve, parse_grid, parse_int_list
from gridsolve.cli.models import DIRECT_METHODS, ITERATIVE_METHODS
from gridsolve.errors import GridSolveError
from gridsolve.transport import DEADLOCK_TIMEOUT_ENV

logger = logging.getLogger("gridsolve.cli")

EPILOG = f"""\
exit codes:
  0  success
  2  dimension or descriptor mismatch, invalid arguments
  3  singular pivot or matrix not SPD
  4  iteration cap reached
  5  Krylov breakdown
  6  collective misuse or deadlock
  7  file I/O failure

{DEADLOCK_TIMEOUT_ENV} overrides the 30 s deadlock watchdog.
"""


def _backend_list(text: str) -> list[str]:
    names = [name.strip() for name in text.split(",") if name.strip()]
    unknown = [name for name in names if name not in BACKENDS]
    if not names or unknown:
        raise argparse.ArgumentTypeError(
            f"Unknown backend(s) {unknown or text!r}; expected {', '.join(sorted(BACKENDS))}"
        )
    return names


def _problem_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("problem")
    group.add_argument(
        "--matrix",
        required=True,
        help="matrix spec kind:key=value,... with kind in random_dense, spd, poisson2d, "
        "identity, zeros, file (e.g. spd:n=64 or file:path=A.mtx)",
    )
    group.add_argument("--rhs", default="ones", help="ones | random[:seed=S] | file:path=...")
    group.add_argument(
        "--method", required=True, choices=[*DIRECT_METHODS, *ITERATIVE_METHODS]
    )
    group.add_argument("--seed", type=int, default=0, help="seed for generated operands")
    group.add_argument("--precision", choices=["f32", "f64"], default="f64")

    layout = parent.add_argument_group("layout")
    layout.add_argument("--grid", type=parse_grid, default=None, help="process mesh PxQ")
    layout.add_argument("--nb", type=int, default=64, help="block size (default: 64)")
    layout.add_argument("--backend", choices=sorted(BACKENDS), default="direct")

    krylov = parent.add_argument_group("iterative solvers")
    krylov.add_argument("--tol", type=float, default=1e-8, help="relative residual target")
    krylov.add_argument("--maxit", type=int, default=None, help="iteration cap (default: 10n)")
    krylov.add_argument("--restart", type=int, default=30, help="GMRES restart length")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridsolve",
        description="Distributed dense linear-system solvers on in-process ranks.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="log level for messages on standard error (default: WARNING)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    problem = _problem_options()

    solve = sub.add_parser(
        "solve",
        parents=[problem],
        help="solve one system and print a JSON report",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    solve.add_argument("--ranks", type=int, default=1, help="number of in-process ranks")
    solve.set_defaults(handler=cmd_solve)

    bench = sub.add_parser(
        "bench",
        parents=[problem],
        help="time one method over several rank counts and write CSV",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    bench.add_argument(
        "--ranks-list",
        type=parse_int_list,
        default=[1],
        help="comma-separated rank counts; a 1-rank baseline is always run (default: 1)",
    )
    bench.add_argument("--repeat", type=int, default=3, help="runs per row; median reported")
    bench.add_argument(
        "--backends",
        type=_backend_list,
        default=None,
        help="comma-separated backends to compare (default: --backend)",
    )
    bench.add_argument("--out", default=None, help="CSV file (default: standard output)")
    bench.set_defaults(handler=cmd_bench)

    gen = sub.add_parser("gen", help="generate a matrix file")
    gen.add_argument(
        "--kind",
        required=True,
        choices=["random_dense", "spd", "poisson2d", "identity", "zeros"],
    )
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--precision", choices=["f32", "f64"], default="f64")
    gen.add_argument("--out", required=True, help="destination file")
    gen.add_argument(
        "--format",
        choices=["mm", "bin"],
        default=None,
        help="Matrix Market or raw binary (default: from the --out suffix)",
    )
    gen.set_defaults(handler=cmd_gen)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=args.log_level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        status: int = args.handler(args)
    except GridSolveError as exc:
        logger.error("%s: %s", exc.kind.value, exc)
        return exc.exit_code
    except ValueError as exc:
        logger.error("invalid arguments: %s", exc)
        return 2
    return status

"""Subcommand implementations: ``solve``, ``bench`` and ``gen``."""

from __future__ import annotations

import argparse
import logging
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gridsolve.cli.models import BenchRecord, Method, SolveSummary, write_records
from gridsolve.core import DenseMatrix, DenseVector, Precision
from gridsolve.direct import chol_factor, chol_solve, lu_factor, lu_solve
from gridsolve.distgrid import DistMatrix, DistVector, choose_grid
from gridsolve.errors import GridSolveError
from gridsolve.krylov import DistMatrixOperator, KrylovConfig, bicg, bicgstab, cg, gmres
from gridsolve.matrices import MatrixSpec, RhsSpec
from gridsolve.matrix_io import save_matrix
from gridsolve.models import SolveReport
from gridsolve.session import RankSession
from gridsolve.transport import InProcessTransport, launch

logger = logging.getLogger(__name__)

KRYLOV_SOLVERS = {"cg": cg, "gmres": gmres, "bicg": bicg, "bicgstab": bicgstab}


@dataclass(frozen=True)
class Problem:
    A: DenseMatrix
    b: DenseVector

    @property
    def n(self) -> int:
        return self.A.rows


@dataclass(frozen=True)
class RunSettings:
    """One configuration of a distributed run."""

    method: Method
    ranks: int = 1
    grid_shape: tuple[int, int] | None = None
    nb: int = 64
    backend: str = "direct"
    krylov: KrylovConfig = field(default_factory=KrylovConfig)

    @property
    def grid(self) -> str:
        p_rows, p_cols = self.grid_shape or choose_grid(self.ranks)
        return f"{p_rows}x{p_cols}"


@dataclass(frozen=True)
class RunResult:
    x: DenseVector
    report: SolveReport
    relres: float
    wall_time_s: float
    flops: int
    local_bytes: int


def relative_residual(A: DenseMatrix, x: DenseVector, b: DenseVector) -> float:
    """``||A x - b|| / ||b||`` in float64 (0 when ``b`` is zero)."""
    a, xv, bv = (np.asarray(v, dtype=np.float64) for v in (A.to_numpy(), x.data, b.data))
    bnorm = float(np.linalg.norm(bv))
    if bnorm == 0.0:
        return float(np.linalg.norm(a @ xv))
    return float(np.linalg.norm(a @ xv - bv)) / bnorm


def _solve_distributed(
    settings: RunSettings, A_d: DistMatrix, b_d: DistVector
) -> tuple[DistVector, SolveReport]:
    if settings.method == "lu":
        return lu_solve(lu_factor(A_d), b_d), SolveReport(method="lu", converged=True)
    if settings.method == "chol":
        return chol_solve(chol_factor(A_d), b_d), SolveReport(method="chol", converged=True)
    solver = KRYLOV_SOLVERS[settings.method]
    return solver(DistMatrixOperator(A_d), b_d, None, settings.krylov)


def run_distributed(problem: Problem, settings: RunSettings) -> RunResult:
    """Scatter ``problem`` over ``settings.ranks`` in-process ranks, solve and gather.

    Wall time and flops cover the solve only, not distribution.

    Raises:
        GridSolveError: Whatever the solver raised, consistently on every rank.
    """
    n = problem.n

    def program(rank: int, transport: InProcessTransport) -> RunResult | None:
        with RankSession(
            transport,
            grid_shape=settings.grid_shape,
            backend=settings.backend,
            nb=settings.nb,
        ) as session:
            A_d = session.distribute_matrix(problem.A if session.is_root else None, n)
            b_d = session.distribute_vector(problem.b if session.is_root else None, A_d.desc)
            local_bytes = int(session.max_over_ranks(A_d.nbytes))
            session.backend.reset()
            session.barrier()
            start = time.perf_counter()
            x_d, report = _solve_distributed(settings, A_d, b_d)
            session.barrier()
            wall = time.perf_counter() - start
            flops = session.total_flops()
            x = session.collect_vector(x_d)
        if x is None:
            return None
        relres = relative_residual(problem.A, x, problem.b)
        if settings.method in ("lu", "chol"):
            report = report.model_copy(update={"final_relres": relres})
        return RunResult(x, report, relres, wall, flops, local_bytes)

    result = launch(settings.ranks, program)[0]
    assert result is not None
    return result


def parse_grid(text: str) -> tuple[int, int]:
    """``"PxQ"`` to ``(P, Q)``."""
    p_rows, sep, p_cols = text.lower().partition("x")
    if not sep or not p_rows.isdigit() or not p_cols.isdigit():
        raise argparse.ArgumentTypeError(f"Grid must look like PxQ, got '{text}'")
    return int(p_rows), int(p_cols)


def parse_int_list(text: str) -> list[int]:
    try:
        values = [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"Expected comma-separated integers, got '{text}'"
        ) from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"Rank counts must be positive, got '{text}'")
    return values


def _krylov_config(args: argparse.Namespace) -> KrylovConfig:
    return KrylovConfig(tol=args.tol, max_iters=args.maxit, restart_m=args.restart)


def _problem(args: argparse.Namespace, precision: Precision) -> Problem:
    A = MatrixSpec.parse(args.matrix, default_seed=args.seed).build(precision)
    b = RhsSpec.parse(args.rhs).build(A.rows, precision, seed=args.seed)
    return Problem(A, b)


def cmd_solve(args: argparse.Namespace) -> int:
    """Solve one system and print a JSON summary on standard output."""
    precision = Precision(args.precision)
    problem = _problem(args, precision)
    settings = RunSettings(
        method=args.method,
        ranks=args.ranks,
        grid_shape=args.grid,
        nb=args.nb,
        backend=args.backend,
        krylov=_krylov_config(args),
    )
    logger.info(
        "solve: method=%s n=%d ranks=%d grid=%s backend=%s",
        settings.method,
        problem.n,
        settings.ranks,
        settings.grid,
        settings.backend,
    )
    try:
        result = run_distributed(problem, settings)
    except GridSolveError as exc:
        if exc.report is not None:
            print(exc.report.model_dump_json())
        raise

    summary = SolveSummary(
        **result.report.model_dump(exclude={"iterates"}),
        relres=result.relres,
        ranks=settings.ranks,
        grid=settings.grid,
        backend=settings.backend,
        precision=precision.value,
        flops=result.flops,
        wall_time_s=result.wall_time_s,
    )
    print(summary.model_dump_json())
    return 0


def _bench_rows(
    problem: Problem, args: argparse.Namespace, backend: str, precision: Precision
) -> list[BenchRecord]:
    ranks_list = list(dict.fromkeys([1, *args.ranks_list]))
    rows: list[BenchRecord] = []
    serial_time: float | None = None
    for ranks in ranks_list:
        grid_shape = args.grid if args.grid and args.grid[0] * args.grid[1] == ranks else None
        settings = RunSettings(
            method=args.method,
            ranks=ranks,
            grid_shape=grid_shape,
            nb=args.nb,
            backend=backend,
            krylov=_krylov_config(args),
        )
        runs = [run_distributed(problem, settings) for _ in range(args.repeat)]
        wall = statistics.median(run.wall_time_s for run in runs)
        last = runs[-1]
        if serial_time is None:
            serial_time = wall
        speedup = 1.0 if ranks == 1 else serial_time / max(wall, 1e-12)
        record = BenchRecord(
            method=settings.method,
            n=problem.n,
            ranks=ranks,
            grid=settings.grid,
            nb=settings.nb,
            backend=backend,
            precision=precision.value,
            wall_time_s=wall,
            flops=last.flops,
            iterations=None if settings.method in ("lu", "chol") else last.report.iterations,
            final_relres=last.report.final_relres,
            speedup_vs_serial=max(speedup, 1e-12),
            local_bytes=last.local_bytes,
        )
        logger.info(
            "bench %s ranks=%d backend=%s: %.4fs speedup %.2f",
            record.method,
            ranks,
            backend,
            wall,
            record.speedup_vs_serial,
        )
        rows.append(record)
    return rows


def cmd_bench(args: argparse.Namespace) -> int:
    """Run one method over several rank counts and backends; write CSV."""
    precision = Precision(args.precision)
    problem = _problem(args, precision)
    backends = args.backends or [args.backend]
    records = [
        record
        for backend in backends
        for record in _bench_rows(problem, args, backend, precision)
    ]
    if args.out is None:
        write_records(records, sys.stdout)
    else:
        with Path(args.out).open("w", newline="") as fh:
            write_records(records, fh)
        logger.info("wrote %d rows to %s", len(records), args.out)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    """Generate a matrix and write it to ``--out``."""
    spec = MatrixSpec(kind=args.kind, n=args.n, seed=args.seed)
    A = spec.build(Precision(args.precision))
    save_matrix(A, args.out, args.format, symmetric=spec.symmetric)
    return 0

"""Entry points that pick the serial or distributed path from the operand type."""

from __future__ import annotations

from typing import overload

from gridsolve.core import DenseMatrix, DenseVector
from gridsolve.direct.distributed import (
    chol_factor_dist,
    chol_solve_dist,
    lu_factor_dist,
    lu_solve_dist,
)
from gridsolve.direct.models import CholFactor, LuFactors
from gridsolve.direct.serial import (
    chol_factor_blocked,
    chol_solve_local,
    lu_factor_blocked,
    lu_solve_local,
)
from gridsolve.distgrid import DEFAULT_BLOCK, DistMatrix, DistVector
from gridsolve.errors import DescriptorMismatchError


def lu_factor(A: DenseMatrix | DistMatrix, nb: int = DEFAULT_BLOCK) -> LuFactors:
    """LU-factor ``A`` in place; ``nb`` applies to serial matrices only."""
    if isinstance(A, DistMatrix):
        return lu_factor_dist(A)
    return lu_factor_blocked(A, nb)


def chol_factor(A: DenseMatrix | DistMatrix, nb: int = DEFAULT_BLOCK) -> CholFactor:
    if isinstance(A, DistMatrix):
        return chol_factor_dist(A)
    return chol_factor_blocked(A, nb)


def _mismatch(what: str) -> DescriptorMismatchError:
    return DescriptorMismatchError(
        f"{what}: distributed factors need a DistVector and serial factors a DenseVector"
    )


@overload
def lu_solve(f: LuFactors, b: DenseVector) -> DenseVector: ...
@overload
def lu_solve(f: LuFactors, b: DistVector) -> DistVector: ...
def lu_solve(f: LuFactors, b: DenseVector | DistVector) -> DenseVector | DistVector:
    """Solve ``A x = b`` given the LU factors of ``A``; returns a new vector.

    Raises:
        SingularPivotError: If U has an exactly-zero diagonal entry.
    """
    if isinstance(b, DistVector):
        if not f.distributed:
            raise _mismatch("lu_solve")
        return lu_solve_dist(f, b)
    if f.distributed:
        raise _mismatch("lu_solve")
    return lu_solve_local(f, b)


@overload
def chol_solve(f: CholFactor, b: DenseVector) -> DenseVector: ...
@overload
def chol_solve(f: CholFactor, b: DistVector) -> DistVector: ...
def chol_solve(f: CholFactor, b: DenseVector | DistVector) -> DenseVector | DistVector:
    """Solve ``A x = b`` given the Cholesky factor of ``A``; returns a new vector."""
    if isinstance(b, DistVector):
        if not f.distributed:
            raise _mismatch("chol_solve")
        return chol_solve_dist(f, b)
    if f.distributed:
        raise _mismatch("chol_solve")
    return chol_solve_local(f, b)

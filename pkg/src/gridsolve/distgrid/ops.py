"""Distributed BLAS building blocks over :class:`DistMatrix` / :class:`DistVector`.

All operations are collective over the mesh. Vectors are replicated across
mesh columns, so vector updates are purely local and inner products need a
single reduction.
"""

from __future__ import annotations

import math

import numpy as np

from gridsolve import kernels
from gridsolve.core import Array, DenseVector
from gridsolve.distgrid.containers import DistMatrix, DistVector
from gridsolve.distgrid.grid import BlockCyclicDesc
from gridsolve.errors import DescriptorMismatchError
from gridsolve.transport import CommGroup, ReduceOp


def _require_same_grid(*descs: BlockCyclicDesc) -> None:
    grid = descs[0].grid
    for desc in descs[1:]:
        if desc.grid != grid:
            raise DescriptorMismatchError(
                f"Operands live on different grids: {grid} vs {desc.grid}"
            )


def _require_conformal(x: DistVector, y: DistVector) -> None:
    _require_same_grid(x.desc, y.desc)
    if x.desc.g_rows != y.desc.g_rows or x.desc.mb != y.desc.mb:
        raise DescriptorMismatchError(
            f"Vectors do not conform: {x.desc.fingerprint()} vs {y.desc.fingerprint()}"
        )


def assemble(x: DistVector, group: CommGroup) -> Array:
    """Full copy of ``x`` on every member of ``group``.

    ``group`` must hold one rank per mesh row (a column group). Each member
    contributes its entries zero-padded to full length, so the sum is exact.
    """
    padded = np.zeros(x.desc.g_rows, dtype=x.precision.dtype)
    padded[x.desc.my_rows] = x.local.data
    full: Array = x.grid.transport.allreduce(group, ReduceOp.SUM, padded)
    return full


def dist_matvec(A: DistMatrix, x: DistVector, y: DistVector) -> DistVector:
    """``y <- A @ x``.

    The full ``x`` is assembled down each mesh column, every rank multiplies
    its local block, and partial results are summed across the mesh row.
    """
    _require_same_grid(A.desc, x.desc, y.desc)
    if x.desc.g_rows != A.desc.g_cols or y.desc.g_rows != A.desc.g_rows:
        raise DescriptorMismatchError(
            f"dist_matvec: A {A.desc.fingerprint()}, x {x.desc.fingerprint()}, "
            f"y {y.desc.fingerprint()}"
        )
    if y.desc.mb != A.desc.mb:
        raise DescriptorMismatchError(f"y block {y.desc.mb} != A row block {A.desc.mb}")
    grid = A.grid

    x_full = assemble(x, grid.col_group)
    x_cols = DenseVector(np.ascontiguousarray(x_full[A.desc.my_cols]))
    partial = DenseVector.zeros(A.local.rows, A.precision)
    kernels.gemv(1.0, A.local, x_cols, 0.0, partial)
    y.local.data[...] = grid.transport.allreduce(grid.row_group, ReduceOp.SUM, partial.data)
    return y


def dist_transpose_matvec(A: DistMatrix, x: DistVector, y: DistVector) -> DistVector:
    """``y <- A.T @ x``."""
    _require_same_grid(A.desc, x.desc, y.desc)
    if x.desc.g_rows != A.desc.g_rows or y.desc.g_rows != A.desc.g_cols:
        raise DescriptorMismatchError(
            f"dist_transpose_matvec: A {A.desc.fingerprint()}, x {x.desc.fingerprint()}, "
            f"y {y.desc.fingerprint()}"
        )
    if x.desc.mb != A.desc.mb:
        raise DescriptorMismatchError(f"x block {x.desc.mb} != A row block {A.desc.mb}")
    grid = A.grid
    transport = grid.transport

    partial = DenseVector.zeros(A.local.cols, A.precision)
    kernels.gemv(1.0, A.local, x.local, 0.0, partial, transpose=True)
    col_sums = transport.allreduce(grid.col_group, ReduceOp.SUM, partial.data)

    padded = np.zeros(A.desc.g_cols, dtype=A.precision.dtype)
    padded[A.desc.my_cols] = col_sums
    full = transport.allreduce(grid.row_group, ReduceOp.SUM, padded)
    y.local.data[...] = full[y.desc.my_rows]
    return y


def dist_dot(x: DistVector, y: DistVector) -> float:
    """Global inner product, identical on every rank.

    Only mesh column 0 contributes, so replicated entries count once.
    """
    _require_conformal(x, y)
    grid = x.grid
    local = kernels.dot(x.local, y.local) if grid.my_col == 0 else 0.0
    total = grid.transport.allreduce(grid.world_group, ReduceOp.SUM, local)
    return float(total)


def dist_nrm2(x: DistVector) -> float:
    return math.sqrt(dist_dot(x, x))


def dist_axpy(alpha: float, x: DistVector, y: DistVector) -> DistVector:
    """``y <- alpha * x + y``; local on every rank, no communication."""
    _require_conformal(x, y)
    kernels.axpy(alpha, x.local, y.local)
    return y


def dist_scal(alpha: float, x: DistVector) -> DistVector:
    kernels.scal(alpha, x.local)
    return x


def dist_copy(x: DistVector, y: DistVector) -> DistVector:
    """``y <- x``."""
    _require_conformal(x, y)
    y.local.data[...] = x.local.data
    return y

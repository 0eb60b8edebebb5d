"""Operators the Krylov solvers iterate with.

A :class:`LinearOperator` bundles the matrix action with the vector-space
operations its vectors need, so one solver loop serves plain vectors and
distributed ones. With a distributed operator every rank runs the same
loop and the collectives happen inside these methods.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Generic, TypeVar

import numpy.typing as npt

from gridsolve import kernels
from gridsolve.core import DenseMatrix, DenseVector, Precision
from gridsolve.distgrid import (
    DistMatrix,
    DistVector,
    assemble,
    dist_axpy,
    dist_dot,
    dist_matvec,
    dist_nrm2,
    dist_scal,
    dist_transpose_matvec,
)
from gridsolve.errors import DimensionMismatchError

V = TypeVar("V", DenseVector, DistVector)


class LinearOperator(ABC, Generic[V]):
    """Square operator ``x -> A x`` plus the vector operations of its space."""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Global dimension ``n``."""

    @property
    @abstractmethod
    def precision(self) -> Precision: ...

    @property
    def has_transpose(self) -> bool:
        return False

    @abstractmethod
    def apply(self, x: V, out: V) -> V:
        """``out <- A @ x``."""

    def apply_transpose(self, x: V, out: V) -> V:
        """``out <- A.T @ x``."""
        raise DimensionMismatchError(f"{type(self).__name__} has no transpose")

    @abstractmethod
    def dot(self, x: V, y: V) -> float: ...

    @abstractmethod
    def norm(self, x: V) -> float: ...

    @abstractmethod
    def axpy(self, alpha: float, x: V, y: V) -> V: ...

    @abstractmethod
    def scal(self, alpha: float, x: V) -> V: ...

    @abstractmethod
    def zeros(self) -> V: ...

    @abstractmethod
    def copy(self, x: V) -> V: ...

    @abstractmethod
    def length(self, x: V) -> int:
        """Global length of ``x``."""

    @abstractmethod
    def snapshot(self, x: V) -> list[float]:
        """Full contents of ``x`` as a list (collective for distributed vectors)."""

    def check(self, x: V, name: str) -> None:
        if self.length(x) != self.dim:
            raise DimensionMismatchError(
                f"{name} has length {self.length(x)}, operator dimension is {self.dim}"
            )
        if x.precision is not self.precision:
            raise DimensionMismatchError(
                f"{name} is {x.precision.value}, operator is {self.precision.value}"
            )


class MatrixOperator(LinearOperator[DenseVector]):
    """Operator backed by a local dense matrix."""

    def __init__(self, A: DenseMatrix) -> None:
        if A.rows != A.cols:
            raise DimensionMismatchError(f"Operator matrix must be square, got {A.rows}x{A.cols}")
        self.matrix = A

    @classmethod
    def from_array(
        cls, values: npt.ArrayLike, precision: Precision | None = None
    ) -> MatrixOperator:
        return cls(DenseMatrix.from_array(values, precision))

    @property
    def dim(self) -> int:
        return self.matrix.rows

    @property
    def precision(self) -> Precision:
        return self.matrix.precision

    @property
    def has_transpose(self) -> bool:
        return True

    def apply(self, x: DenseVector, out: DenseVector) -> DenseVector:
        return kernels.gemv(1.0, self.matrix, x, 0.0, out)

    def apply_transpose(self, x: DenseVector, out: DenseVector) -> DenseVector:
        return kernels.gemv(1.0, self.matrix, x, 0.0, out, transpose=True)

    def dot(self, x: DenseVector, y: DenseVector) -> float:
        return kernels.dot(x, y)

    def norm(self, x: DenseVector) -> float:
        return kernels.nrm2(x)

    def axpy(self, alpha: float, x: DenseVector, y: DenseVector) -> DenseVector:
        return kernels.axpy(alpha, x, y)

    def scal(self, alpha: float, x: DenseVector) -> DenseVector:
        return kernels.scal(alpha, x)

    def zeros(self) -> DenseVector:
        return DenseVector.zeros(self.dim, self.precision)

    def copy(self, x: DenseVector) -> DenseVector:
        return x.copy()

    def length(self, x: DenseVector) -> int:
        return x.len

    def snapshot(self, x: DenseVector) -> list[float]:
        return [float(v) for v in x.data]


class DistMatrixOperator(LinearOperator[DistVector]):
    """Operator backed by a block-cyclic matrix; vectors are :class:`DistVector`."""

    def __init__(self, A: DistMatrix) -> None:
        if A.desc.g_rows != A.desc.g_cols:
            raise DimensionMismatchError(
                f"Operator matrix must be square, got {A.desc.fingerprint()}"
            )
        self.matrix = A
        self.vector_desc = A.desc.vector_desc()

    @property
    def dim(self) -> int:
        return self.matrix.desc.g_rows

    @property
    def precision(self) -> Precision:
        return self.matrix.precision

    @property
    def has_transpose(self) -> bool:
        return True

    def apply(self, x: DistVector, out: DistVector) -> DistVector:
        return dist_matvec(self.matrix, x, out)

    def apply_transpose(self, x: DistVector, out: DistVector) -> DistVector:
        return dist_transpose_matvec(self.matrix, x, out)

    def dot(self, x: DistVector, y: DistVector) -> float:
        return dist_dot(x, y)

    def norm(self, x: DistVector) -> float:
        return dist_nrm2(x)

    def axpy(self, alpha: float, x: DistVector, y: DistVector) -> DistVector:
        return dist_axpy(alpha, x, y)

    def scal(self, alpha: float, x: DistVector) -> DistVector:
        return dist_scal(alpha, x)

    def zeros(self) -> DistVector:
        return DistVector.zeros(self.vector_desc, self.precision)

    def copy(self, x: DistVector) -> DistVector:
        return x.copy()

    def length(self, x: DistVector) -> int:
        return x.g_len

    def snapshot(self, x: DistVector) -> list[float]:
        return [float(v) for v in assemble(x, x.grid.col_group)]

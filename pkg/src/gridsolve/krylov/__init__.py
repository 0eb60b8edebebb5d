"""Krylov subspace solvers over serial or distributed operators."""

from gridsolve.krylov.models import KrylovConfig
from gridsolve.krylov.operators import DistMatrixOperator, LinearOperator, MatrixOperator
from gridsolve.krylov.solvers import bicg, bicgstab, cg, gmres

__all__ = [
    "DistMatrixOperator",
    "KrylovConfig",
    "LinearOperator",
    "MatrixOperator",
    "bicg",
    "bicgstab",
    "cg",
    "gmres",
]

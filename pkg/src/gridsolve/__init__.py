"""gridsolve - distributed dense linear-system solvers over a 2D process grid.

Local kernels run through a pluggable backend, ranks talk over an
in-process message-passing transport, and matrices are distributed
block-cyclically so the same solver code runs on one rank or many.

Serial use:
    >>> import numpy as np
    >>> from gridsolve import DenseMatrix, DenseVector, lu_factor, lu_solve
    >>> A = DenseMatrix.from_array(np.array([[4.0, 3.0], [6.0, 3.0]]))
    >>> x = lu_solve(lu_factor(A), DenseVector.from_array([10.0, 12.0]))

Distributed use:
    >>> from gridsolve import RankSession, launch
    >>> def program(rank, transport):
    ...     with RankSession(transport, grid_shape=(2, 2)) as session:
    ...         A_d = session.distribute_matrix(A if session.is_root else None, n)
    ...         ...
    >>> launch(4, program)
"""

from gridsolve.backend import select_backend, use_backend
from gridsolve.core import DenseMatrix, DenseVector, Precision
from gridsolve.direct import CholFactor, LuFactors, chol_factor, chol_solve, lu_factor, lu_solve
from gridsolve.distgrid import BlockCyclicDesc, DistMatrix, DistVector, ProcGrid
from gridsolve.errors import ErrorKind, GridSolveError
from gridsolve.krylov import (
    DistMatrixOperator,
    KrylovConfig,
    LinearOperator,
    MatrixOperator,
    bicg,
    bicgstab,
    cg,
    gmres,
)
from gridsolve.models import SolveReport
from gridsolve.session import RankSession
from gridsolve.transport import launch

__version__ = "0.1.0"

__all__ = [
    "BlockCyclicDesc",
    "CholFactor",
    "DenseMatrix",
    "DenseVector",
    "DistMatrix",
    "DistMatrixOperator",
    "DistVector",
    "ErrorKind",
    "GridSolveError",
    "KrylovConfig",
    "LinearOperator",
    "LuFactors",
    "MatrixOperator",
    "Precision",
    "ProcGrid",
    "RankSession",
    "SolveReport",
    "__version__",
    "bicg",
    "bicgstab",
    "cg",
    "chol_factor",
    "chol_solve",
    "gmres",
    "launch",
    "lu_factor",
    "lu_solve",
    "select_backend",
    "use_backend",
]

"""Direct solvers: blocked and distributed LU / Cholesky with triangular-solve drivers."""

from gridsolve.direct.distributed import (
    chol_factor_dist,
    chol_solve_dist,
    dist_triangular_solve,
    lu_factor_dist,
    lu_solve_dist,
)
from gridsolve.direct.drivers import chol_factor, chol_solve, lu_factor, lu_solve
from gridsolve.direct.models import CholFactor, LuFactors
from gridsolve.direct.serial import (
    chol_factor_blocked,
    chol_solve_local,
    lu_factor_blocked,
    lu_solve_local,
)

__all__ = [
    "CholFactor",
    "LuFactors",
    "chol_factor",
    "chol_factor_blocked",
    "chol_factor_dist",
    "chol_solve",
    "chol_solve_dist",
    "chol_solve_local",
    "dist_triangular_solve",
    "lu_factor",
    "lu_factor_blocked",
    "lu_factor_dist",
    "lu_solve",
    "lu_solve_dist",
    "lu_solve_local",
]

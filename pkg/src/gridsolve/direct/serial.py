"""Blocked LU and Cholesky on one rank, with their triangular-solve drivers.

Both factorizations are right-looking: each panel is factored, then the
whole trailing matrix receives one rank-``nb`` update instead of ``nb``
rank-1 updates.
"""

from __future__ import annotations

import logging

from gridsolve.core import DenseMatrix, DenseVector
from gridsolve.direct.models import CholFactor, LuFactors
from gridsolve.distgrid import DEFAULT_BLOCK
from gridsolve.errors import DimensionMismatchError
from gridsolve.kernels import (
    Side,
    TriangleSpec,
    Uplo,
    gemm,
    getf2,
    laswp,
    potf2,
    syrk,
    trsm,
)

logger = logging.getLogger(__name__)

UNIT_LOWER = TriangleSpec(side=Side.LEFT, uplo=Uplo.LOWER, unit_diag=True)
UPPER = TriangleSpec(side=Side.LEFT, uplo=Uplo.UPPER)
LOWER = TriangleSpec(side=Side.LEFT, uplo=Uplo.LOWER)
LOWER_TRANSPOSED = TriangleSpec(side=Side.LEFT, uplo=Uplo.LOWER, transpose=True)
RIGHT_LOWER_TRANSPOSED = TriangleSpec(side=Side.RIGHT, uplo=Uplo.LOWER, transpose=True)


def _require_square(A: DenseMatrix, what: str) -> int:
    if A.rows != A.cols:
        raise DimensionMismatchError(f"{what}: matrix must be square, got {A.rows}x{A.cols}")
    return A.rows


def _require_block(nb: int) -> None:
    if nb < 1:
        raise ValueError("`nb` must be at least 1")


def lu_factor_blocked(A: DenseMatrix, nb: int = DEFAULT_BLOCK) -> LuFactors:
    """Blocked LU with partial pivoting, in place on ``A``.

    Raises:
        SingularPivotError: If a pivot column is exactly zero.
    """
    n = _require_square(A, "lu_factor_blocked")
    _require_block(nb)
    if n == 0:
        return LuFactors(A, [])
    if nb >= n:
        return LuFactors(A, getf2(A))

    pivots: list[int] = []
    for j0 in range(0, n, nb):
        jb = min(nb, n - j0)
        rest = n - j0 - jb
        panel_pivots = getf2(A.view(j0, j0, n - j0, jb))
        pivots.extend(j0 + p for p in panel_pivots)

        last = j0 + jb - 1
        if j0 > 0:
            laswp(A.view(0, 0, n, j0), pivots, j0, last)
        if rest:
            laswp(A.view(0, j0 + jb, n, rest), pivots, j0, last)
            trsm(UNIT_LOWER, 1.0, A.view(j0, j0, jb, jb), A.view(j0, j0 + jb, jb, rest))
            gemm(
                -1.0,
                A.view(j0 + jb, j0, rest, jb),
                A.view(j0, j0 + jb, jb, rest),
                1.0,
                A.view(j0 + jb, j0 + jb, rest, rest),
            )
        logger.debug("lu panel %d/%d done", j0 // nb + 1, -(-n // nb))
    return LuFactors(A, pivots)


def chol_factor_blocked(A: DenseMatrix, nb: int = DEFAULT_BLOCK) -> CholFactor:
    """Blocked lower Cholesky in place; only the lower triangle is read.

    Raises:
        NotSpdError: If a leading minor is not positive definite.
    """
    n = _require_square(A, "chol_factor_blocked")
    _require_block(nb)
    if nb >= n:
        if n:
            potf2(A)
        return CholFactor(A)

    for j0 in range(0, n, nb):
        jb = min(nb, n - j0)
        rest = n - j0 - jb
        potf2(A.view(j0, j0, jb, jb))
        if not rest:
            break
        trsm(RIGHT_LOWER_TRANSPOSED, 1.0, A.view(j0, j0, jb, jb), A.view(j0 + jb, j0, rest, jb))
        for k0 in range(j0 + jb, n, nb):
            update_lower_block(A, j0, jb, k0, min(nb, n - k0))
        logger.debug("cholesky panel %d/%d done", j0 // nb + 1, -(-n // nb))
    return CholFactor(A)


def update_lower_block(A: DenseMatrix, j0: int, jb: int, k0: int, kb: int) -> None:
    """Subtract the panel's contribution from trailing block column ``k0``, lower part only."""
    n = A.rows
    syrk(-1.0, A.view(k0, j0, kb, jb), 1.0, A.view(k0, k0, kb, kb))
    below = n - k0 - kb
    if below:
        gemm(
            -1.0,
            A.view(k0 + kb, j0, below, jb),
            A.view(k0, j0, kb, jb),
            1.0,
            A.view(k0 + kb, k0, below, kb),
            transB=True,
        )


def lu_solve_local(f: LuFactors, b: DenseVector) -> DenseVector:
    """Solve ``A x = b`` from serial LU factors; ``b`` is left untouched."""
    packed = f.packed
    assert isinstance(packed, DenseMatrix)
    n = packed.rows
    if b.len != n:
        raise DimensionMismatchError(f"lu_solve: factors are {n}x{n}, b has {b.len} entries")
    x = b.copy()
    if n == 0:
        return x
    rhs = x.as_matrix()
    laswp(rhs, f.pivots, 0, n - 1)
    trsm(UNIT_LOWER, 1.0, packed, rhs)
    trsm(UPPER, 1.0, packed, rhs)
    return x


def chol_solve_local(f: CholFactor, b: DenseVector) -> DenseVector:
    """Solve ``A x = b`` from a serial Cholesky factor; ``b`` is left untouched."""
    lower = f.lower
    assert isinstance(lower, DenseMatrix)
    n = lower.rows
    if b.len != n:
        raise DimensionMismatchError(f"chol_solve: factor is {n}x{n}, b has {b.len} entries")
    x = b.copy()
    if n == 0:
        return x
    rhs = x.as_matrix()
    trsm(LOWER, 1.0, lower, rhs)
    trsm(LOWER_TRANSPOSED, 1.0, lower, rhs)
    return x

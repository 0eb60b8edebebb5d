"""Local BLAS-subset kernels and unblocked factorizations.

Every kernel validates its operands, then hands a :class:`KernelCall` to the
backend of the current context, which executes it (in place or staged) and
adds the kernel's flop count. Flop accounting counts multiplies and adds
separately; comparisons and row swaps are free.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from enum import Enum
from typing import Any

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict

from gridsolve.backend import HostBuffer, KernelCall, LaunchLayout, current_backend
from gridsolve.core import Array, DenseMatrix, DenseVector, require_same_precision
from gridsolve.errors import DimensionMismatchError, NotSpdError, SingularPivotError


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class Uplo(str, Enum):
    LOWER = "lower"
    UPPER = "upper"


class TriangleSpec(BaseModel):
    """Which triangle of a square matrix to use, and how."""

    model_config = ConfigDict(frozen=True)

    side: Side = Side.LEFT
    uplo: Uplo = Uplo.LOWER
    unit_diag: bool = False
    transpose: bool = False


def _dispatch(
    name: str,
    body: Any,
    *,
    reads: Mapping[str, Array],
    writes: Mapping[str, Array],
    flops: int,
    elements: int,
) -> Any:
    call = KernelCall(
        name=name,
        body=body,
        inputs=tuple(HostBuffer(key, arr) for key, arr in reads.items()),
        outputs=tuple(HostBuffer(key, arr) for key, arr in writes.items()),
        flops=flops,
        layout=LaunchLayout.for_elements(elements),
        elements=elements,
    )
    return current_backend().execute(call)


def _scale_accumulate(out: Array, prod: Array, alpha: float, beta: float) -> None:
    # out <- alpha * prod + beta * out; out is not read when beta == 0
    scaled = prod if alpha == 1 else alpha * prod
    if beta == 0:
        out[...] = scaled
    elif beta == 1:
        out += scaled
    else:
        out[...] = scaled + beta * out


def _check_len(x: DenseVector, y: DenseVector) -> None:
    if x.len != y.len:
        raise DimensionMismatchError(f"Vector lengths differ: {x.len} != {y.len}")


# =============================================================================
# Level 1
# =============================================================================


def axpy(alpha: float, x: DenseVector, y: DenseVector) -> DenseVector:
    """``y <- alpha * x + y`` in place."""
    _check_len(x, y)
    require_same_precision(x, y)

    def body(ops: dict[str, Array]) -> None:
        ops["y"] += alpha * ops["x"]

    _dispatch(
        "axpy",
        body,
        reads={"x": x.data, "y": y.data},
        writes={"y": y.data},
        flops=2 * x.len,
        elements=x.len,
    )
    return y


def dot(x: DenseVector, y: DenseVector) -> float:
    """Inner product ``sum(x[i] * y[i])``."""
    _check_len(x, y)
    require_same_precision(x, y)

    def body(ops: dict[str, Array]) -> float:
        return float(np.dot(ops["x"], ops["y"]))

    result: float = _dispatch(
        "dot",
        body,
        reads={"x": x.data, "y": y.data},
        writes={},
        flops=2 * x.len,
        elements=x.len,
    )
    return result


def nrm2(x: DenseVector) -> float:
    """Euclidean norm as a plain square root of the sum of squares.

    No rescaling is done, so F32 inputs near ``1e19`` overflow.
    """

    def body(ops: dict[str, Array]) -> float:
        return math.sqrt(float(np.dot(ops["x"], ops["x"])))

    result: float = _dispatch(
        "nrm2", body, reads={"x": x.data}, writes={}, flops=2 * x.len, elements=x.len
    )
    return result


def scal(alpha: float, x: DenseVector) -> DenseVector:
    """``x <- alpha * x`` in place."""

    def body(ops: dict[str, Array]) -> None:
        ops["x"] *= alpha

    _dispatch("scal", body, reads={"x": x.data}, writes={"x": x.data}, flops=x.len, elements=x.len)
    return x


# =============================================================================
# Level 2 / 3
# =============================================================================


def gemv(
    alpha: float,
    A: DenseMatrix,
    x: DenseVector,
    beta: float,
    y: DenseVector,
    transpose: bool = False,
) -> DenseVector:
    """``y <- alpha * op(A) @ x + beta * y`` in place."""
    require_same_precision(A, x, y)
    m, n = (A.cols, A.rows) if transpose else (A.rows, A.cols)
    if x.len != n or y.len != m:
        raise DimensionMismatchError(
            f"gemv: op(A) is {m}x{n}, x has {x.len} entries, y has {y.len}"
        )

    def body(ops: dict[str, Array]) -> None:
        a = ops["A"].T if transpose else ops["A"]
        if alpha == 0:
            _scale_accumulate(ops["y"], np.zeros_like(ops["y"]), 1.0, beta)
            return
        prod = np.asfortranarray(a) @ ops["x"]
        _scale_accumulate(ops["y"], prod, alpha, beta)

    reads = {"A": A.array, "x": x.data}
    if beta != 0:
        reads["y"] = y.data
    flops = 2 * m * n + (m if beta not in (0, 1) else 0)
    _dispatch("gemv", body, reads=reads, writes={"y": y.data}, flops=flops, elements=m)
    return y


def gemm(
    alpha: float,
    A: DenseMatrix,
    B: DenseMatrix,
    beta: float,
    C: DenseMatrix,
    transA: bool = False,
    transB: bool = False,
) -> DenseMatrix:
    """``C <- alpha * op(A) @ op(B) + beta * C`` in place."""
    require_same_precision(A, B, C)
    m, k = (A.cols, A.rows) if transA else (A.rows, A.cols)
    kb, n = (B.cols, B.rows) if transB else (B.rows, B.cols)
    if k != kb or C.rows != m or C.cols != n:
        raise DimensionMismatchError(
            f"gemm: op(A) {m}x{k}, op(B) {kb}x{n}, C {C.rows}x{C.cols}"
        )

    def body(ops: dict[str, Array]) -> None:
        a = ops["A"].T if transA else ops["A"]
        b = ops["B"].T if transB else ops["B"]
        if alpha == 0 or k == 0:
            _scale_accumulate(ops["C"], np.zeros_like(ops["C"]), 1.0, beta)
            return
        prod = np.asfortranarray(a) @ np.asfortranarray(b)
        _scale_accumulate(ops["C"], prod, alpha, beta)

    reads = {"A": A.array, "B": B.array}
    if beta != 0:
        reads["C"] = C.array
    _dispatch(
        "gemm", body, reads=reads, writes={"C": C.array}, flops=2 * m * n * k, elements=m * n
    )
    return C


def syrk(alpha: float, A: DenseMatrix, beta: float, C: DenseMatrix) -> DenseMatrix:
    """``C <- alpha * A @ A.T + beta * C`` on the lower triangle of ``C`` only."""
    require_same_precision(A, C)
    n, k = A.shape
    if C.shape != (n, n):
        raise DimensionMismatchError(f"syrk: A is {n}x{k}, C is {C.rows}x{C.cols}")
    lower = np.tril_indices(n)

    def body(ops: dict[str, Array]) -> None:
        a = np.asfortranarray(ops["A"])
        c = ops["C"]
        tri = c[lower]
        _scale_accumulate(tri, (a @ a.T)[lower], alpha, beta)
        c[lower] = tri

    # C is always staged in: the strict upper triangle must survive the copy-out
    _dispatch(
        "syrk",
        body,
        reads={"A": A.array, "C": C.array},
        writes={"C": C.array},
        flops=k * n * (n + 1),
        elements=n * n,
    )
    return C


def ger(alpha: float, x: DenseVector, y: DenseVector, A: DenseMatrix) -> DenseMatrix:
    """Rank-1 update ``A <- alpha * x @ y.T + A`` in place."""
    require_same_precision(x, y, A)
    if A.shape != (x.len, y.len):
        raise DimensionMismatchError(f"ger: A is {A.rows}x{A.cols}, x {x.len}, y {y.len}")

    def body(ops: dict[str, Array]) -> None:
        ops["A"] += alpha * np.outer(ops["x"], ops["y"])

    _dispatch(
        "ger",
        body,
        reads={"x": x.data, "y": y.data, "A": A.array},
        writes={"A": A.array},
        flops=2 * x.len * y.len,
        elements=x.len * y.len,
    )
    return A


def rscal(divisor: float, x: DenseVector) -> DenseVector:
    """``x <- x / divisor`` in place (true division, not a reciprocal multiply)."""
    if divisor == 0:
        raise SingularPivotError("rscal: division by zero")

    def body(ops: dict[str, Array]) -> None:
        ops["x"] /= divisor

    _dispatch("rscal", body, reads={"x": x.data}, writes={"x": x.data}, flops=x.len, elements=x.len)
    return x


def trsm(spec: TriangleSpec, alpha: float, A: DenseMatrix, B: DenseMatrix) -> DenseMatrix:
    """Triangular solve with multiple right-hand sides, in place on ``B``.

    ``B <- alpha * op(A)^-1 @ B`` for ``Side.LEFT`` and
    ``B <- alpha * B @ op(A)^-1`` for ``Side.RIGHT``. Only the ``spec.uplo``
    triangle of ``A`` is read; with ``unit_diag`` the diagonal is not read.
    """
    require_same_precision(A, B)
    if A.rows != A.cols:
        raise DimensionMismatchError(f"trsm: A must be square, got {A.rows}x{A.cols}")
    order = A.rows
    left = spec.side is Side.LEFT
    if (B.rows if left else B.cols) != order:
        raise DimensionMismatchError(
            f"trsm: A is {order}x{order} but B is {B.rows}x{B.cols} ({spec.side.value} side)"
        )
    if not spec.unit_diag and order:
        zeros = np.flatnonzero(np.diagonal(A.array) == 0)
        if zeros.size:
            raise SingularPivotError(f"trsm: zero diagonal entry at index {int(zeros[0])}")

    lower = spec.uplo is Uplo.LOWER
    # B @ op(A)^-1 = (op(A)^-T @ B^T)^T
    trans = spec.transpose if left else not spec.transpose

    def body(ops: dict[str, Array]) -> None:
        b = ops["B"] if left else ops["B"].T
        if b.size == 0:
            return
        rhs = b if alpha == 1 else alpha * b
        b[...] = scipy.linalg.solve_triangular(
            ops["A"],
            rhs,
            trans=1 if trans else 0,
            lower=lower,
            unit_diagonal=spec.unit_diag,
            check_finite=False,
        )

    nrhs = B.cols if left else B.rows
    per_rhs = order * (order - 1) if spec.unit_diag else order * order
    _dispatch(
        "trsm",
        body,
        reads={"A": A.array, "B": B.array},
        writes={"B": B.array},
        flops=nrhs * per_rhs + (B.rows * B.cols if alpha not in (0, 1) else 0),
        elements=B.rows * B.cols,
    )
    return B


# =============================================================================
# Unblocked factorizations
# =============================================================================


def getf2_flops(m: int, n: int) -> int:
    """Flops of an unblocked LU on an ``m x n`` panel."""
    return sum((m - k - 1) + 2 * (m - k - 1) * (n - k - 1) for k in range(min(m, n)))


def getf2(A: DenseMatrix) -> list[int]:
    """Unblocked LU with partial pivoting of an ``m x n`` panel (``m >= n``), in place.

    Ties between equal-magnitude candidates go to the smallest row index.

    Returns:
        Swap sequence: ``pivots[k]`` is the row swapped with row ``k`` at step ``k``.
    """
    m, n = A.shape
    if m < n or n < 1:
        raise DimensionMismatchError(f"getf2 needs m >= n >= 1, got {m}x{n}")

    def body(ops: dict[str, Array]) -> list[int]:
        a = ops["A"]
        pivots: list[int] = []
        for k in range(n):
            p = k + int(np.argmax(np.abs(a[k:, k])))
            if a[p, k] == 0:
                raise SingularPivotError(f"getf2: pivot column {k} is entirely zero")
            pivots.append(p)
            if p != k:
                a[[k, p], :] = a[[p, k], :]
            a[k + 1 :, k] /= a[k, k]
            if k + 1 < n:
                a[k + 1 :, k + 1 :] -= np.outer(a[k + 1 :, k], a[k, k + 1 :])
        return pivots

    pivots: list[int] = _dispatch(
        "getf2",
        body,
        reads={"A": A.array},
        writes={"A": A.array},
        flops=getf2_flops(m, n),
        elements=m * n,
    )
    return pivots


def potf2_flops(n: int) -> int:
    """Flops of an unblocked Cholesky of order ``n``."""
    return sum(2 * (n - j) * j + (n - j) for j in range(n))


def potf2(A: DenseMatrix) -> DenseMatrix:
    """Unblocked lower Cholesky in place; only the lower triangle is read or written."""
    n = A.rows
    if A.cols != n:
        raise DimensionMismatchError(f"potf2: A must be square, got {A.rows}x{A.cols}")

    def body(ops: dict[str, Array]) -> None:
        a = ops["A"]
        for j in range(n):
            if j:
                a[j:, j] -= a[j:, :j] @ a[j, :j]
            d = a[j, j]
            if not d > 0:
                raise NotSpdError(f"potf2: non-positive pivot {float(d)} at column {j}")
            a[j, j] = math.sqrt(d)
            a[j + 1 :, j] /= a[j, j]

    _dispatch(
        "potf2",
        body,
        reads={"A": A.array},
        writes={"A": A.array},
        flops=potf2_flops(n),
        elements=n * n,
    )
    return A


def laswp(
    A: DenseMatrix,
    pivots: Sequence[int],
    first: int,
    last: int,
    reverse: bool = False,
) -> DenseMatrix:
    """Apply the row interchanges ``pivots[first..last]`` (inclusive) in place.

    Swaps go ``k = first, ..., last`` (``last, ..., first`` with ``reverse``),
    exchanging row ``k`` with row ``pivots[k]``. A forward pass followed by a
    reverse pass restores ``A``.
    """
    if first <= last and (first < 0 or last >= len(pivots) or last >= A.rows):
        raise DimensionMismatchError(
            f"laswp: range [{first}, {last}] invalid for {len(pivots)} pivots, {A.rows} rows"
        )
    steps = list(range(first, last + 1))
    for k in steps:
        if not 0 <= pivots[k] < A.rows:
            raise DimensionMismatchError(f"laswp: pivot {pivots[k]} outside {A.rows} rows")
    if reverse:
        steps.reverse()
    swaps = [(k, int(pivots[k])) for k in steps if pivots[k] != k]

    def body(ops: dict[str, Array]) -> None:
        a = ops["A"]
        for k, p in swaps:
            a[[k, p], :] = a[[p, k], :]

    _dispatch(
        "laswp",
        body,
        reads={"A": A.array},
        writes={"A": A.array},
        flops=0,
        elements=A.rows * A.cols,
    )
    return A

"""Right-looking LU and Cholesky on a block-cyclic matrix, plus distributed solves.

For every panel the owning mesh column factors it cooperatively, the result
is broadcast along mesh rows (L21) and down mesh columns (U12), and each
rank applies one local gemm to its share of the trailing matrix. On a 1x1
mesh every kernel call matches the serial blocked algorithm operand for
operand.
"""

from __future__ import annotations

import logging

import numpy as np

from gridsolve.core import Array, DenseMatrix, DenseVector
from gridsolve.direct.models import CholFactor, LuFactors
from gridsolve.direct.serial import RIGHT_LOWER_TRANSPOSED, UNIT_LOWER
from gridsolve.distgrid import BlockCyclicDesc, DistMatrix, DistVector, Tag
from gridsolve.errors import (
    DescriptorMismatchError,
    NotSpdError,
    SingularPivotError,
)
from gridsolve.kernels import (
    Side,
    TriangleSpec,
    Uplo,
    axpy,
    gemm,
    gemv,
    ger,
    potf2,
    rscal,
    syrk,
    trsm,
)
from gridsolve.transport import CommGroup, ReduceOp
from gridsolve.transport.codec import (
    decode_array,
    decode_indices,
    encode_array,
    encode_indices,
)

logger = logging.getLogger(__name__)

_OK = -1


def _require_factorizable(A: DistMatrix, what: str) -> BlockCyclicDesc:
    desc = A.desc
    if desc.g_rows != desc.g_cols:
        raise DescriptorMismatchError(f"{what}: matrix must be square, got {desc.fingerprint()}")
    if desc.mb != desc.nb:
        raise DescriptorMismatchError(f"{what}: needs square blocks, got {desc.mb}x{desc.nb}")
    desc.check_agreement()
    return desc


def _first_at_or_after(indices: Array, g: int) -> int:
    """Local position of the first global index ``>= g`` (indices are ascending)."""
    return int(np.searchsorted(indices, g))


def _column(local: DenseMatrix, start: int, j: int) -> DenseVector:
    """Zero-copy view of local column ``j`` from row ``start`` down."""
    return DenseVector(local.array[start:, j])


def _bcast_matrix(
    A: DistMatrix, group: CommGroup, root: int, view: DenseMatrix | None
) -> DenseMatrix:
    """Broadcast ``view`` from ``root``; the root keeps its own view."""
    transport = A.grid.transport
    if A.grid.rank == root:
        assert view is not None
        transport.broadcast(group, root, encode_array(view.array))
        return view
    return DenseMatrix.from_array(decode_array(transport.broadcast(group, root, None)))


def _exchange_rows(
    grid_desc: BlockCyclicDesc,
    values: Array,
    r1: int,
    r2: int,
    cols: slice | Array,
    tag: Tag,
) -> None:
    """Swap global rows ``r1`` and ``r2`` of ``values[:, cols]`` (or of a vector)."""
    if r1 == r2:
        return
    desc = grid_desc
    grid = desc.grid
    o1, o2 = desc.row_owner(r1), desc.row_owner(r2)
    if grid.my_row not in (o1, o2):
        return
    if o1 == o2:
        l1, l2 = desc.local_row(r1), desc.local_row(r2)
        held = values[l1, cols].copy()
        values[l1, cols] = values[l2, cols]
        values[l2, cols] = held
        return
    mine, other = (r1, o2) if grid.my_row == o1 else (r2, o1)
    li = desc.local_row(mine)
    partner = grid.rank_of(other, grid.my_col)
    outgoing = encode_array(np.ascontiguousarray(values[li, cols]))
    values[li, cols] = decode_array(grid.transport.sendrecv(partner, tag, outgoing)).ravel()


# =============================================================================
# LU
# =============================================================================


def lu_factor_dist(A: DistMatrix) -> LuFactors:
    """Distributed blocked LU with partial pivoting, in place on ``A``.

    Collective over the mesh. The returned pivot list is identical on
    every rank.

    Raises:
        SingularPivotError: On every rank, if a pivot column is exactly zero.
        DescriptorMismatchError: If ``A`` is not square with square blocks.
    """
    desc = _require_factorizable(A, "lu_factor_dist")
    grid = desc.grid
    transport = grid.transport
    n, nb = desc.g_rows, desc.nb
    rows, cols = desc.my_rows, desc.my_cols
    local = A.local

    pivots: list[int] = []
    for j0 in range(0, n, nb):
        jb = min(nb, n - j0)
        end = j0 + jb
        pr, pc = desc.row_owner(j0), desc.col_owner(j0)

        status = None
        if grid.my_col == pc:
            panel_pivots, failed = _factor_panel(A, j0, jb)
            status = encode_indices([failed, *panel_pivots])
        status_root = grid.rank_of(0, pc)
        decoded = decode_indices(
            transport.broadcast(
                grid.world_group, status_root, status if grid.rank == status_root else None
            )
        )
        failed, panel = decoded[0], decoded[1:]
        if failed != _OK:
            raise SingularPivotError(f"lu_factor_dist: pivot column {failed} is entirely zero")
        pivots.extend(panel)

        # Apply this panel's interchanges to every column outside the panel
        outside: slice | Array = slice(None)
        if grid.my_col == pc:
            lc0 = desc.local_col(j0)
            outside = np.r_[0:lc0, lc0 + jb : local.cols]
        for k, p in enumerate(panel):
            _exchange_rows(desc, local.array, j0 + k, p, outside, Tag.ROW_SWAP)

        if end < n:
            _lu_trailing_update(A, j0, jb, pr, pc, rows, cols)
        logger.debug("rank %d: lu panel at %d done", grid.rank, j0)

    return LuFactors(A, pivots)


def _factor_panel(A: DistMatrix, j0: int, jb: int) -> tuple[list[int], int]:
    """Unblocked LU of global columns ``j0 .. j0+jb`` by the owning mesh column.

    Returns the panel's global pivot rows and ``_OK``, or the partial pivots
    and the first column found to be entirely zero.
    """
    desc = A.desc
    grid = desc.grid
    transport = grid.transport
    rows = desc.my_rows
    local = A.local
    arr = local.array
    lc0 = desc.local_col(j0)
    panel_cols = slice(lc0, lc0 + jb)

    pivots: list[int] = []
    for k in range(jb):
        c = j0 + k
        start = _first_at_or_after(rows, c)
        column = arr[start:, lc0 + k]
        if column.size:
            best = int(np.argmax(np.abs(column)))
            candidate = (float(column[best]), int(rows[start + best]))
        else:
            candidate = (0.0, desc.g_rows)
        value, p = transport.allreduce(grid.col_group, ReduceOp.MAX_ABS_LOC, candidate)
        if value == 0:
            return pivots, c
        pivots.append(p)
        _exchange_rows(desc, arr, c, p, panel_cols, Tag.ROW_SWAP)

        owner_row = desc.row_owner(c)
        root = grid.rank_of(owner_row, grid.my_col)
        payload = None
        if grid.my_row == owner_row:
            payload = encode_array(arr[desc.local_row(c), panel_cols])
        pivot_row = decode_array(transport.broadcast(grid.col_group, root, payload)).ravel()

        below_start = _first_at_or_after(rows, c + 1)
        below = local.rows - below_start
        if below:
            multipliers = _column(local, below_start, lc0 + k)
            rscal(pivot_row[k], multipliers)
            if k + 1 < jb:
                ger(
                    -1.0,
                    multipliers,
                    DenseVector(np.ascontiguousarray(pivot_row[k + 1 :])),
                    local.view(below_start, lc0 + k + 1, below, jb - k - 1),
                )
    return pivots, _OK


def _lu_trailing_update(
    A: DistMatrix, j0: int, jb: int, pr: int, pc: int, rows: Array, cols: Array
) -> None:
    desc = A.desc
    grid = desc.grid
    local = A.local
    end = j0 + jb
    top = _first_at_or_after(rows, end)
    left = _first_at_or_after(cols, end)
    below, right = local.rows - top, local.cols - left

    # U12 <- L11^-1 A12 on the diagonal mesh row
    if grid.my_row == pr:
        lr0 = desc.local_row(j0)
        diag_root = grid.rank_of(pr, pc)
        l11_view = local.view(lr0, desc.local_col(j0), jb, jb) if grid.my_col == pc else None
        l11 = _bcast_matrix(A, grid.row_group, diag_root, l11_view)
        trsm(UNIT_LOWER, 1.0, l11, local.view(lr0, left, jb, right))

    l21_view = local.view(top, desc.local_col(j0), below, jb) if grid.my_col == pc else None
    l21 = _bcast_matrix(A, grid.row_group, grid.rank_of(grid.my_row, pc), l21_view)
    u12_view = local.view(desc.local_row(j0), left, jb, right) if grid.my_row == pr else None
    u12 = _bcast_matrix(A, grid.col_group, grid.rank_of(pr, grid.my_col), u12_view)

    if below and right:
        gemm(-1.0, l21, u12, 1.0, local.view(top, left, below, right))


# =============================================================================
# Cholesky
# =============================================================================


def chol_factor_dist(A: DistMatrix) -> CholFactor:
    """Distributed blocked lower Cholesky, in place; only the lower triangle is read.

    Raises:
        NotSpdError: On every rank, if a leading minor is not positive definite.
    """
    desc = _require_factorizable(A, "chol_factor_dist")
    grid = desc.grid
    transport = grid.transport
    n, nb = desc.g_rows, desc.nb
    rows, cols = desc.my_rows, desc.my_cols
    local = A.local

    for j0 in range(0, n, nb):
        jb = min(nb, n - j0)
        end = j0 + jb
        pr, pc = desc.row_owner(j0), desc.col_owner(j0)
        diag_root = grid.rank_of(pr, pc)

        l11_view: DenseMatrix | None = None
        payload = None
        if grid.rank == diag_root:
            l11_view = local.view(desc.local_row(j0), desc.local_col(j0), jb, jb)
            try:
                potf2(l11_view)
                payload = encode_array(l11_view.array)
            except NotSpdError:
                payload = b""
        received = transport.broadcast(grid.world_group, diag_root, payload)
        if not received:
            raise NotSpdError(f"chol_factor_dist: diagonal block at {j0} is not positive definite")
        if end == n:
            break

        top = _first_at_or_after(rows, end)
        if grid.my_col == pc:
            l11 = l11_view
            if l11 is None:
                l11 = DenseMatrix.from_array(decode_array(received))
            l21 = local.view(top, desc.local_col(j0), local.rows - top, jb)
            trsm(RIGHT_LOWER_TRANSPOSED, 1.0, l11, l21)

        panel = _assemble_panel(A, j0, jb, pc, top)
        _chol_trailing_update(A, j0, jb, pc, panel, rows, cols)
        logger.debug("rank %d: cholesky panel at %d done", grid.rank, j0)

    return CholFactor(A)


def _assemble_panel(A: DistMatrix, j0: int, jb: int, pc: int, top: int) -> Array:
    """Full ``L21`` (global rows below the panel) on every rank."""
    desc = A.desc
    grid = desc.grid
    end = j0 + jb
    padded = np.zeros((desc.g_rows - end, jb), dtype=A.precision.dtype, order="F")
    if grid.my_col == pc:
        lc0 = desc.local_col(j0)
        padded[desc.my_rows[top:] - end, :] = A.local.array[top:, lc0 : lc0 + jb]
    full: Array = grid.transport.allreduce(grid.world_group, ReduceOp.SUM, padded)
    return full


def _chol_trailing_update(
    A: DistMatrix, j0: int, jb: int, pc: int, panel: Array, rows: Array, cols: Array
) -> None:
    desc = A.desc
    grid = desc.grid
    local = A.local
    n, nb = desc.g_rows, desc.nb
    end = j0 + jb
    lc0 = desc.local_col(j0)
    in_panel_col = grid.my_col == pc

    def panel_rows(lr_start: int, count: int) -> DenseMatrix:
        if in_panel_col:
            return local.view(lr_start, lc0, count, jb)
        return DenseMatrix.from_array(panel[rows[lr_start : lr_start + count] - end])

    for g in range(end, n, nb):
        if desc.col_owner(g) != grid.my_col:
            continue
        kb = min(nb, n - g)
        lcg = desc.local_col(g)
        first = _first_at_or_after(rows, g)
        if desc.row_owner(g) == grid.my_row:
            syrk(-1.0, panel_rows(first, kb), 1.0, local.view(first, lcg, kb, kb))
            first += kb
        below = local.rows - first
        if below:
            if in_panel_col and desc.row_owner(g) == grid.my_row:
                lg = local.view(desc.local_row(g), lc0, kb, jb)
            else:
                lg = DenseMatrix.from_array(panel[g - end : g - end + kb])
            target = local.view(first, lcg, below, kb)
            gemm(-1.0, panel_rows(first, below), lg, 1.0, target, transB=True)


# =============================================================================
# Triangular solves
# =============================================================================


def _check_solve_operands(F: DistMatrix, b: DistVector, what: str) -> BlockCyclicDesc:
    desc = F.desc
    if b.desc.grid != desc.grid or b.desc.g_rows != desc.g_rows or b.desc.mb != desc.mb:
        raise DescriptorMismatchError(
            f"{what}: right-hand side {b.desc.fingerprint()} does not conform to "
            f"factor {desc.fingerprint()}"
        )
    return desc


def _check_diagonal(F: DistMatrix, what: str) -> None:
    """Collectively raise SingularPivotError if any diagonal entry is exactly zero."""
    desc = F.desc
    grid = desc.grid
    zero_at = -1
    for li, i in enumerate(desc.my_rows):
        if desc.col_owner(int(i)) == grid.my_col and F.local[li, desc.local_col(int(i))] == 0:
            zero_at = int(i)
            break
    found = grid.transport.allreduce(grid.world_group, ReduceOp.MAX, zero_at)
    if found >= 0:
        raise SingularPivotError(f"{what}: zero diagonal entry at index {found}")


def _apply_pivots(x: DistVector, pivots: list[int]) -> None:
    values = x.local.data[:, np.newaxis]
    for k, p in enumerate(pivots):
        _exchange_rows(x.desc, values, k, p, slice(None), Tag.RHS_SWAP)


def dist_triangular_solve(F: DistMatrix, x: DistVector, spec: TriangleSpec) -> DistVector:
    """Solve ``op(T) y = x`` in place, ``T`` being the ``spec.uplo`` triangle of ``F``.

    Block substitution: the diagonal-block owner solves and broadcasts each
    block of the solution, then the ranks holding the matching block
    column (or block row, when transposed) compute the update for the
    remaining entries.
    """
    if spec.side is not Side.LEFT:
        raise DescriptorMismatchError("Distributed triangular solves take the left side only")
    desc = F.desc
    grid = desc.grid
    transport = grid.transport
    n, nb = desc.g_rows, desc.nb
    rows, cols = desc.my_rows, desc.my_cols
    xv = x.local.data
    lower = spec.uplo is Uplo.LOWER
    forward = lower != spec.transpose

    starts = list(range(0, n, nb))
    for k0 in starts if forward else reversed(starts):
        kb = min(nb, n - k0)
        end = k0 + kb
        pr, pc = desc.row_owner(k0), desc.col_owner(k0)
        root = grid.rank_of(pr, pc)

        payload = None
        if grid.rank == root:
            lr0 = desc.local_row(k0)
            block = DenseMatrix.from_array(xv[lr0 : lr0 + kb, np.newaxis])
            trsm(spec, 1.0, F.local.view(lr0, desc.local_col(k0), kb, kb), block)
            payload = encode_array(block.array)
        solved = np.ascontiguousarray(
            decode_array(transport.broadcast(grid.world_group, root, payload)).ravel()
        )
        if grid.my_row == pr:
            lr0 = desc.local_row(k0)
            xv[lr0 : lr0 + kb] = solved

        if forward:
            lo, hi = _first_at_or_after(rows, end), len(rows)
        else:
            lo, hi = 0, _first_at_or_after(rows, k0)

        if not spec.transpose:
            update_root = grid.rank_of(grid.my_row, pc)
            if grid.my_col == pc:
                contribution = DenseVector.zeros(hi - lo, x.precision)
                if hi > lo:
                    block_col = F.local.view(lo, desc.local_col(k0), hi - lo, kb)
                    gemv(1.0, block_col, DenseVector(solved), 0.0, contribution)
                transport.broadcast(grid.row_group, update_root, encode_array(contribution.data))
                update = contribution.data
            else:
                received = transport.broadcast(grid.row_group, update_root, None)
                update = decode_array(received).ravel()
        else:
            if forward:
                clo, chi = _first_at_or_after(cols, end), len(cols)
            else:
                clo, chi = 0, _first_at_or_after(cols, k0)
            padded = np.zeros(n, dtype=x.precision.dtype)
            if grid.my_row == pr and chi > clo:
                partial = DenseVector.zeros(chi - clo, x.precision)
                block_row = F.local.view(desc.local_row(k0), clo, kb, chi - clo)
                gemv(1.0, block_row, DenseVector(solved), 0.0, partial, transpose=True)
                padded[cols[clo:chi]] = partial.data
            full = transport.allreduce(grid.world_group, ReduceOp.SUM, padded)
            update = full[rows[lo:hi]]

        if hi > lo:
            axpy(-1.0, DenseVector(np.ascontiguousarray(update)), DenseVector(xv[lo:hi]))
    return x


def lu_solve_dist(f: LuFactors, b: DistVector) -> DistVector:
    """Solve ``A x = b`` from distributed LU factors; ``b`` is left untouched."""
    packed = f.packed
    assert isinstance(packed, DistMatrix)
    _check_solve_operands(packed, b, "lu_solve")
    _check_diagonal(packed, "lu_solve")
    x = b.copy()
    _apply_pivots(x, f.pivots)
    dist_triangular_solve(packed, x, UNIT_LOWER)
    dist_triangular_solve(packed, x, TriangleSpec(side=Side.LEFT, uplo=Uplo.UPPER))
    return x


def chol_solve_dist(f: CholFactor, b: DistVector) -> DistVector:
    """Solve ``A x = b`` from a distributed Cholesky factor; ``b`` is left untouched."""
    lower = f.lower
    assert isinstance(lower, DistMatrix)
    _check_solve_operands(lower, b, "chol_solve")
    _check_diagonal(lower, "chol_solve")
    x = b.copy()
    dist_triangular_solve(lower, x, TriangleSpec(side=Side.LEFT, uplo=Uplo.LOWER))
    dist_triangular_solve(
        lower, x, TriangleSpec(side=Side.LEFT, uplo=Uplo.LOWER, transpose=True)
    )
    return x

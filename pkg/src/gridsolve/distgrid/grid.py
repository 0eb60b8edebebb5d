"""Process mesh and block-cyclic index arithmetic.

Ranks are placed row-major on a ``p_rows x p_cols`` mesh. Global matrix
blocks of ``mb x nb`` are dealt round-robin over mesh rows and columns,
starting at mesh coordinate 0 in both dimensions.
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from gridsolve.core import Array
from gridsolve.errors import CollectiveMisuseError, DescriptorMismatchError
from gridsolve.transport import CommGroup, RankId, ReduceOp, Transport

logger = logging.getLogger(__name__)

DEFAULT_BLOCK = 64


def choose_grid(ranks: int) -> tuple[int, int]:
    """Most nearly square ``(p_rows, p_cols)`` with ``p_rows <= p_cols``."""
    if ranks < 1:
        raise ValueError("`ranks` must be at least 1")
    p_rows = max(d for d in range(1, math.isqrt(ranks) + 1) if ranks % d == 0)
    return p_rows, ranks // p_rows


@dataclass(frozen=True)
class ProcGrid:
    """One rank's view of the logical process mesh."""

    p_rows: int
    p_cols: int
    my_row: int
    my_col: int
    row_group: CommGroup
    col_group: CommGroup
    world_group: CommGroup
    transport: Transport = field(compare=False, repr=False)

    @classmethod
    def create(cls, transport: Transport, p_rows: int, p_cols: int) -> ProcGrid:
        """Build the mesh for ``transport``'s rank; no communication happens."""
        if p_rows < 1 or p_cols < 1:
            raise DescriptorMismatchError(f"Grid {p_rows}x{p_cols} must be at least 1x1")
        if p_rows * p_cols != transport.size:
            raise DescriptorMismatchError(
                f"Grid {p_rows}x{p_cols} does not cover {transport.size} launched ranks"
            )
        my_row, my_col = divmod(transport.rank, p_cols)
        row_members = [my_row * p_cols + c for c in range(p_cols)]
        col_members = [r * p_cols + my_col for r in range(p_rows)]
        return cls(
            p_rows=p_rows,
            p_cols=p_cols,
            my_row=my_row,
            my_col=my_col,
            row_group=transport.group(row_members),
            col_group=transport.group(col_members),
            world_group=transport.world,
            transport=transport,
        )

    @property
    def rank(self) -> RankId:
        return self.transport.rank

    @property
    def size(self) -> int:
        return self.p_rows * self.p_cols

    def rank_of(self, p_row: int, p_col: int) -> RankId:
        """Rank placed at mesh coordinate ``(p_row, p_col)``."""
        return p_row * self.p_cols + p_col

    def coords_of(self, rank: RankId) -> tuple[int, int]:
        p_row, p_col = divmod(rank, self.p_cols)
        return p_row, p_col

    def __str__(self) -> str:
        return f"{self.p_rows}x{self.p_cols}"


# =============================================================================
# Index arithmetic
# =============================================================================


def local_extent(g: int, blk: int, p: int, coord: int) -> int:
    """Number of the ``g`` global indices owned by mesh coordinate ``coord``."""
    if blk < 1:
        raise ValueError("`blk` must be at least 1")
    if not 0 <= coord < p:
        raise ValueError(f"`coord` must be in [0, {p}), got {coord}")
    full_blocks = g // blk
    extent = (full_blocks // p) * blk
    extra = full_blocks % p
    if coord < extra:
        extent += blk
    elif coord == extra:
        extent += g % blk
    return extent


def local_indices(g: int, blk: int, p: int, coord: int) -> Array:
    """Global indices owned by ``coord``, in local storage order."""
    local = np.arange(local_extent(g, blk, p, coord), dtype=np.int64)
    return ((local // blk) * p + coord) * blk + local % blk


def index_owner(i: int, blk: int, p: int) -> int:
    return (i // blk) % p


def index_to_local(i: int, blk: int, p: int) -> int:
    return (i // (blk * p)) * blk + i % blk


def index_to_global(li: int, blk: int, p: int, coord: int) -> int:
    return ((li // blk) * p + coord) * blk + li % blk


# =============================================================================
# Descriptor
# =============================================================================


@dataclass(frozen=True)
class BlockCyclicDesc:
    """Global shape and block sizes of a distributed operand on ``grid``.

    Build shared descriptors with :meth:`create`, which checks that every
    rank agrees on them.
    """

    g_rows: int
    g_cols: int
    mb: int
    nb: int
    grid: ProcGrid

    def __post_init__(self) -> None:
        if self.g_rows < 0 or self.g_cols < 0:
            raise DescriptorMismatchError(f"Negative global shape {self.g_rows}x{self.g_cols}")
        if self.mb < 1 or self.nb < 1:
            raise DescriptorMismatchError(f"Block sizes must be >= 1, got {self.mb}x{self.nb}")

    @classmethod
    def create(
        cls,
        grid: ProcGrid,
        g_rows: int,
        g_cols: int,
        mb: int = DEFAULT_BLOCK,
        nb: int | None = None,
    ) -> BlockCyclicDesc:
        """Collectively create a descriptor (``nb`` defaults to ``mb``).

        Raises:
            CollectiveMisuseError: If ranks passed different parameters.
        """
        desc = cls(g_rows, g_cols, mb, mb if nb is None else nb, grid)
        desc.check_agreement()
        return desc

    def check_agreement(self) -> None:
        """Collectively verify that every rank holds this same descriptor.

        Raises:
            CollectiveMisuseError: On any disagreement.
        """
        grid = self.grid
        digest = zlib.crc32(self.fingerprint().encode())
        folded = grid.transport.allreduce(
            grid.world_group, ReduceOp.MAX, np.array([digest, -digest], dtype=np.int64)
        )
        if int(folded[0]) != -int(folded[1]):
            raise CollectiveMisuseError(
                f"Ranks disagree on the descriptor; rank {grid.rank} has {self.fingerprint()}"
            )

    def fingerprint(self) -> str:
        return (
            f"{self.g_rows}x{self.g_cols}/{self.mb}x{self.nb}"
            f"@{self.grid.p_rows}x{self.grid.p_cols}"
        )

    def vector_desc(self, length: int | None = None) -> BlockCyclicDesc:
        """Descriptor of a vector conformal to this matrix's rows (or of ``length``)."""
        return BlockCyclicDesc(
            self.g_rows if length is None else length, 1, self.mb, self.nb, self.grid
        )

    @property
    def local_rows(self) -> int:
        return local_extent(self.g_rows, self.mb, self.grid.p_rows, self.grid.my_row)

    @property
    def local_cols(self) -> int:
        return local_extent(self.g_cols, self.nb, self.grid.p_cols, self.grid.my_col)

    def rows_of(self, p_row: int) -> Array:
        return local_indices(self.g_rows, self.mb, self.grid.p_rows, p_row)

    def cols_of(self, p_col: int) -> Array:
        return local_indices(self.g_cols, self.nb, self.grid.p_cols, p_col)

    @property
    def my_rows(self) -> Array:
        """Global row indices held locally, in storage order."""
        return self.rows_of(self.grid.my_row)

    @property
    def my_cols(self) -> Array:
        return self.cols_of(self.grid.my_col)

    def row_owner(self, i: int) -> int:
        return index_owner(i, self.mb, self.grid.p_rows)

    def col_owner(self, j: int) -> int:
        return index_owner(j, self.nb, self.grid.p_cols)

    def local_row(self, i: int) -> int:
        """Local row of global row ``i`` on its owning mesh row."""
        return index_to_local(i, self.mb, self.grid.p_rows)

    def local_col(self, j: int) -> int:
        return index_to_local(j, self.nb, self.grid.p_cols)


def owner(i: int, j: int, desc: BlockCyclicDesc) -> tuple[int, int]:
    """Mesh coordinate owning global entry ``(i, j)``."""
    if not (0 <= i < desc.g_rows and 0 <= j < desc.g_cols):
        raise DescriptorMismatchError(f"({i}, {j}) outside {desc.g_rows}x{desc.g_cols}")
    return desc.row_owner(i), desc.col_owner(j)


def global_to_local(i: int, j: int, desc: BlockCyclicDesc) -> tuple[int, int]:
    """Local position of ``(i, j)`` on the calling rank, which must own it."""
    pr, pc = owner(i, j, desc)
    grid = desc.grid
    if (pr, pc) != (grid.my_row, grid.my_col):
        raise DescriptorMismatchError(
            f"({i}, {j}) is owned by ({pr}, {pc}), not by ({grid.my_row}, {grid.my_col})"
        )
    return desc.local_row(i), desc.local_col(j)


def local_to_global(li: int, lj: int, desc: BlockCyclicDesc) -> tuple[int, int]:
    """Global position of the calling rank's local entry ``(li, lj)``."""
    if not (0 <= li < desc.local_rows and 0 <= lj < desc.local_cols):
        raise DescriptorMismatchError(
            f"Local ({li}, {lj}) outside {desc.local_rows}x{desc.local_cols}"
        )
    grid = desc.grid
    return (
        index_to_global(li, desc.mb, grid.p_rows, grid.my_row),
        index_to_global(lj, desc.nb, grid.p_cols, grid.my_col),
    )

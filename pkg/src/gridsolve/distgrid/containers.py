"""Distributed matrix and vector containers, scatter and gather."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from gridsolve.core import Array, DenseMatrix, DenseVector, Precision
from gridsolve.distgrid.grid import BlockCyclicDesc, ProcGrid, local_extent
from gridsolve.errors import DescriptorMismatchError, DimensionMismatchError
from gridsolve.transport import RankId
from gridsolve.transport.codec import decode_array, encode_array

logger = logging.getLogger(__name__)


class Tag(IntEnum):
    """Point-to-point tags used by distributed operations."""

    SCATTER = 101
    GATHER = 102
    SCATTER_VECTOR = 103
    GATHER_VECTOR = 104
    ROW_SWAP = 201
    PIVOT_ROW = 202
    RHS_SWAP = 203


@dataclass
class DistMatrix:
    """Descriptor plus this rank's block-cyclic share of a matrix."""

    desc: BlockCyclicDesc
    local: DenseMatrix

    def __post_init__(self) -> None:
        expected = (self.desc.local_rows, self.desc.local_cols)
        if self.local.shape != expected:
            raise DescriptorMismatchError(
                f"Local part is {self.local.rows}x{self.local.cols}, "
                f"descriptor {self.desc.fingerprint()} expects {expected[0]}x{expected[1]}"
            )

    @classmethod
    def zeros(cls, desc: BlockCyclicDesc, precision: Precision = Precision.F64) -> DistMatrix:
        return cls(desc, DenseMatrix.zeros(desc.local_rows, desc.local_cols, precision))

    @property
    def grid(self) -> ProcGrid:
        return self.desc.grid

    @property
    def precision(self) -> Precision:
        return self.local.precision

    @property
    def nbytes(self) -> int:
        """Bytes of local storage on this rank."""
        return self.local.nbytes

    def copy(self) -> DistMatrix:
        return DistMatrix(self.desc, self.local.copy())


@dataclass
class DistVector:
    """Vector distributed over mesh rows and replicated across mesh columns.

    Every rank of a mesh row holds the same ``local`` entries: the global
    rows ``desc.my_rows``.
    """

    desc: BlockCyclicDesc
    local: DenseVector

    def __post_init__(self) -> None:
        if self.desc.g_cols != 1:
            raise DescriptorMismatchError(
                f"Vector descriptor must have one column, got {self.desc.g_cols}"
            )
        grid = self.desc.grid
        expected = local_extent(self.desc.g_rows, self.desc.mb, grid.p_rows, grid.my_row)
        if self.local.len != expected:
            raise DescriptorMismatchError(
                f"Local vector has {self.local.len} entries, descriptor expects {expected}"
            )

    @classmethod
    def zeros(cls, desc: BlockCyclicDesc, precision: Precision = Precision.F64) -> DistVector:
        grid = desc.grid
        n_local = local_extent(desc.g_rows, desc.mb, grid.p_rows, grid.my_row)
        return cls(desc, DenseVector.zeros(n_local, precision))

    @classmethod
    def from_global(
        cls,
        values: Array,
        desc: BlockCyclicDesc,
        precision: Precision | None = None,
    ) -> DistVector:
        """Pick this rank's entries out of a full vector every rank already holds."""
        if values.shape != (desc.g_rows,):
            raise DimensionMismatchError(
                f"Global vector has shape {values.shape}, descriptor expects ({desc.g_rows},)"
            )
        return cls(desc, DenseVector.from_array(values[desc.my_rows], precision))

    @property
    def grid(self) -> ProcGrid:
        return self.desc.grid

    @property
    def precision(self) -> Precision:
        return self.local.precision

    @property
    def g_len(self) -> int:
        return self.desc.g_rows

    def copy(self) -> DistVector:
        return DistVector(self.desc, self.local.copy())

    def zeros_like(self) -> DistVector:
        return DistVector(self.desc, DenseVector.zeros(self.local.len, self.precision))


# =============================================================================
# Scatter / gather
# =============================================================================


def scatter(A: DenseMatrix | None, desc: BlockCyclicDesc, root: RankId = 0) -> DistMatrix:
    """Distribute ``A`` (read on ``root`` only) according to ``desc``.

    Collective over the whole mesh.
    """
    grid = desc.grid
    transport = grid.transport
    if grid.rank != root:
        block = decode_array(transport.recv(root, Tag.SCATTER))
        return DistMatrix(desc, DenseMatrix.from_array(block))

    if A is None or A.shape != (desc.g_rows, desc.g_cols):
        shape = None if A is None else A.shape
        raise DimensionMismatchError(
            f"scatter: root matrix {shape} does not match descriptor {desc.fingerprint()}"
        )
    full = A.array
    mine: DistMatrix | None = None
    for rank in range(grid.size):
        pr, pc = grid.coords_of(rank)
        block = full[np.ix_(desc.rows_of(pr), desc.cols_of(pc))]
        if rank == root:
            mine = DistMatrix(desc, DenseMatrix.from_array(block, A.precision))
        else:
            transport.send(rank, Tag.SCATTER, encode_array(block))
    assert mine is not None
    logger.debug("scattered %s from rank %d", desc.fingerprint(), root)
    return mine


def gather(A: DistMatrix, root: RankId = 0) -> DenseMatrix | None:
    """Assemble the global matrix on ``root``; other ranks get ``None``."""
    desc = A.desc
    grid = desc.grid
    transport = grid.transport
    if grid.rank != root:
        transport.send(root, Tag.GATHER, encode_array(A.local.array))
        return None

    out = DenseMatrix.zeros(desc.g_rows, desc.g_cols, A.precision)
    for rank in range(grid.size):
        pr, pc = grid.coords_of(rank)
        block = A.local.array if rank == root else decode_array(transport.recv(rank, Tag.GATHER))
        out.array[np.ix_(desc.rows_of(pr), desc.cols_of(pc))] = block
    return out


def scatter_vector(
    x: DenseVector | None, desc: BlockCyclicDesc, root: RankId = 0
) -> DistVector:
    """Distribute ``x`` (read on ``root`` only) over mesh rows, replicated across columns."""
    grid = desc.grid
    transport = grid.transport
    if grid.rank != root:
        piece = decode_array(transport.recv(root, Tag.SCATTER_VECTOR)).ravel()
        return DistVector(desc, DenseVector.from_array(piece))

    if x is None or x.len != desc.g_rows:
        length = None if x is None else x.len
        raise DimensionMismatchError(
            f"scatter_vector: root vector of length {length}, descriptor expects {desc.g_rows}"
        )
    mine: DistVector | None = None
    for rank in range(grid.size):
        pr, _ = grid.coords_of(rank)
        piece = x.data[desc.rows_of(pr)]
        if rank == root:
            mine = DistVector(desc, DenseVector(piece))
        else:
            transport.send(rank, Tag.SCATTER_VECTOR, encode_array(piece))
    assert mine is not None
    return mine


def gather_vector(x: DistVector, root: RankId = 0) -> DenseVector | None:
    """Assemble ``x`` on ``root`` from mesh column 0; other ranks get ``None``."""
    desc = x.desc
    grid = desc.grid
    transport = grid.transport
    senders = [grid.rank_of(pr, 0) for pr in range(grid.p_rows)]
    if grid.rank != root:
        if grid.rank in senders:
            transport.send(root, Tag.GATHER_VECTOR, encode_array(x.local.data))
        return None

    out = DenseVector.zeros(desc.g_rows, x.precision)
    for rank in senders:
        pr, _ = grid.coords_of(rank)
        if rank == root:
            piece = x.local.data
        else:
            piece = decode_array(transport.recv(rank, Tag.GATHER_VECTOR)).ravel()
        out.data[desc.rows_of(pr)] = piece
    return out

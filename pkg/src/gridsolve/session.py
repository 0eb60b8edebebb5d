"""Per-rank session facade used by rank programs."""

from __future__ import annotations

from contextlib import ExitStack
from typing import TYPE_CHECKING

from gridsolve.backend import Backend, current_backend, use_backend
from gridsolve.distgrid import (
    DEFAULT_BLOCK,
    BlockCyclicDesc,
    ProcGrid,
    choose_grid,
    gather,
    gather_vector,
    scatter,
    scatter_vector,
)
from gridsolve.transport import ReduceOp, Transport

if TYPE_CHECKING:
    from gridsolve.core import DenseMatrix, DenseVector
    from gridsolve.distgrid import DistMatrix, DistVector


class RankSession:
    """Everything one rank needs to take part in a distributed solve.

    The process grid is built on first use and the backend is installed for
    the lifetime of the ``with`` block, so every kernel the rank runs inside
    it is counted by that backend.

    Args:
        transport: This rank's transport handle.
        grid_shape: ``(p_rows, p_cols)``; the most nearly square layout when omitted.
        backend: Backend name or instance installed on entry.
        nb: Square block size for distributed matrices.
        root: Rank that owns host-side inputs and outputs.

    Example:
        >>> def program(rank, transport):
        ...     with RankSession(transport, backend="staged") as session:
        ...         A_d = session.distribute_matrix(A if session.is_root else None, n)
        ...         ...
    """

    def __init__(
        self,
        transport: Transport,
        *,
        grid_shape: tuple[int, int] | None = None,
        backend: Backend | str = "direct",
        nb: int = DEFAULT_BLOCK,
        root: int = 0,
    ) -> None:
        self.transport = transport
        self.nb = nb
        self.root = root
        self._grid_shape = grid_shape
        self._backend_spec = backend
        self._backend: Backend | None = None
        self._grid: ProcGrid | None = None
        self._stack = ExitStack()

    @property
    def grid(self) -> ProcGrid:
        """Process mesh for this rank (created lazily)."""
        if self._grid is None:
            shape = self._grid_shape or choose_grid(self.transport.size)
            self._grid = ProcGrid.create(self.transport, *shape)
        return self._grid

    @property
    def backend(self) -> Backend:
        return self._backend if self._backend is not None else current_backend()

    @property
    def is_root(self) -> bool:
        return self.transport.rank == self.root

    def descriptor(self, n: int) -> BlockCyclicDesc:
        """Collectively create the ``n x n`` descriptor with this session's block size."""
        return BlockCyclicDesc.create(self.grid, n, n, self.nb)

    def distribute_matrix(self, A: DenseMatrix | None, n: int) -> DistMatrix:
        """Scatter ``A`` from the root; other ranks pass ``None``."""
        return scatter(A, self.descriptor(n), self.root)

    def distribute_vector(self, b: DenseVector | None, desc: BlockCyclicDesc) -> DistVector:
        return scatter_vector(b, desc.vector_desc(), self.root)

    def collect_matrix(self, A: DistMatrix) -> DenseMatrix | None:
        return gather(A, self.root)

    def collect_vector(self, x: DistVector) -> DenseVector | None:
        return gather_vector(x, self.root)

    def total_flops(self) -> int:
        """Flops counted on every rank since entry, summed over the mesh (collective)."""
        total: int = self.transport.allreduce(
            self.grid.world_group, ReduceOp.SUM, self.backend.flops.accumulated
        )
        return total

    def max_over_ranks(self, value: float) -> float:
        result: float = self.transport.allreduce(self.grid.world_group, ReduceOp.MAX, value)
        return result

    def barrier(self) -> None:
        self.transport.barrier(self.grid.world_group)

    def __enter__(self) -> RankSession:
        self._backend = self._stack.enter_context(use_backend(self._backend_spec))
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: object,
    ) -> None:
        self._stack.close()
        self._backend = None

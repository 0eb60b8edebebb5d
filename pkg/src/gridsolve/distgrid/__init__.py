"""Data distribution level: process mesh, block-cyclic containers and distributed BLAS."""

from gridsolve.distgrid.containers import (
    DistMatrix,
    DistVector,
    Tag,
    gather,
    gather_vector,
    scatter,
    scatter_vector,
)
from gridsolve.distgrid.grid import (
    DEFAULT_BLOCK,
    BlockCyclicDesc,
    ProcGrid,
    choose_grid,
    global_to_local,
    local_extent,
    local_indices,
    local_to_global,
    owner,
)
from gridsolve.distgrid.ops import (
    assemble,
    dist_axpy,
    dist_copy,
    dist_dot,
    dist_matvec,
    dist_nrm2,
    dist_scal,
    dist_transpose_matvec,
)

__all__ = [
    "DEFAULT_BLOCK",
    "BlockCyclicDesc",
    "DistMatrix",
    "DistVector",
    "ProcGrid",
    "Tag",
    "assemble",
    "choose_grid",
    "dist_axpy",
    "dist_copy",
    "dist_dot",
    "dist_matvec",
    "dist_nrm2",
    "dist_scal",
    "dist_transpose_matvec",
    "gather",
    "gather_vector",
    "global_to_local",
    "local_extent",
    "local_indices",
    "local_to_global",
    "owner",
    "scatter",
    "scatter_vector",
]

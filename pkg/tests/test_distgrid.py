"""Tests for the process mesh, block-cyclic descriptors and distributed BLAS."""

import numpy as np
import pytest

from gridsolve.core import DenseMatrix, DenseVector
from gridsolve.distgrid import (
    BlockCyclicDesc,
    DistVector,
    ProcGrid,
    choose_grid,
    dist_axpy,
    dist_dot,
    dist_matvec,
    dist_nrm2,
    dist_transpose_matvec,
    gather,
    gather_vector,
    global_to_local,
    local_extent,
    local_indices,
    local_to_global,
    owner,
    scatter,
    scatter_vector,
)
from gridsolve.errors import CollectiveMisuseError, DescriptorMismatchError

GRIDS = [(1, 1), (1, 2), (2, 1), (2, 2), (2, 4), (2, 3)]


class TestIndexArithmetic:
    """Tests for the pure index functions."""

    def test_local_extent_example(self):
        """Ten indices in blocks of three over two coordinates split 6 / 4."""
        assert local_extent(10, 3, 2, 0) == 6
        assert local_extent(10, 3, 2, 1) == 4
        assert local_indices(10, 3, 2, 0).tolist() == [0, 1, 2, 6, 7, 8]
        assert local_indices(10, 3, 2, 1).tolist() == [3, 4, 5, 9]

    @pytest.mark.parametrize("g", [0, 1, 7, 64, 100])
    @pytest.mark.parametrize("blk", [1, 3, 16])
    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_extents_partition_indices(self, g, blk, p):
        """Every global index is owned by exactly one coordinate."""
        owned = np.concatenate([local_indices(g, blk, p, c) for c in range(p)])
        assert sorted(owned.tolist()) == list(range(g))
        assert sum(local_extent(g, blk, p, c) for c in range(p)) == g

    def test_block_bigger_than_matrix(self):
        """Coordinate 0 owns everything when one block covers the matrix."""
        assert local_extent(5, 64, 3, 0) == 5
        assert local_extent(5, 64, 3, 2) == 0

    def test_bad_coordinate(self):
        """Coordinates outside the mesh are rejected."""
        with pytest.raises(ValueError):
            local_extent(10, 2, 2, 2)

    def test_choose_grid(self):
        """Meshes are as square as possible with rows <= cols."""
        assert choose_grid(1) == (1, 1)
        assert choose_grid(4) == (2, 2)
        assert choose_grid(6) == (2, 3)
        assert choose_grid(7) == (1, 7)


class TestDescriptor:
    """Tests for ProcGrid and BlockCyclicDesc."""

    def test_grid_must_cover_launch(self, run_ranks):
        """A mesh that does not match the launched ranks is a descriptor error."""

        def program(rank, transport):
            ProcGrid.create(transport, 2, 2)

        with pytest.raises(DescriptorMismatchError, match="does not cover"):
            run_ranks(2, program)

    def test_row_major_placement(self, run_ranks):
        """Ranks are laid out row-major with matching row and column groups."""

        def program(rank, transport):
            grid = ProcGrid.create(transport, 2, 3)
            return grid.my_row, grid.my_col, grid.row_group.members, grid.col_group.members

        results = run_ranks(6, program)
        assert results[4] == (1, 1, (3, 4, 5), (1, 4))
        assert results[2] == (0, 2, (0, 1, 2), (2, 5))

    def test_disagreement_detected(self, run_ranks):
        """Ranks that build different descriptors fail collectively."""

        def program(rank, transport):
            grid = ProcGrid.create(transport, 1, 2)
            BlockCyclicDesc.create(grid, 8, 8, mb=2 + rank)

        with pytest.raises(CollectiveMisuseError, match="disagree"):
            run_ranks(2, program)

    def test_owner_and_local_positions(self, run_ranks):
        """owner, global_to_local and local_to_global agree with each other."""

        def program(rank, transport):
            grid = ProcGrid.create(transport, 2, 2)
            desc = BlockCyclicDesc.create(grid, 7, 5, mb=2, nb=2)
            pairs = []
            for li in range(desc.local_rows):
                for lj in range(desc.local_cols):
                    i, j = local_to_global(li, lj, desc)
                    assert owner(i, j, desc) == (grid.my_row, grid.my_col)
                    pairs.append((i, j))
                    assert global_to_local(i, j, desc) == (li, lj)
            return pairs

        owned = [pair for pairs in run_ranks(4, program) for pair in pairs]
        assert sorted(owned) == [(i, j) for i in range(7) for j in range(5)]

    def test_foreign_entry_rejected(self, run_ranks):
        """Asking for the local position of another rank's entry fails."""

        def program(rank, transport):
            grid = ProcGrid.create(transport, 1, 2)
            desc = BlockCyclicDesc.create(grid, 4, 4, mb=1)
            if rank == 0:
                global_to_local(0, 1, desc)

        with pytest.raises(DescriptorMismatchError, match="owned by"):
            run_ranks(2, program)

    def test_negative_shape(self, run_ranks):
        """Negative shapes never make a descriptor."""

        def program(rank, transport):
            BlockCyclicDesc(-1, 2, 1, 1, ProcGrid.create(transport, 1, 1))

        with pytest.raises(DescriptorMismatchError):
            run_ranks(1, program)


class TestScatterGather:
    """Tests for distributing and collecting operands."""

    @pytest.mark.parametrize("shape", GRIDS)
    @pytest.mark.parametrize("nb", [1, 3, 64])
    def test_matrix_round_trip(self, run_ranks, rng, shape, nb):
        """gather(scatter(A)) reproduces A bit for bit."""
        A = rng.standard_normal((11, 9))
        ranks = shape[0] * shape[1]

        def program(rank, transport):
            grid = ProcGrid.create(transport, *shape)
            desc = BlockCyclicDesc.create(grid, 11, 9, mb=nb)
            dist = scatter(DenseMatrix.from_array(A) if rank == 0 else None, desc)
            assert dist.local.shape == (desc.local_rows, desc.local_cols)
            out = gather(dist)
            return None if out is None else out.to_numpy()

        results = run_ranks(ranks, program)
        np.testing.assert_array_equal(results[0], A)
        assert all(r is None for r in results[1:])

    @pytest.mark.parametrize("shape", GRIDS)
    def test_vector_round_trip_and_replication(self, run_ranks, rng, shape):
        """Vectors are replicated across mesh columns and gather back exactly."""
        x = rng.standard_normal(10)
        ranks = shape[0] * shape[1]

        def program(rank, transport):
            grid = ProcGrid.create(transport, *shape)
            desc = BlockCyclicDesc.create(grid, 10, 1, mb=3)
            dist = scatter_vector(DenseVector.from_array(x) if rank == 0 else None, desc)
            np.testing.assert_array_equal(dist.local.data, x[desc.my_rows])
            out = gather_vector(dist)
            return None if out is None else out.to_numpy()

        np.testing.assert_array_equal(run_ranks(ranks, program)[0], x)

    def test_root_shape_mismatch(self, run_ranks):
        """The root must hold a matrix of the descriptor's shape."""

        def program(rank, transport):
            grid = ProcGrid.create(transport, 1, 1)
            desc = BlockCyclicDesc.create(grid, 3, 3)
            scatter(DenseMatrix.zeros(2, 2), desc)

        with pytest.raises(Exception, match="does not match"):
            run_ranks(1, program)


class TestDistributedBlas:
    """Tests for distributed matvec and vector reductions."""

    @pytest.mark.parametrize("shape", GRIDS)
    def test_matvec_matches_numpy(self, run_ranks, rng, shape):
        """A @ x and A.T @ x agree with numpy on every mesh."""
        n = 13
        A = rng.standard_normal((n, n))
        x = rng.standard_normal(n)
        ranks = shape[0] * shape[1]

        def program(rank, transport):
            grid = ProcGrid.create(transport, *shape)
            desc = BlockCyclicDesc.create(grid, n, n, mb=4)
            A_d = scatter(DenseMatrix.from_array(A) if rank == 0 else None, desc)
            vdesc = desc.vector_desc()
            x_d = DistVector.from_global(x, vdesc)
            y = dist_matvec(A_d, x_d, DistVector.zeros(vdesc))
            z = dist_transpose_matvec(A_d, x_d, DistVector.zeros(vdesc))
            return y.local.to_numpy(), z.local.to_numpy(), desc.my_rows

        for y, z, rows in run_ranks(ranks, program):
            np.testing.assert_allclose(y, (A @ x)[rows], rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(z, (A.T @ x)[rows], rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("shape", GRIDS)
    def test_dot_identical_on_every_rank(self, run_ranks, rng, shape):
        """Inner products count replicated entries once and agree bitwise."""
        x = rng.standard_normal(17)
        y = rng.standard_normal(17)
        ranks = shape[0] * shape[1]

        def program(rank, transport):
            grid = ProcGrid.create(transport, *shape)
            vdesc = BlockCyclicDesc.create(grid, 17, 1, mb=2)
            x_d = DistVector.from_global(x, vdesc)
            y_d = DistVector.from_global(y, vdesc)
            dist_axpy(2.0, x_d, y_d)
            return dist_dot(x_d, y_d), dist_nrm2(x_d)

        results = run_ranks(ranks, program)
        assert len(set(results)) == 1
        dot, norm = results[0]
        assert dot == pytest.approx(float(x @ (2.0 * x + y)), rel=1e-12)
        assert norm == pytest.approx(float(np.linalg.norm(x)), rel=1e-12)

    def test_nonconformal_vectors(self, run_ranks):
        """Vectors with different block sizes cannot be combined."""

        def program(rank, transport):
            grid = ProcGrid.create(transport, 1, 1)
            a = DistVector.zeros(BlockCyclicDesc(4, 1, 2, 2, grid))
            b = DistVector.zeros(BlockCyclicDesc(4, 1, 3, 3, grid))
            dist_dot(a, b)

        with pytest.raises(DescriptorMismatchError, match="do not conform"):
            run_ranks(1, program)

"""Tests for kernel backends and the staged offload flow."""

import numpy as np
import pytest

from gridsolve import kernels
from gridsolve.backend import (
    DirectBackend,
    HostBuffer,
    KernelCall,
    LaunchLayout,
    StagedBackend,
    current_backend,
    select_backend,
    use_backend,
)
from gridsolve.core import DenseMatrix, DenseVector
from gridsolve.errors import DimensionMismatchError, GridSolveIOError
from gridsolve.kernels import TriangleSpec, Uplo


def run_all_kernels(rng, n):
    """Run every kernel on fixed operands and return all outputs."""
    a = rng.random((n, n)) + n * np.eye(n)
    b = rng.random((n, n))
    x, y = rng.random(n), rng.random(n)
    out = {}

    v = DenseVector.from_array(y)
    out["axpy"] = kernels.axpy(0.7, DenseVector.from_array(x), v).to_numpy()
    out["dot"] = kernels.dot(DenseVector.from_array(x), DenseVector.from_array(y))
    out["nrm2"] = kernels.nrm2(DenseVector.from_array(x))
    out["scal"] = kernels.scal(-1.3, DenseVector.from_array(x)).to_numpy()
    out["rscal"] = kernels.rscal(3.0, DenseVector.from_array(x)).to_numpy()
    out["gemv"] = kernels.gemv(
        1.1, DenseMatrix.from_array(a), DenseVector.from_array(x), 0.4, DenseVector.from_array(y)
    ).to_numpy()
    out["gemm"] = kernels.gemm(
        1.0, DenseMatrix.from_array(a), DenseMatrix.from_array(b), 0.0, DenseMatrix.zeros(n, n),
        transB=True,
    ).to_numpy()
    out["syrk"] = kernels.syrk(
        -1.0, DenseMatrix.from_array(b), 1.0, DenseMatrix.from_array(a)
    ).to_numpy()
    out["ger"] = kernels.ger(
        2.0, DenseVector.from_array(x), DenseVector.from_array(y), DenseMatrix.from_array(b)
    ).to_numpy()
    out["trsm"] = kernels.trsm(
        TriangleSpec(uplo=Uplo.UPPER), 1.0, DenseMatrix.from_array(a), DenseMatrix.from_array(b)
    ).to_numpy()
    lu = DenseMatrix.from_array(a)
    out["getf2_pivots"] = kernels.getf2(lu)
    out["getf2"] = lu.to_numpy()
    spd = DenseMatrix.from_array(b.T @ b + n * np.eye(n))
    out["potf2"] = kernels.potf2(spd).to_numpy()
    pivots = out["getf2_pivots"]
    out["laswp"] = kernels.laswp(DenseMatrix.from_array(b), pivots, 0, n - 1).to_numpy()
    return out


class TestSelection:
    """Tests for backend selection."""

    def test_select_by_name(self):
        """Names map to fresh handles."""
        assert isinstance(select_backend("direct"), DirectBackend)
        assert isinstance(select_backend("staged"), StagedBackend)
        assert select_backend("staged") is not select_backend("staged")

    def test_unknown_name(self):
        """Unknown names raise ValueError."""
        with pytest.raises(ValueError, match="Unknown backend"):
            select_backend("cuda")

    def test_use_backend_nests(self, fresh_backend):
        """use_backend installs a backend for the block and restores the previous one."""
        with use_backend("staged") as staged:
            assert current_backend() is staged
            kernels.dot(DenseVector.from_array([1.0]), DenseVector.from_array([2.0]))
        assert current_backend() is fresh_backend
        assert staged.flops.accumulated == 2
        assert fresh_backend.flops.accumulated == 0


class TestStagedExecution:
    """Tests for the staged backend."""

    def test_gemm_identity_copy_counts(self):
        """gemm(I, B) with beta = 0 copies A and B in and C out."""
        B = DenseMatrix.from_array(np.arange(9.0).reshape(3, 3))
        with use_backend("staged") as staged:
            C = kernels.gemm(1.0, DenseMatrix.identity(3), B, 0.0, DenseMatrix.zeros(3, 3))
        np.testing.assert_array_equal(C.to_numpy(), B.to_numpy())
        log = staged.transfers
        assert (log.h2d_copies, log.d2h_copies) == (2, 1)
        assert log.allocations == log.frees == 3
        assert log.h2d_bytes == 2 * 9 * 8

    def test_axpy_zero_alpha(self):
        """axpy with alpha = 0 leaves y and stages two inputs and one output."""
        y = DenseVector.from_array([1.0, 2.0])
        with use_backend("staged") as staged:
            kernels.axpy(0.0, DenseVector.from_array([7.0, 7.0]), y)
        np.testing.assert_array_equal(y.data, [1.0, 2.0])
        assert (staged.transfers.h2d_copies, staged.transfers.d2h_copies) == (2, 1)
        assert staged.transfers.leaked == 0

    def test_direct_log_empty(self, fresh_backend):
        """The direct backend never records transfers."""
        kernels.scal(2.0, DenseVector.from_array([1.0]))
        assert fresh_backend.transfers.is_empty

    @pytest.mark.parametrize("n", [1, 17, 32, 128])
    def test_bitwise_equivalence(self, n):
        """Staged and direct execution give identical bits for every kernel."""
        with use_backend("direct"):
            direct = run_all_kernels(np.random.default_rng(n), n)
        with use_backend("staged") as staged:
            staged_out = run_all_kernels(np.random.default_rng(n), n)
        assert direct.keys() == staged_out.keys()
        for name, value in direct.items():
            if isinstance(value, np.ndarray):
                assert np.array_equal(value, staged_out[name]), name
            else:
                assert value == staged_out[name], name
        assert staged.transfers.leaked == 0

    def test_views_copy_back_only_their_window(self):
        """Staging a view leaves the rest of the parent untouched."""
        parent = DenseMatrix.from_array(np.full((4, 4), 5.0))
        block = parent.view(1, 1, 2, 2)
        with use_backend("staged"):
            kernels.gemm(1.0, DenseMatrix.identity(2), DenseMatrix.identity(2), 0.0, block)
        expected = np.full((4, 4), 5.0)
        expected[1:3, 1:3] = np.eye(2)
        np.testing.assert_array_equal(parent.to_numpy(), expected)

    def test_stage_execute_log(self):
        """stage_execute reports one H->D per input and one D->H per output."""
        staged = StagedBackend()
        a, out = np.ones(4), np.zeros(4)

        def body(ops):
            ops["out"][...] = 2 * ops["a"]

        call = KernelCall(name="double", body=body, inputs=(), outputs=(), elements=4)
        log = staged.stage_execute(
            call, [HostBuffer("a", a)], [HostBuffer("out", out)], LaunchLayout.for_elements(4)
        )
        np.testing.assert_array_equal(out, [2, 2, 2, 2])
        assert (log.h2d_copies, log.d2h_copies, log.allocations, log.frees) == (1, 1, 2, 2)

    def test_layout_too_small_frees_buffers(self):
        """An undersized launch layout fails without leaking device memory."""
        staged = StagedBackend()
        call = KernelCall(name="noop", body=lambda ops: None, inputs=(), outputs=(), elements=1000)
        with pytest.raises(DimensionMismatchError):
            staged.stage_execute(
                call,
                [HostBuffer("a", np.zeros(1000))],
                [],
                LaunchLayout(blocks=1, threads_per_block=8),
            )
        assert staged.transfers.leaked == 0
        assert staged.transfers.allocations == 1

    def test_kernel_error_frees_buffers(self):
        """Errors raised by a kernel body still release device buffers."""
        with use_backend("staged") as staged, pytest.raises(Exception, match="pivot"):
            kernels.getf2(DenseMatrix.zeros(2, 2))
        assert staged.transfers.leaked == 0
        assert staged.flops.accumulated == 0

    def test_allocation_limit(self):
        """Exceeding the device memory cap is an I/O-class failure."""
        with use_backend(StagedBackend(max_device_bytes=64)) as staged, pytest.raises(
            GridSolveIOError
        ):
            kernels.scal(2.0, DenseVector.zeros(100))
        assert staged.transfers.leaked == 0


class TestLaunchLayout:
    """Tests for LaunchLayout."""

    def test_covers_elements(self):
        """for_elements picks the smallest covering layout."""
        layout = LaunchLayout.for_elements(1000, threads_per_block=256)
        assert layout.blocks == 4
        assert layout.covers(1000)
        assert not layout.covers(1025)

    def test_empty_problem_still_one_block(self):
        """Layouts always have at least one block."""
        assert LaunchLayout.for_elements(0).blocks == 1

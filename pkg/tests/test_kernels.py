"""Tests for the local BLAS-subset kernels."""

import numpy as np
import pytest

from gridsolve import kernels
from gridsolve.core import DenseMatrix, DenseVector, Precision
from gridsolve.errors import DimensionMismatchError, NotSpdError, SingularPivotError
from gridsolve.kernels import Side, TriangleSpec, Uplo

EPS = np.finfo(np.float64).eps


def vec(values):
    return DenseVector.from_array(np.asarray(values, dtype=np.float64))


def mat(values):
    return DenseMatrix.from_array(np.asarray(values, dtype=np.float64))


class TestLevel1:
    """Tests for axpy, dot, nrm2 and scal."""

    @pytest.mark.parametrize(
        ("alpha", "x", "y", "expected"),
        [
            (0.0, [7, 7], [1, 2], [1, 2]),
            (1.0, [1, 2, 3], [0, 0, 0], [1, 2, 3]),
            (2.0, [1, -1, 3], [0, 5, 1], [2, 3, 7]),
        ],
    )
    def test_axpy(self, alpha, x, y, expected, fresh_backend):
        """y <- alpha x + y, counting 2n flops."""
        out = kernels.axpy(alpha, vec(x), vec(y))
        np.testing.assert_array_equal(out.data, expected)
        assert fresh_backend.flops.accumulated == 2 * len(x)

    def test_axpy_length_mismatch(self):
        """Vectors of different length are rejected."""
        with pytest.raises(DimensionMismatchError):
            kernels.axpy(1.0, vec([1, 2]), vec([1, 2, 3]))

    def test_mixed_precision_rejected(self):
        """Operands must share one precision."""
        x = DenseVector.from_array([1.0, 2.0], Precision.F32)
        with pytest.raises(DimensionMismatchError):
            kernels.dot(x, vec([1, 2]))

    def test_dot(self):
        """Inner products of reference vectors."""
        assert kernels.dot(vec([1, 0]), vec([0, 1])) == 0.0
        assert kernels.dot(vec([1]), vec([1])) == 1.0
        assert kernels.dot(vec([1, 2, 3]), vec([4, 5, 6])) == 32.0

    def test_nrm2(self):
        """Euclidean norms of reference vectors."""
        assert kernels.nrm2(vec([0, 0, 0])) == 0.0
        assert kernels.nrm2(vec([3, 4])) == 5.0
        assert kernels.nrm2(vec([-2.5])) == 2.5

    def test_scal(self):
        """x <- alpha x in place."""
        x = vec([1, -2])
        assert kernels.scal(3.0, x) is x
        np.testing.assert_array_equal(x.data, [3, -6])

    def test_rscal_divides(self):
        """rscal divides rather than multiplying by a reciprocal."""
        x = vec([3.0, 6.0])
        kernels.rscal(3.0, x)
        np.testing.assert_array_equal(x.data, [1.0, 2.0])
        with pytest.raises(SingularPivotError):
            kernels.rscal(0.0, x)


class TestGemv:
    """Tests for gemv."""

    def test_identity(self):
        """I x = x."""
        y = kernels.gemv(1.0, DenseMatrix.identity(3), vec([1, 2, 3]), 0.0, vec([9, 9, 9]))
        np.testing.assert_array_equal(y.data, [1, 2, 3])

    def test_alpha_zero_beta_one(self):
        """alpha = 0, beta = 1 leaves y unchanged."""
        y = kernels.gemv(0.0, mat([[1, 2], [3, 4]]), vec([5, 5]), 1.0, vec([1, 2]))
        np.testing.assert_array_equal(y.data, [1, 2])

    def test_reference_product(self):
        """[[1,2],[3,4]] @ [1,1] = [3,7]."""
        y = kernels.gemv(1.0, mat([[1, 2], [3, 4]]), vec([1, 1]), 0.0, vec([0, 0]))
        np.testing.assert_array_equal(y.data, [3, 7])

    def test_transpose_and_flops(self, rng, fresh_backend):
        """op(A) = A.T on a non-square matrix; beta scaling adds m flops."""
        a = rng.random((5, 3))
        x, y0 = rng.random(5), rng.random(3)
        y = kernels.gemv(2.0, mat(a), vec(x), 0.5, vec(y0), transpose=True)
        np.testing.assert_allclose(y.data, 2.0 * a.T @ x + 0.5 * y0, rtol=8 * EPS * 10)
        assert fresh_backend.flops.accumulated == 2 * 5 * 3 + 3

    def test_padding_rows_untouched(self, rng):
        """Views with lead > rows never read padding rows."""
        parent = DenseMatrix.from_array(np.full((6, 4), np.nan))
        block = parent.view(0, 0, 3, 4)
        block.array[...] = rng.random((3, 4))
        x = rng.random(4)
        y = kernels.gemv(1.0, block, vec(x), 0.0, DenseVector.zeros(3))
        assert np.all(np.isfinite(y.data))
        np.testing.assert_allclose(y.data, block.to_numpy() @ x)

    def test_dimension_mismatch(self):
        """x must match the columns of op(A)."""
        with pytest.raises(DimensionMismatchError):
            kernels.gemv(1.0, DenseMatrix.zeros(2, 3), vec([1, 2]), 0.0, vec([0, 0]))


class TestGemm:
    """Tests for gemm and syrk."""

    def test_reference_product(self, fresh_backend):
        """[[1,2],[3,4]] @ [[5,6],[7,8]] = [[19,22],[43,50]]; 2mnk flops."""
        A, B = mat([[1, 2], [3, 4]]), mat([[5, 6], [7, 8]])
        C = kernels.gemm(1.0, A, B, 0.0, DenseMatrix.zeros(2, 2))
        np.testing.assert_array_equal(C.to_numpy(), [[19, 22], [43, 50]])
        assert fresh_backend.flops.accumulated == 2 * 2 * 2 * 2

    def test_zero_alpha_and_beta(self, rng):
        """alpha = beta = 0 clears C."""
        C = mat(rng.random((3, 3)))
        kernels.gemm(0.0, mat(rng.random((3, 2))), mat(rng.random((2, 3))), 0.0, C)
        np.testing.assert_array_equal(C.to_numpy(), np.zeros((3, 3)))

    @pytest.mark.parametrize(("transA", "transB"), [(False, True), (True, False), (True, True)])
    def test_transposes(self, rng, transA, transB):
        """op() applies to either operand."""
        a, b, c = rng.random((4, 4)), rng.random((4, 4)), rng.random((4, 4))
        C = kernels.gemm(1.5, mat(a), mat(b), -1.0, mat(c), transA=transA, transB=transB)
        expected = 1.5 * (a.T if transA else a) @ (b.T if transB else b) - c
        np.testing.assert_allclose(C.to_numpy(), expected, rtol=1e-13)

    def test_associativity(self, rng):
        """(A B) x = A (B x) within a norm-scaled bound."""
        a, b, x = rng.random((16, 16)), rng.random((16, 16)), rng.random(16)
        AB = kernels.gemm(1.0, mat(a), mat(b), 0.0, DenseMatrix.zeros(16, 16))
        left = kernels.gemv(1.0, AB, vec(x), 0.0, DenseVector.zeros(16))
        Bx = kernels.gemv(1.0, mat(b), vec(x), 0.0, DenseVector.zeros(16))
        right = kernels.gemv(1.0, mat(a), Bx, 0.0, DenseVector.zeros(16))
        bound = 32 * EPS * np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(x)
        assert np.linalg.norm(left.data - right.data) <= bound

    def test_syrk_lower_only(self, rng):
        """syrk updates the lower triangle and leaves the strict upper alone."""
        a = rng.random((4, 3))
        c = rng.random((4, 4))
        C = kernels.syrk(-1.0, mat(a), 1.0, mat(c))
        full = c - a @ a.T
        lower = np.tril_indices(4)
        np.testing.assert_allclose(C.to_numpy()[lower], full[lower], rtol=1e-13)
        upper = np.triu_indices(4, 1)
        np.testing.assert_array_equal(C.to_numpy()[upper], c[upper])

    def test_ger(self):
        """Rank-1 update A += alpha x y^T."""
        A = kernels.ger(2.0, vec([1, 2]), vec([3, 4]), DenseMatrix.zeros(2, 2))
        np.testing.assert_array_equal(A.to_numpy(), [[6, 8], [12, 16]])


class TestTrsm:
    """Tests for trsm."""

    def test_identity(self, rng):
        """I^-1 B = B."""
        b = rng.random((3, 2))
        B = kernels.trsm(TriangleSpec(), 1.0, DenseMatrix.identity(3), mat(b))
        np.testing.assert_array_equal(B.to_numpy(), b)

    def test_diagonal_forward(self):
        """diag(2,4)^-1 [2,8] = [1,2]."""
        B = kernels.trsm(TriangleSpec(), 1.0, mat([[2, 0], [0, 4]]), mat([[2], [8]]))
        np.testing.assert_array_equal(B.to_numpy().ravel(), [1, 2])

    def test_unit_lower_ignores_diagonal(self):
        """Unit-diagonal solves never read the stored diagonal."""
        L = mat([[0.0, 0.0], [2.0, 0.0]])
        spec = TriangleSpec(uplo=Uplo.LOWER, unit_diag=True)
        B = kernels.trsm(spec, 1.0, L, mat([[1], [5]]))
        np.testing.assert_array_equal(B.to_numpy().ravel(), [1, 3])

    def test_zero_diagonal(self):
        """A read zero on the diagonal is a singular pivot."""
        with pytest.raises(SingularPivotError):
            kernels.trsm(
                TriangleSpec(uplo=Uplo.UPPER), 1.0, mat([[1, 2], [0, 0]]), mat([[1], [1]])
            )

    @pytest.mark.parametrize("side", [Side.LEFT, Side.RIGHT])
    @pytest.mark.parametrize("uplo", [Uplo.LOWER, Uplo.UPPER])
    @pytest.mark.parametrize("transpose", [False, True])
    @pytest.mark.parametrize("unit_diag", [False, True])
    def test_round_trip(self, rng, side, uplo, transpose, unit_diag):
        """op(A) trsm(A, B) = alpha B for every combination."""
        n = 5
        off = rng.random((n, n)) / n
        t = np.tril(off, -1) if uplo is Uplo.LOWER else np.triu(off, 1)
        np.fill_diagonal(t, 1.0 if unit_diag else 1.0 + rng.random(n))
        # garbage in the unread triangle must not matter
        other = np.triu(np.ones((n, n)), 1) if uplo is Uplo.LOWER else np.tril(np.ones((n, n)), -1)
        stored = t + other
        if unit_diag:
            np.fill_diagonal(stored, 7.0)
        b = rng.random((n, 3)) if side is Side.LEFT else rng.random((3, n))
        spec = TriangleSpec(side=side, uplo=uplo, transpose=transpose, unit_diag=unit_diag)
        X = kernels.trsm(spec, 2.0, mat(stored), mat(b)).to_numpy()
        op = t.T if transpose else t
        back = op @ X if side is Side.LEFT else X @ op
        np.testing.assert_allclose(back, 2.0 * b, rtol=0, atol=32 * EPS * 2 * np.abs(b).max() * n)

    def test_solve_flops(self, rng, fresh_backend):
        """A single triangular solve costs n^2 flops (unit: n(n-1))."""
        n = 64
        t = np.tril(rng.random((n, n))) + np.eye(n)
        kernels.trsm(TriangleSpec(), 1.0, mat(t), mat(rng.random((n, 1))))
        assert fresh_backend.flops.accumulated == n * n


class TestFactorizations:
    """Tests for getf2, potf2 and laswp."""

    def test_getf2_identity(self):
        """I factors with no interchanges."""
        A = DenseMatrix.identity(2)
        assert kernels.getf2(A) == [0, 1]
        np.testing.assert_array_equal(A.to_numpy(), np.eye(2))

    def test_getf2_permutation(self):
        """[[0,1],[1,0]] swaps once and leaves the identity."""
        A = mat([[0, 1], [1, 0]])
        assert kernels.getf2(A) == [1, 1]
        np.testing.assert_array_equal(A.to_numpy(), np.eye(2))

    def test_getf2_tie_goes_to_smallest_row(self):
        """Equal-magnitude candidates resolve to the lowest index."""
        A = mat([[1.0, 0.0], [-1.0, 1.0], [1.0, 2.0]])
        assert kernels.getf2(A)[0] == 0

    def test_getf2_reconstruction(self, rng):
        """P A = L U within 10 n eps."""
        n = 4
        a = rng.random((n, n))
        A = mat(a)
        pivots = kernels.getf2(A)
        packed = A.to_numpy()
        L = np.tril(packed, -1) + np.eye(n)
        U = np.triu(packed)
        pa = a.copy()
        for k, p in enumerate(pivots):
            pa[[k, p]] = pa[[p, k]]
        assert np.linalg.norm(pa - L @ U) / np.linalg.norm(a) <= 10 * n * EPS

    def test_getf2_singular(self):
        """An all-zero pivot column raises."""
        with pytest.raises(SingularPivotError):
            kernels.getf2(mat([[1, 2], [2, 4]]))

    def test_getf2_flops(self, rng, fresh_backend):
        """Unblocked LU costs about (2/3) n^3 flops."""
        n = 128
        kernels.getf2(mat(rng.random((n, n))))
        ratio = fresh_backend.flops.accumulated / (2 / 3 * n**3)
        assert 0.95 <= ratio <= 1.05

    @pytest.mark.parametrize(
        ("a", "expected"),
        [
            ([[1, 0], [0, 1]], [[1, 0], [0, 1]]),
            ([[4, 0], [0, 9]], [[2, 0], [0, 3]]),
            ([[4, 2], [2, 5]], [[2, 0], [1, 2]]),
        ],
    )
    def test_potf2(self, a, expected):
        """Reference lower Cholesky factors."""
        A = kernels.potf2(mat(a))
        np.testing.assert_allclose(np.tril(A.to_numpy()), expected)

    def test_potf2_not_spd(self):
        """A non-positive pivot raises NotSpd."""
        with pytest.raises(NotSpdError):
            kernels.potf2(mat([[1, 2], [2, 1]]))

    def test_potf2_reads_lower_only(self):
        """The strict upper triangle is neither read nor written."""
        A = mat([[4, 99], [2, 5]])
        kernels.potf2(A)
        assert A[0, 1] == 99

    def test_laswp_single_swap(self):
        """pivots=[1,1] exchanges the two rows; a second pass restores."""
        A = mat([[1.0], [2.0]])
        kernels.laswp(A, [1, 1], 0, 1)
        np.testing.assert_array_equal(A.to_numpy().ravel(), [2, 1])
        kernels.laswp(A, [1, 1], 0, 1)
        np.testing.assert_array_equal(A.to_numpy().ravel(), [1, 2])

    def test_laswp_identity(self, rng):
        """pivots=[0,1] is a no-op."""
        a = rng.random((2, 3))
        A = mat(a)
        kernels.laswp(A, [0, 1], 0, 1)
        np.testing.assert_array_equal(A.to_numpy(), a)

    def test_laswp_reverse_restores(self, rng):
        """A forward pass followed by a reverse pass restores A."""
        a = rng.random((4, 3))
        A = mat(a)
        pivots = [2, 3, 3, 3]
        kernels.laswp(A, pivots, 0, 3)
        assert not np.array_equal(A.to_numpy(), a)
        kernels.laswp(A, pivots, 0, 3, reverse=True)
        np.testing.assert_array_equal(A.to_numpy(), a)

    def test_laswp_bad_pivot(self):
        """Pivots outside the row range are rejected."""
        with pytest.raises(DimensionMismatchError):
            kernels.laswp(DenseMatrix.zeros(2, 2), [5, 1], 0, 1)

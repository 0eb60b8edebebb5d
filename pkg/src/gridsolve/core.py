"""Local numeric storage shared by every other module.

``DenseMatrix`` is column-major with an explicit leading dimension, so panel
and submatrix views share storage with their parent. ``DenseVector`` is a
contiguous stride-1 block. Both wrap numpy arrays; kernels operate on the
``array`` views, which never expose the padding rows of a matrix whose
leading dimension exceeds its row count.
"""

from __future__ import annotations

from enum import Enum
from typing import Any

import numpy as np
import numpy.typing as npt

from gridsolve.errors import DimensionMismatchError

Array = npt.NDArray[Any]


class Precision(str, Enum):
    """Floating-point precision of an operand."""

    F32 = "f32"
    F64 = "f64"

    @property
    def dtype(self) -> np.dtype[Any]:
        """Numpy dtype used for storage."""
        return np.dtype(np.float32) if self is Precision.F32 else np.dtype(np.float64)

    @property
    def tag(self) -> int:
        """Wire tag (0 = F32, 1 = F64)."""
        return 0 if self is Precision.F32 else 1

    @classmethod
    def from_dtype(cls, dtype: npt.DTypeLike) -> Precision:
        kind = np.dtype(dtype)
        if kind == np.float32:
            return cls.F32
        if kind == np.float64:
            return cls.F64
        raise DimensionMismatchError(f"Unsupported scalar type: {kind}")

    @classmethod
    def from_tag(cls, tag: int) -> Precision:
        if tag == 0:
            return cls.F32
        if tag == 1:
            return cls.F64
        raise DimensionMismatchError(f"Unknown precision tag: {tag}")


def machine_epsilon(p: Precision) -> float:
    """Return the unit roundoff of precision ``p``."""
    return float(np.finfo(p.dtype).eps)


class DenseMatrix:
    """Column-major matrix with an explicit leading dimension.

    Element ``(i, j)`` lives at offset ``i + j * lead`` of the backing buffer.
    Views created by :meth:`view` keep the parent's leading dimension and
    share its buffer.

    Args:
        buffer: Flat backing storage.
        rows: Number of rows.
        cols: Number of columns.
        lead: Leading dimension (``lead >= rows``).
        offset: Offset of element ``(0, 0)`` inside ``buffer``.
    """

    __slots__ = ("_buffer", "_rows", "_cols", "_lead", "_offset", "_array")

    def __init__(
        self,
        buffer: Array,
        rows: int,
        cols: int,
        lead: int | None = None,
        offset: int = 0,
    ) -> None:
        lead = max(rows, 1) if lead is None else lead
        if rows < 0 or cols < 0:
            raise DimensionMismatchError(f"Negative matrix shape {rows}x{cols}")
        if lead < rows or lead < 1:
            raise DimensionMismatchError(f"Leading dimension {lead} < rows {rows}")
        if buffer.ndim != 1:
            raise DimensionMismatchError("Matrix buffer must be one-dimensional")
        Precision.from_dtype(buffer.dtype)

        span = lead * (cols - 1) + rows if cols > 0 and rows > 0 else 0
        if span and offset + span > buffer.shape[0]:
            raise DimensionMismatchError(
                f"Buffer of length {buffer.shape[0]} too short for {rows}x{cols} (lead {lead})"
            )

        self._buffer = buffer
        self._rows = rows
        self._cols = cols
        self._lead = lead
        self._offset = offset
        self._array = np.lib.stride_tricks.as_strided(
            buffer[offset:],
            shape=(rows, cols),
            strides=(buffer.itemsize, buffer.itemsize * lead),
            writeable=True,
        )

    # -------------------------------------------------------------------------
    # Construction
    # -------------------------------------------------------------------------

    @classmethod
    def zeros(
        cls,
        rows: int,
        cols: int,
        precision: Precision = Precision.F64,
        lead: int | None = None,
    ) -> DenseMatrix:
        """Allocate a zero matrix with storage ``lead * cols``."""
        lead = max(rows, 1) if lead is None else lead
        return cls(np.zeros(lead * cols, dtype=precision.dtype), rows, cols, lead)

    @classmethod
    def from_array(
        cls,
        values: npt.ArrayLike,
        precision: Precision | None = None,
        lead: int | None = None,
    ) -> DenseMatrix:
        """Copy a 2D array-like into fresh column-major storage."""
        src = np.asarray(values)
        if src.ndim != 2:
            raise DimensionMismatchError(f"Expected a 2D array, got {src.ndim}D")
        if precision is None:
            precision = (
                Precision.from_dtype(src.dtype)
                if src.dtype in (np.float32, np.float64)
                else Precision.F64
            )
        out = cls.zeros(src.shape[0], src.shape[1], precision, lead)
        out.array[...] = src
        return out

    @classmethod
    def identity(cls, n: int, precision: Precision = Precision.F64) -> DenseMatrix:
        out = cls.zeros(n, n, precision)
        np.fill_diagonal(out.array, 1)
        return out

    # -------------------------------------------------------------------------
    # Properties
    # -------------------------------------------------------------------------

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def lead(self) -> int:
        return self._lead

    @property
    def shape(self) -> tuple[int, int]:
        return self._rows, self._cols

    @property
    def precision(self) -> Precision:
        return Precision.from_dtype(self._buffer.dtype)

    @property
    def data(self) -> Array:
        """Flat column-major storage window starting at element ``(0, 0)``.

        For a matrix that owns its buffer this has length ``lead * cols``.
        """
        if self._offset == 0 and self._buffer.shape[0] == self._lead * self._cols:
            return self._buffer
        span = self._lead * (self._cols - 1) + self._rows if self._cols and self._rows else 0
        return self._buffer[self._offset : self._offset + span]

    @property
    def array(self) -> Array:
        """Strided ``rows x cols`` view; padding rows are not reachable."""
        return self._array

    @property
    def nbytes(self) -> int:
        """Bytes of storage addressed by this matrix (``lead * cols`` scalars)."""
        return self._lead * self._cols * self._buffer.itemsize

    # -------------------------------------------------------------------------
    # Access
    # -------------------------------------------------------------------------

    def __getitem__(self, index: tuple[int, int]) -> float:
        i, j = index
        self._check_index(i, j)
        return float(self._buffer[self._offset + i + j * self._lead])

    def __setitem__(self, index: tuple[int, int], value: float) -> None:
        i, j = index
        self._check_index(i, j)
        self._buffer[self._offset + i + j * self._lead] = value

    def _check_index(self, i: int, j: int) -> None:
        if not (0 <= i < self._rows and 0 <= j < self._cols):
            raise IndexError(f"Index ({i}, {j}) outside {self._rows}x{self._cols}")

    def view(self, i: int, j: int, m: int, n: int) -> DenseMatrix:
        """Zero-copy ``m x n`` submatrix starting at ``(i, j)``."""
        if i < 0 or j < 0 or m < 0 or n < 0 or i + m > self._rows or j + n > self._cols:
            raise DimensionMismatchError(
                f"View ({i}, {j}, {m}, {n}) outside {self._rows}x{self._cols}"
            )
        return DenseMatrix(self._buffer, m, n, self._lead, self._offset + i + j * self._lead)

    def copy(self) -> DenseMatrix:
        """Compact copy (``lead == rows``)."""
        return DenseMatrix.from_array(self._array, self.precision)

    def to_numpy(self) -> Array:
        """Return a detached ``rows x cols`` numpy copy."""
        return np.array(self._array, order="F", copy=True)

    def __repr__(self) -> str:
        return (
            f"DenseMatrix(rows={self._rows}, cols={self._cols}, lead={self._lead}, "
            f"precision={self.precision.value})"
        )


class DenseVector:
    """Contiguous stride-1 vector."""

    __slots__ = ("_data",)

    def __init__(self, data: Array) -> None:
        if data.ndim != 1:
            raise DimensionMismatchError("Vector storage must be one-dimensional")
        if not data.flags.c_contiguous:
            raise DimensionMismatchError("Vector storage must be stride-1")
        Precision.from_dtype(data.dtype)
        self._data = data

    @classmethod
    def zeros(cls, n: int, precision: Precision = Precision.F64) -> DenseVector:
        return cls(np.zeros(n, dtype=precision.dtype))

    @classmethod
    def from_array(
        cls, values: npt.ArrayLike, precision: Precision | None = None
    ) -> DenseVector:
        src = np.asarray(values)
        if src.ndim != 1:
            raise DimensionMismatchError(f"Expected a 1D array, got {src.ndim}D")
        if precision is None:
            precision = (
                Precision.from_dtype(src.dtype)
                if src.dtype in (np.float32, np.float64)
                else Precision.F64
            )
        return cls(np.array(src, dtype=precision.dtype, copy=True))

    @property
    def len(self) -> int:
        return int(self._data.shape[0])

    def __len__(self) -> int:
        return self.len

    @property
    def data(self) -> Array:
        return self._data

    @property
    def precision(self) -> Precision:
        return Precision.from_dtype(self._data.dtype)

    @property
    def nbytes(self) -> int:
        return int(self._data.nbytes)

    def __getitem__(self, i: int) -> float:
        return float(self._data[i])

    def __setitem__(self, i: int, value: float) -> None:
        self._data[i] = value

    def copy(self) -> DenseVector:
        return DenseVector(self._data.copy())

    def as_matrix(self) -> DenseMatrix:
        """Zero-copy ``len x 1`` matrix over the same storage."""
        return DenseMatrix(self._data, self.len, 1, max(self.len, 1))

    def to_numpy(self) -> Array:
        return self._data.copy()

    def __repr__(self) -> str:
        return f"DenseVector(len={self.len}, precision={self.precision.value})"


def require_same_precision(*operands: DenseMatrix | DenseVector) -> Precision:
    """Return the shared precision of ``operands`` or raise."""
    precisions = {op.precision for op in operands}
    if len(precisions) != 1:
        names = sorted(p.value for p in precisions)
        raise DimensionMismatchError(f"Mixed precisions in one operation: {names}")
    return precisions.pop()

"""Wire encoding for transport payloads and raw binary matrix files.

Scalars are IEEE-754 little-endian. A matrix is a 24-byte header of three
unsigned 64-bit little-endian fields (rows, cols, precision tag with
0 = F32 and 1 = F64) followed by its entries in column-major order.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from gridsolve.core import Array, DenseMatrix, DenseVector, Precision
from gridsolve.errors import GridSolveIOError

HEADER_BYTES = 24
_HEADER = np.dtype("<u8")
_INDEX = np.dtype("<i8")


def _wire_dtype(precision: Precision) -> np.dtype[np.floating]:
    return precision.dtype.newbyteorder("<")


def encode_array(values: Array) -> bytes:
    """Encode a 1D or 2D float array (column-major) with the matrix header."""
    if values.ndim == 1:
        rows, cols = values.shape[0], 1
    elif values.ndim == 2:
        rows, cols = values.shape
    else:
        raise GridSolveIOError(f"Cannot encode a {values.ndim}D array")
    precision = Precision.from_dtype(values.dtype)
    header = np.array([rows, cols, precision.tag], dtype=_HEADER).tobytes()
    body = np.asarray(values, dtype=_wire_dtype(precision)).tobytes(order="F")
    return header + body


def decode_array(payload: bytes) -> Array:
    """Decode a payload produced by :func:`encode_array` into a 2D F-ordered array."""
    if len(payload) < HEADER_BYTES:
        raise GridSolveIOError(f"Payload of {len(payload)} bytes is shorter than the header")
    rows, cols, tag = (int(v) for v in np.frombuffer(payload[:HEADER_BYTES], dtype=_HEADER))
    precision = Precision.from_tag(tag)
    wire = _wire_dtype(precision)
    expected = HEADER_BYTES + rows * cols * wire.itemsize
    if len(payload) != expected:
        raise GridSolveIOError(
            f"Payload has {len(payload)} bytes, header announces {expected} "
            f"({rows}x{cols} {precision.value})"
        )
    if rows * cols == 0:
        return np.zeros((rows, cols), dtype=precision.dtype, order="F")
    flat = np.frombuffer(payload, dtype=wire, offset=HEADER_BYTES)
    return flat.astype(precision.dtype).reshape((rows, cols), order="F")


def encode_matrix(A: DenseMatrix) -> bytes:
    return encode_array(A.array)


def decode_matrix(payload: bytes) -> DenseMatrix:
    return DenseMatrix.from_array(decode_array(payload))


def encode_vector(x: DenseVector | Array) -> bytes:
    data = x.data if isinstance(x, DenseVector) else x
    return encode_array(np.ravel(data))


def decode_vector(payload: bytes) -> Array:
    return decode_array(payload).ravel(order="F")


def encode_indices(indices: Sequence[int]) -> bytes:
    """Encode a list of row indices as signed 64-bit little-endian integers."""
    return np.asarray(indices, dtype=_INDEX).tobytes()


def decode_indices(payload: bytes) -> list[int]:
    if len(payload) % _INDEX.itemsize:
        raise GridSolveIOError(f"Index payload of {len(payload)} bytes is misaligned")
    return [int(v) for v in np.frombuffer(payload, dtype=_INDEX)]

"""Matrix files: Matrix Market (dense array format) and raw binary.

Matrix Market coordinate files are accepted on input and densified;
symmetric files come back with both triangles filled. Raw binary files use
the same 24-byte header and column-major payload as transport messages.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Literal

import numpy as np
import scipy.io
import scipy.sparse

from gridsolve.core import DenseMatrix, Precision
from gridsolve.errors import DimensionMismatchError, GridSolveIOError
from gridsolve.transport.codec import decode_array, encode_array

logger = logging.getLogger(__name__)

FileFormat = Literal["mm", "bin"]

_SUFFIXES: dict[str, FileFormat] = {".mtx": "mm", ".mm": "mm", ".bin": "bin"}


def detect_format(path: str | Path) -> FileFormat:
    """Infer the file format from the suffix (``.mtx``/``.mm`` or ``.bin``)."""
    suffix = Path(path).suffix.lower()
    try:
        return _SUFFIXES[suffix]
    except KeyError:
        raise GridSolveIOError(
            f"Cannot tell the format of '{path}': expected one of {', '.join(_SUFFIXES)}"
        ) from None


def save_matrix(
    A: DenseMatrix,
    path: str | Path,
    fmt: FileFormat | None = None,
    *,
    symmetric: bool = False,
) -> Path:
    """Write ``A`` to ``path``.

    Args:
        A: Matrix to write.
        path: Destination file; written exactly as named.
        fmt: ``"mm"`` or ``"bin"``; inferred from the suffix when omitted.
        symmetric: Write a Matrix Market ``symmetric`` header (lower triangle
            only). Ignored for binary files.

    Raises:
        GridSolveIOError: If the file cannot be written.
    """
    path = Path(path)
    fmt = fmt or detect_format(path)
    values = A.to_numpy()
    try:
        if fmt == "bin":
            path.write_bytes(encode_array(values))
        else:
            with path.open("wb") as fh:
                scipy.io.mmwrite(
                    fh,
                    values,
                    field="real",
                    precision=17 if A.precision is Precision.F64 else 9,
                    symmetry="symmetric" if symmetric else "general",
                )
    except (OSError, ValueError) as exc:
        raise GridSolveIOError(f"Failed to write matrix to {path}: {exc}") from exc
    logger.info("wrote %dx%d matrix to %s (%s)", A.rows, A.cols, path, fmt)
    return path


def load_matrix(
    path: str | Path,
    fmt: FileFormat | None = None,
    precision: Precision | None = None,
) -> DenseMatrix:
    """Read a matrix written by :func:`save_matrix` or any Matrix Market file.

    Binary files keep their stored precision unless ``precision`` is given;
    Matrix Market files default to F64.

    Raises:
        GridSolveIOError: If the file is missing, malformed or not real-valued.
    """
    path = Path(path)
    fmt = fmt or detect_format(path)
    try:
        if fmt == "bin":
            values = decode_array(path.read_bytes())
        else:
            with path.open("rb") as fh:
                loaded = scipy.io.mmread(fh)
            values = loaded.toarray() if scipy.sparse.issparse(loaded) else np.asarray(loaded)
    except GridSolveIOError:
        raise
    except DimensionMismatchError as exc:
        raise GridSolveIOError(f"{path} has an unsupported precision: {exc}") from exc
    except (OSError, ValueError, TypeError) as exc:
        raise GridSolveIOError(f"Failed to read matrix from {path}: {exc}") from exc

    if values.ndim != 2 or np.iscomplexobj(values):
        raise GridSolveIOError(f"{path} does not hold a real 2D matrix")
    if precision is None and fmt == "mm":
        precision = Precision.F64
    logger.info("loaded %dx%d matrix from %s", values.shape[0], values.shape[1], path)
    return DenseMatrix.from_array(values, precision)

"""Exception hierarchy for gridsolve.

Every fallible operation raises exactly one ``GridSolveError`` subclass on
failure. Each subclass is tagged with an ``ErrorKind`` and maps to a
documented CLI exit code.
"""

from __future__ import annotations

from enum import Enum
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from gridsolve.models import SolveReport


class ErrorKind(str, Enum):
    """Failure categories shared by every module."""

    DIMENSION_MISMATCH = "DimensionMismatch"
    SINGULAR_PIVOT = "SingularPivot"
    NOT_SPD = "NotSpd"
    BREAKDOWN = "Breakdown"
    MAX_ITERATIONS = "MaxIterations"
    DESCRIPTOR_MISMATCH = "DescriptorMismatch"
    COLLECTIVE_MISUSE = "CollectiveMisuse"
    IO_ERROR = "IoError"


EXIT_CODES: dict[ErrorKind, int] = {
    ErrorKind.DIMENSION_MISMATCH: 2,
    ErrorKind.DESCRIPTOR_MISMATCH: 2,
    ErrorKind.SINGULAR_PIVOT: 3,
    ErrorKind.NOT_SPD: 3,
    ErrorKind.MAX_ITERATIONS: 4,
    ErrorKind.BREAKDOWN: 5,
    ErrorKind.COLLECTIVE_MISUSE: 6,
    ErrorKind.IO_ERROR: 7,
}


class GridSolveError(Exception):
    """Base exception for gridsolve errors."""

    kind: ErrorKind = ErrorKind.COLLECTIVE_MISUSE

    def __init__(
        self,
        message: str,
        *,
        report: SolveReport | None = None,
        solution: Any = None,
    ) -> None:
        super().__init__(message)
        self.report = report
        self.solution = solution

    @property
    def exit_code(self) -> int:
        """Process exit status the CLI uses for this error."""
        return EXIT_CODES[self.kind]


class DimensionMismatchError(GridSolveError):
    """Operand shapes or precisions do not conform."""

    kind = ErrorKind.DIMENSION_MISMATCH


class SingularPivotError(GridSolveError):
    """An exactly-zero pivot or triangular diagonal entry was met."""

    kind = ErrorKind.SINGULAR_PIVOT


class NotSpdError(GridSolveError):
    """Cholesky met a non-positive diagonal pivot."""

    kind = ErrorKind.NOT_SPD


class BreakdownError(GridSolveError):
    """A Krylov recurrence divided by a vanishing quantity."""

    kind = ErrorKind.BREAKDOWN


class MaxIterationsError(GridSolveError):
    """An iterative solver hit its iteration cap before converging."""

    kind = ErrorKind.MAX_ITERATIONS


class DescriptorMismatchError(GridSolveError):
    """Distributed operands disagree on grid, block size or ownership."""

    kind = ErrorKind.DESCRIPTOR_MISMATCH


class CollectiveMisuseError(GridSolveError):
    """A collective was misused, timed out, or a rank program failed."""

    kind = ErrorKind.COLLECTIVE_MISUSE


class GridSolveIOError(GridSolveError):
    """Reading or writing a matrix file failed, or a backend could not allocate."""

    kind = ErrorKind.IO_ERROR


def error_for_kind(kind: ErrorKind) -> type[GridSolveError]:
    """Return the exception class raised for ``kind``."""
    for cls in GridSolveError.__subclasses__():
        if cls.kind is kind:
            return cls
    raise KeyError(kind)

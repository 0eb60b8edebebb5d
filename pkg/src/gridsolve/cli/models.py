"""Records the command line emits: the solve summary and benchmark CSV rows."""

from __future__ import annotations

import csv
from collections.abc import Iterable
from typing import IO, Literal

from pydantic import BaseModel, ConfigDict, Field

from gridsolve.models import SolveReport

Method = Literal["lu", "chol", "cg", "gmres", "bicg", "bicgstab"]
DIRECT_METHODS: tuple[Method, ...] = ("lu", "chol")
ITERATIVE_METHODS: tuple[Method, ...] = ("cg", "gmres", "bicg", "bicgstab")


class SolveSummary(SolveReport):
    """What ``gridsolve solve`` prints: the solver report plus run context.

    ``relres`` is recomputed from the gathered solution as ``||A x - b|| / ||b||``.
    """

    relres: float
    ranks: int
    grid: str
    backend: str
    precision: str
    flops: int
    wall_time_s: float


class BenchRecord(BaseModel):
    """One benchmark configuration.

    ``speedup_vs_serial`` is the one-rank wall time of the same method,
    backend and problem divided by this row's wall time. ``local_bytes``
    is the largest per-rank matrix footprint; it is not written to CSV.
    """

    model_config = ConfigDict(extra="forbid")

    method: Method
    n: int = Field(ge=1)
    ranks: int = Field(ge=1)
    grid: str
    nb: int = Field(ge=1)
    backend: str
    precision: str
    wall_time_s: float = Field(ge=0)
    flops: int = Field(ge=0)
    iterations: int | None = None
    final_relres: float = Field(ge=0)
    speedup_vs_serial: float = Field(gt=0)
    local_bytes: int = Field(default=0, ge=0, exclude=True)


CSV_COLUMNS: tuple[str, ...] = tuple(
    name for name, info in BenchRecord.model_fields.items() if not info.exclude
)


def _cell(value: object) -> object:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def write_records(records: Iterable[BenchRecord], out: IO[str]) -> None:
    """Write a header and one row per record; floats keep full precision."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in records:
        row = record.model_dump()
        writer.writerow(_cell(row[name]) for name in CSV_COLUMNS)


def read_records(source: IO[str]) -> list[BenchRecord]:
    """Parse CSV produced by :func:`write_records`."""
    reader = csv.DictReader(source)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"Unexpected CSV header: {reader.fieldnames}")
    return [
        BenchRecord.model_validate(
            {key: (None if value == "" else value) for key, value in row.items()}
        )
        for row in reader
    ]

"""Models describing staged kernel execution."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from gridsolve.core import Array


class TransferLog(BaseModel):
    """Copy and allocation counters for staged execution.

    After every completed staging ``frees == allocations``.
    """

    model_config = ConfigDict(extra="forbid")

    h2d_copies: int = 0
    h2d_bytes: int = 0
    d2h_copies: int = 0
    d2h_bytes: int = 0
    allocations: int = 0
    frees: int = 0

    @property
    def is_empty(self) -> bool:
        return not any(self.model_dump().values())

    @property
    def leaked(self) -> int:
        return self.allocations - self.frees

    def merge(self, other: TransferLog) -> None:
        """Accumulate ``other`` into this log."""
        for name in type(self).model_fields:
            setattr(self, name, getattr(self, name) + getattr(other, name))


class LaunchLayout(BaseModel):
    """Device grid layout: number of blocks and threads per block."""

    model_config = ConfigDict(frozen=True)

    blocks: int = Field(default=1, ge=1)
    threads_per_block: int = Field(default=256, ge=1)

    @classmethod
    def for_elements(cls, elements: int, threads_per_block: int = 256) -> LaunchLayout:
        """Smallest layout covering ``elements`` work items."""
        return cls(
            blocks=max(1, math.ceil(elements / threads_per_block)),
            threads_per_block=threads_per_block,
        )

    def covers(self, elements: int) -> bool:
        return self.blocks * self.threads_per_block >= elements


@dataclass(frozen=True)
class HostBuffer:
    """A named operand living in host memory."""

    name: str
    array: Array

    @property
    def nbytes(self) -> int:
        return int(self.array.nbytes)


@dataclass
class DeviceBuffer:
    """Simulated device allocation, valid until freed."""

    handle: int
    nbytes: int
    backend: str
    array: Array | None = field(repr=False, default=None)

    @property
    def valid(self) -> bool:
        return self.array is not None


@dataclass(frozen=True)
class KernelCall:
    """A kernel identifier, its body and its accounting.

    ``body`` receives a mapping from operand name to the array it must work
    on (host arrays for direct execution, device copies when staged).
    """

    name: str
    body: Callable[[dict[str, Array]], Any]
    inputs: tuple[HostBuffer, ...]
    outputs: tuple[HostBuffer, ...]
    flops: int = 0
    layout: LaunchLayout = field(default_factory=LaunchLayout)
    elements: int = 0


class StagedResult(BaseModel):
    """Transfer log of one staged call together with the kernel's return value."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    log: TransferLog
    value: Any = None

    @model_validator(mode="after")
    def _no_leaks(self) -> StagedResult:
        if self.log.leaked:
            raise ValueError(f"{self.log.leaked} device buffers leaked")
        return self

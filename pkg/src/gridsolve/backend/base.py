"""Base class for kernel execution backends."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Any

from gridsolve.backend.models import KernelCall, TransferLog

logger = logging.getLogger(__name__)


class FlopCounter:
    """Monotone floating-point operation counter (a multiply-add counts 2)."""

    __slots__ = ("_accumulated",)

    def __init__(self) -> None:
        self._accumulated = 0

    @property
    def accumulated(self) -> int:
        return self._accumulated

    def add(self, flops: int) -> None:
        if flops < 0:
            raise ValueError("Flop increments must be non-negative")
        self._accumulated += flops

    def reset(self) -> None:
        self._accumulated = 0

    def __repr__(self) -> str:
        return f"FlopCounter(accumulated={self._accumulated})"


class Backend(ABC):
    """Executes local kernels and accounts for their work.

    Every kernel in :mod:`gridsolve.kernels` is funnelled through
    :meth:`execute`. A handle is meant for one rank context at a time.
    """

    name: str = "abstract"

    def __init__(self) -> None:
        self.flops = FlopCounter()
        self.transfers = TransferLog()
        self.calls = 0

    def execute(self, call: KernelCall) -> Any:
        """Run ``call`` and add its flops on success."""
        result = self._run(call)
        self.calls += 1
        self.flops.add(call.flops)
        return result

    @abstractmethod
    def _run(self, call: KernelCall) -> Any:
        """Backend-specific execution of ``call``."""

    def reset(self) -> None:
        """Clear flop and transfer accounting."""
        self.flops.reset()
        self.transfers = TransferLog()
        self.calls = 0

    def __repr__(self) -> str:
        return f"{type(self).__name__}(flops={self.flops.accumulated}, calls={self.calls})"

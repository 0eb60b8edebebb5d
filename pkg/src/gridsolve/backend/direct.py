"""Backend that runs kernels in place on host memory."""

from __future__ import annotations

from typing import Any

from gridsolve.backend.base import Backend
from gridsolve.backend.models import KernelCall


class DirectBackend(Backend):
    """In-place host execution; its transfer log stays empty."""

    name = "direct"

    def _run(self, call: KernelCall) -> Any:
        operands = {buf.name: buf.array for buf in (*call.inputs, *call.outputs)}
        return call.body(operands)

"""Backend that stages every kernel through simulated device memory.

Each call follows the offload flow: operands already live in host memory
(steps 1-2), device buffers are allocated (3), inputs are copied host to
device (4), the launch layout is checked (5), the kernel runs on the device
copies (6), outputs are copied back (7) and every device buffer is freed (8).
Device memory is simulated with separately allocated host arrays.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from typing import Any

import numpy as np

from gridsolve.backend.base import Backend
from gridsolve.backend.models import (
    DeviceBuffer,
    HostBuffer,
    KernelCall,
    LaunchLayout,
    StagedResult,
    TransferLog,
)
from gridsolve.errors import DimensionMismatchError, GridSolveIOError

logger = logging.getLogger(__name__)


class StagedBackend(Backend):
    """Reference offload backend with instrumented host/device copies."""

    name = "staged"

    def __init__(self, max_device_bytes: int | None = None) -> None:
        """Initialize the backend.

        Args:
            max_device_bytes: Optional cap on simultaneously allocated device
                bytes; exceeding it fails the allocation.
        """
        super().__init__()
        self.max_device_bytes = max_device_bytes
        self._handles = itertools.count(1)
        self._live_bytes = 0

    def _run(self, call: KernelCall) -> Any:
        result = self._stage(call)
        return result.value

    def stage_execute(
        self,
        kernel: KernelCall,
        inputs: Sequence[HostBuffer],
        outputs: Sequence[HostBuffer],
        layout: LaunchLayout,
    ) -> TransferLog:
        """Run ``kernel`` through the full staging flow and return its transfer log.

        Args:
            kernel: Kernel identifier and body.
            inputs: Host buffers copied to the device before the launch.
            outputs: Host buffers refreshed from the device after the launch.
            layout: Launch layout; must cover ``kernel.elements``.

        Returns:
            Transfer log of this call only.
        """
        call = KernelCall(
            name=kernel.name,
            body=kernel.body,
            inputs=tuple(inputs),
            outputs=tuple(outputs),
            flops=kernel.flops,
            layout=layout,
            elements=kernel.elements,
        )
        result = self._stage(call)
        self.calls += 1
        self.flops.add(call.flops)
        return result.log

    def _stage(self, call: KernelCall) -> StagedResult:
        log = TransferLog()
        device: dict[str, DeviceBuffer] = {}
        try:
            # Step 3: one device allocation per distinct operand
            for buf in (*call.inputs, *call.outputs):
                if buf.name not in device:
                    device[buf.name] = self._allocate(buf, log)

            # Step 4
            for buf in call.inputs:
                self._copy_in(buf, device[buf.name], log)

            # Step 5
            if not call.layout.covers(call.elements):
                raise DimensionMismatchError(
                    f"Layout {call.layout.blocks}x{call.layout.threads_per_block} does not "
                    f"cover {call.elements} elements of kernel '{call.name}'"
                )

            # Step 6
            arrays = {name: self._device_array(dev) for name, dev in device.items()}
            value = call.body(arrays)

            # Step 7
            for buf in call.outputs:
                self._copy_out(device[buf.name], buf, log)
        finally:
            # Step 8
            for dev in device.values():
                self._free(dev, log)
            self.transfers.merge(log)

        logger.debug(
            "staged %s: %d H->D (%d B), %d D->H (%d B)",
            call.name,
            log.h2d_copies,
            log.h2d_bytes,
            log.d2h_copies,
            log.d2h_bytes,
        )
        return StagedResult(log=log, value=value)

    def _allocate(self, host: HostBuffer, log: TransferLog) -> DeviceBuffer:
        nbytes = host.nbytes
        if self.max_device_bytes is not None and self._live_bytes + nbytes > self.max_device_bytes:
            raise GridSolveIOError(
                f"Device allocation of {nbytes} bytes for '{host.name}' exceeds the "
                f"{self.max_device_bytes}-byte limit"
            )
        try:
            array = np.empty(host.array.shape, dtype=host.array.dtype, order="F")
        except MemoryError as exc:
            raise GridSolveIOError(f"Device allocation failed for '{host.name}'") from exc
        self._live_bytes += nbytes
        log.allocations += 1
        return DeviceBuffer(
            handle=next(self._handles), nbytes=nbytes, backend=self.name, array=array
        )

    def _free(self, dev: DeviceBuffer, log: TransferLog) -> None:
        if dev.valid:
            dev.array = None
            self._live_bytes -= dev.nbytes
            log.frees += 1

    @staticmethod
    def _device_array(dev: DeviceBuffer) -> Any:
        if dev.array is None:
            raise GridSolveIOError(f"Device buffer {dev.handle} used after free")
        return dev.array

    def _copy_in(self, host: HostBuffer, dev: DeviceBuffer, log: TransferLog) -> None:
        np.copyto(self._device_array(dev), host.array)
        log.h2d_copies += 1
        log.h2d_bytes += host.nbytes

    def _copy_out(self, dev: DeviceBuffer, host: HostBuffer, log: TransferLog) -> None:
        np.copyto(host.array, self._device_array(dev))
        log.d2h_copies += 1
        log.d2h_bytes += host.nbytes

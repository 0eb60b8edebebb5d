"""Kernel execution backends and per-context backend selection.

    >>> from gridsolve.backend import select_backend, use_backend
    >>> with use_backend(select_backend("staged")) as backend:
    ...     ...  # every kernel call is staged through simulated device memory
    >>> backend.transfers.h2d_copies
"""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar

from gridsolve.backend.base import Backend, FlopCounter
from gridsolve.backend.direct import DirectBackend
from gridsolve.backend.models import (
    DeviceBuffer,
    HostBuffer,
    KernelCall,
    LaunchLayout,
    TransferLog,
)
from gridsolve.backend.staged import StagedBackend

BACKENDS: dict[str, type[Backend]] = {
    DirectBackend.name: DirectBackend,
    StagedBackend.name: StagedBackend,
}

_current: ContextVar[Backend | None] = ContextVar("gridsolve_backend", default=None)


def select_backend(name: str) -> Backend:
    """Create a fresh backend handle by name (``direct`` or ``staged``)."""
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(
            f"Unknown backend '{name}'. Expected one of: {', '.join(sorted(BACKENDS))}"
        ) from None


def current_backend() -> Backend:
    """Backend of the current execution context, creating a direct one if unset."""
    backend = _current.get()
    if backend is None:
        backend = DirectBackend()
        _current.set(backend)
    return backend


@contextmanager
def use_backend(backend: Backend | str) -> Iterator[Backend]:
    """Route kernel calls in this context through ``backend``."""
    if isinstance(backend, str):
        backend = select_backend(backend)
    token = _current.set(backend)
    try:
        yield backend
    finally:
        _current.reset(token)


__all__ = [
    "BACKENDS",
    "Backend",
    "DeviceBuffer",
    "DirectBackend",
    "FlopCounter",
    "HostBuffer",
    "KernelCall",
    "LaunchLayout",
    "StagedBackend",
    "TransferLog",
    "current_backend",
    "select_backend",
    "use_backend",
]

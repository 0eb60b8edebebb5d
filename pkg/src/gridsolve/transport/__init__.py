"""Message passing between ranks and the in-process reference launcher."""

from gridsolve.transport.base import (
    DEADLOCK_TIMEOUT_ENV,
    CommGroup,
    Envelope,
    RankId,
    ReduceOp,
    Transport,
    TransportSettings,
)
from gridsolve.transport.inprocess import InProcessTransport, Launch, TraceEntry, launch

__all__ = [
    "DEADLOCK_TIMEOUT_ENV",
    "CommGroup",
    "Envelope",
    "InProcessTransport",
    "Launch",
    "RankId",
    "ReduceOp",
    "TraceEntry",
    "Transport",
    "TransportSettings",
    "launch",
]

"""Message-passing contract between ranks.

A :class:`Transport` handle belongs to one rank. Point-to-point messages are
opaque byte payloads, FIFO per (source, destination, tag). Collectives are
defined per :class:`CommGroup` and must be entered by every member in the
same order.
"""

from __future__ import annotations

import os
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any, TypeAlias

from pydantic import BaseModel, ConfigDict, Field

from gridsolve.errors import CollectiveMisuseError

RankId: TypeAlias = int

DEADLOCK_TIMEOUT_ENV = "GRIDSOLVE_DEADLOCK_TIMEOUT_S"
DEFAULT_DEADLOCK_TIMEOUT_S = 30.0


class ReduceOp(str, Enum):
    """Reduction operators for :meth:`Transport.allreduce`."""

    SUM = "sum"
    MAX = "max"
    MAX_ABS_LOC = "maxabsloc"


@dataclass(frozen=True)
class CommGroup:
    """Ordered set of ranks that take part in a collective together."""

    members: tuple[RankId, ...]
    my_index: int

    def __post_init__(self) -> None:
        if len(set(self.members)) != len(self.members):
            raise ValueError(f"Group members must be unique: {self.members}")
        if not 0 <= self.my_index < len(self.members):
            raise ValueError(f"my_index {self.my_index} outside group of {len(self.members)}")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def leader(self) -> RankId:
        return self.members[0]

    @property
    def me(self) -> RankId:
        return self.members[self.my_index]


@dataclass(frozen=True)
class Envelope:
    """A point-to-point message in flight."""

    source: RankId
    tag: int
    payload: bytes


class TransportSettings(BaseModel):
    """Transport knobs.

    ``deadlock_timeout_s`` bounds every blocking wait; ``jitter_s`` adds a
    seeded random delay before each send and receive to shake up scheduling.
    """

    model_config = ConfigDict(frozen=True)

    deadlock_timeout_s: float = Field(default=DEFAULT_DEADLOCK_TIMEOUT_S, gt=0)
    jitter_s: float = Field(default=0.0, ge=0)
    seed: int = 0
    record_trace: bool = False

    @classmethod
    def from_env(cls, **overrides: Any) -> TransportSettings:
        """Build settings, taking the deadlock timeout from the environment if set."""
        values: dict[str, Any] = {}
        raw = os.environ.get(DEADLOCK_TIMEOUT_ENV)
        if raw:
            values["deadlock_timeout_s"] = float(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class Transport(ABC):
    """One rank's handle on the message-passing layer."""

    def __init__(self, rank: RankId, size: int) -> None:
        if size < 1:
            raise ValueError("`size` must be at least 1")
        if not 0 <= rank < size:
            raise ValueError(f"`rank` must be in [0, {size}), got {rank}")
        self._rank = rank
        self._size = size

    @property
    def rank(self) -> RankId:
        return self._rank

    @property
    def size(self) -> int:
        return self._size

    @property
    def world(self) -> CommGroup:
        """Group of all ranks in rank order."""
        return CommGroup(tuple(range(self._size)), self._rank)

    def group(self, members: Sequence[RankId]) -> CommGroup:
        """Group over ``members`` (in the given order) that includes the caller."""
        members = tuple(int(m) for m in members)
        for m in members:
            if not 0 <= m < self._size:
                raise CollectiveMisuseError(f"Rank {m} outside launch of {self._size}")
        if self._rank not in members:
            raise CollectiveMisuseError(f"Rank {self._rank} is not a member of {members}")
        return CommGroup(members, members.index(self._rank))

    @abstractmethod
    def send(self, dest: RankId, tag: int, payload: bytes) -> None:
        """Enqueue ``payload`` for ``dest``; FIFO per (source, dest, tag)."""

    @abstractmethod
    def recv(self, source: RankId, tag: int) -> bytes:
        """Block until a message from ``source`` with ``tag`` arrives."""

    @abstractmethod
    def broadcast(self, group: CommGroup, root: RankId, payload: bytes | None) -> bytes:
        """Return ``root``'s payload on every member of ``group``."""

    @abstractmethod
    def allreduce(self, group: CommGroup, op: ReduceOp, value: Any) -> Any:
        """Combine one contribution per member, in ascending member order.

        ``value`` is a scalar or numpy array for ``SUM``/``MAX`` and a
        ``(value, index)`` pair for ``MAX_ABS_LOC``.
        """

    @abstractmethod
    def barrier(self, group: CommGroup) -> None:
        """Return only once every member has entered."""

    def sendrecv(self, peer: RankId, tag: int, payload: bytes) -> bytes:
        """Exchange payloads with ``peer`` (both sides call this)."""
        self.send(peer, tag, payload)
        return self.recv(peer, tag)

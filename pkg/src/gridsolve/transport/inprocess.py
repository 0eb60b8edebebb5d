"""In-process reference transport: R rank threads sharing one mailbox fabric.

Collectives are leader based. Every member hands its contribution to the
group's first member, which checks that all members agree on the operation
and root, folds the contributions in ascending member order, and sends the
result back to each member. The fixed fold order makes floating-point
reductions bitwise reproducible.
"""

from __future__ import annotations

import logging
import random
import threading
import time
from collections import defaultdict, deque
from collections.abc import Callable, Hashable
from dataclasses import dataclass
from typing import Any, TypeVar

import numpy as np

from gridsolve.errors import CollectiveMisuseError, GridSolveError
from gridsolve.transport.base import (
    CommGroup,
    Envelope,
    RankId,
    ReduceOp,
    Transport,
    TransportSettings,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

Channel = tuple[Hashable, ...]


@dataclass(frozen=True)
class _Contribution:
    source: RankId
    op: str
    root: RankId | None
    value: Any


@dataclass(frozen=True)
class _Mismatch:
    message: str


@dataclass(frozen=True)
class TraceEntry:
    """One collective as seen by one rank."""

    op: str
    members: tuple[RankId, ...]
    root: RankId | None


class _Fabric:
    """Mailboxes shared by all rank handles of one launch."""

    def __init__(self, size: int, settings: TransportSettings) -> None:
        self.size = size
        self.settings = settings
        self._cond = threading.Condition()
        self._boxes: dict[tuple[RankId, RankId, Channel], deque[Any]] = defaultdict(deque)
        self._failure: tuple[RankId, BaseException] | None = None

    @property
    def failure(self) -> tuple[RankId, BaseException] | None:
        return self._failure

    def put(self, source: RankId, dest: RankId, channel: Channel, item: Any) -> None:
        with self._cond:
            self._boxes[(source, dest, channel)].append(item)
            self._cond.notify_all()

    def take(self, source: RankId, dest: RankId, channel: Channel) -> Any:
        timeout = self.settings.deadlock_timeout_s
        deadline = time.monotonic() + timeout
        key = (source, dest, channel)
        with self._cond:
            while True:
                box = self._boxes.get(key)
                if box:
                    item = box.popleft()
                    if not box:
                        del self._boxes[key]
                    return item
                if self._failure is not None:
                    failed_rank, _ = self._failure
                    raise CollectiveMisuseError(
                        f"Rank {dest} aborted: rank {failed_rank} failed while this rank "
                        f"waited on {channel[0]} from rank {source}"
                    )
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise CollectiveMisuseError(
                        f"Rank {dest} waited more than {timeout:g}s for {channel[0]} "
                        f"from rank {source}; probable deadlock or skipped collective"
                    )
                self._cond.wait(remaining)

    def abort(self, rank: RankId, exc: BaseException) -> None:
        with self._cond:
            if self._failure is None:
                self._failure = (rank, exc)
            self._cond.notify_all()


class InProcessTransport(Transport):
    """Transport handle for one rank thread of an in-process launch."""

    def __init__(self, rank: RankId, fabric: _Fabric) -> None:
        super().__init__(rank, fabric.size)
        self._fabric = fabric
        self._sequence: dict[tuple[RankId, ...], int] = defaultdict(int)
        self._rng = random.Random(fabric.settings.seed * 7919 + rank)
        self.trace: list[TraceEntry] = []

    # -------------------------------------------------------------------------
    # Point to point
    # -------------------------------------------------------------------------

    def send(self, dest: RankId, tag: int, payload: bytes) -> None:
        if dest == self._rank:
            raise CollectiveMisuseError(f"Rank {self._rank} cannot send to itself")
        if not 0 <= dest < self._size:
            raise CollectiveMisuseError(f"Destination {dest} outside launch of {self._size}")
        self._jitter()
        env = Envelope(source=self._rank, tag=tag, payload=bytes(payload))
        self._fabric.put(self._rank, dest, ("p2p", tag), env)

    def recv(self, source: RankId, tag: int) -> bytes:
        if not 0 <= source < self._size:
            raise CollectiveMisuseError(f"Source {source} outside launch of {self._size}")
        self._jitter()
        env: Envelope = self._fabric.take(source, self._rank, ("p2p", tag))
        return env.payload

    # -------------------------------------------------------------------------
    # Collectives
    # -------------------------------------------------------------------------

    def broadcast(self, group: CommGroup, root: RankId, payload: bytes | None) -> bytes:
        if root not in group.members:
            raise CollectiveMisuseError(f"Broadcast root {root} is not in {group.members}")
        if self._rank == root and payload is None:
            raise CollectiveMisuseError(f"Broadcast root {root} supplied no payload")
        mine = bytes(payload) if self._rank == root and payload is not None else None
        result: bytes = self._collective(group, "broadcast", root, mine, _pick_root)
        return result

    def allreduce(self, group: CommGroup, op: ReduceOp, value: Any) -> Any:
        return self._collective(group, f"allreduce:{op.value}", None, value, _REDUCERS[op])

    def barrier(self, group: CommGroup) -> None:
        self._collective(group, "barrier", None, None, lambda contributions: None)

    def _collective(
        self,
        group: CommGroup,
        op: str,
        root: RankId | None,
        value: Any,
        combine: Callable[[list[_Contribution]], Any],
    ) -> Any:
        if group.me != self._rank:
            raise CollectiveMisuseError(
                f"Rank {self._rank} used a group built for rank {group.me}"
            )
        seq = self._sequence[group.members]
        self._sequence[group.members] = seq + 1
        if self._fabric.settings.record_trace:
            self.trace.append(TraceEntry(op=op, members=group.members, root=root))

        mine = _Contribution(source=self._rank, op=op, root=root, value=value)
        up: Channel = ("collective", group.members, seq)
        down: Channel = ("collective-result", group.members, seq)

        if self._rank == group.leader:
            contributions = [mine]
            for member in group.members[1:]:
                contributions.append(self._fabric.take(member, self._rank, up))
            result = _combine_checked(contributions, combine)
            for member in group.members[1:]:
                self._fabric.put(self._rank, member, down, _private_copy(result))
        else:
            self._fabric.put(self._rank, group.leader, up, mine)
            result = self._fabric.take(group.leader, self._rank, down)

        if isinstance(result, _Mismatch):
            raise CollectiveMisuseError(result.message)
        logger.debug("rank %d %s over %s (#%d)", self._rank, op, group.members, seq)
        return result

    def _jitter(self) -> None:
        limit = self._fabric.settings.jitter_s
        if limit > 0:
            time.sleep(self._rng.uniform(0, limit))


def _combine_checked(
    contributions: list[_Contribution],
    combine: Callable[[list[_Contribution]], Any],
) -> Any:
    first = contributions[0]
    for c in contributions[1:]:
        if c.op != first.op or c.root != first.root:
            return _Mismatch(
                f"Collective mismatch: rank {first.source} called {first.op} (root {first.root}) "
                f"but rank {c.source} called {c.op} (root {c.root})"
            )
    try:
        return combine(contributions)
    except (TypeError, ValueError) as exc:
        return _Mismatch(f"Collective {first.op} could not combine contributions: {exc}")


def _private_copy(result: Any) -> Any:
    if isinstance(result, np.ndarray):
        return result.copy()
    return result


def _pick_root(contributions: list[_Contribution]) -> bytes:
    for c in contributions:
        if c.source == c.root:
            payload: bytes = c.value
            return payload
    raise ValueError("broadcast root did not contribute")


def _reduce_sum(contributions: list[_Contribution]) -> Any:
    acc = contributions[0].value
    for c in contributions[1:]:
        _check_shape(acc, c.value)
        acc = acc + c.value
    return acc


def _reduce_max(contributions: list[_Contribution]) -> Any:
    acc = contributions[0].value
    for c in contributions[1:]:
        _check_shape(acc, c.value)
        acc = np.maximum(acc, c.value) if isinstance(acc, np.ndarray) else max(acc, c.value)
    return acc


def _reduce_max_abs_loc(contributions: list[_Contribution]) -> tuple[float, int]:
    best_value, best_index = contributions[0].value
    for c in contributions[1:]:
        value, index = c.value
        if abs(value) > abs(best_value) or (abs(value) == abs(best_value) and index < best_index):
            best_value, best_index = value, index
    return best_value, int(best_index)


def _check_shape(a: Any, b: Any) -> None:
    if np.shape(a) != np.shape(b):
        raise ValueError(f"shape {np.shape(a)} != {np.shape(b)}")


_REDUCERS: dict[ReduceOp, Callable[[list[_Contribution]], Any]] = {
    ReduceOp.SUM: _reduce_sum,
    ReduceOp.MAX: _reduce_max,
    ReduceOp.MAX_ABS_LOC: _reduce_max_abs_loc,
}


# =============================================================================
# Launch
# =============================================================================


class Launch:
    """Handles and outcome of one in-process launch (kept for inspection)."""

    def __init__(self, ranks: int, settings: TransportSettings) -> None:
        if ranks < 1:
            raise ValueError("`ranks` must be at least 1")
        self.settings = settings
        self.fabric = _Fabric(ranks, settings)
        self.handles = [InProcessTransport(r, self.fabric) for r in range(ranks)]

    def run(self, program: Callable[[RankId, InProcessTransport], T]) -> list[T]:
        ranks = len(self.handles)
        results: list[Any] = [None] * ranks

        def target(rank: RankId) -> None:
            try:
                results[rank] = program(rank, self.handles[rank])
            except BaseException as exc:  # noqa: BLE001 - reported by run()
                self.fabric.abort(rank, exc)

        logger.info("launching %d ranks", ranks)
        threads = [
            threading.Thread(target=target, args=(r,), name=f"gridsolve-rank-{r}", daemon=True)
            for r in range(ranks)
        ]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()

        failure = self.fabric.failure
        if failure is not None:
            rank, exc = failure
            if isinstance(exc, GridSolveError):
                raise exc
            raise CollectiveMisuseError(f"Rank {rank} failed: {exc!r}") from exc
        logger.info("launch of %d ranks finished", ranks)
        return results


def launch(
    ranks: int,
    program: Callable[[RankId, InProcessTransport], T],
    *,
    timeout: float | None = None,
    settings: TransportSettings | None = None,
) -> list[T]:
    """Run ``program(rank, transport)`` once per rank concurrently.

    Args:
        ranks: Number of rank contexts (>= 1).
        program: Per-rank entry point.
        timeout: Deadlock watchdog in seconds; defaults to
            ``GRIDSOLVE_DEADLOCK_TIMEOUT_S`` or 30 s.
        settings: Full transport settings; ``timeout`` overrides its timeout.

    Returns:
        Per-rank results in rank order.

    Raises:
        GridSolveError: The first domain error raised by a rank.
        CollectiveMisuseError: On watchdog timeout or a non-domain rank failure.
    """
    if settings is None:
        settings = TransportSettings.from_env(deadlock_timeout_s=timeout)
    elif timeout is not None:
        settings = settings.model_copy(update={"deadlock_timeout_s": timeout})
    return Launch(ranks, settings).run(program)

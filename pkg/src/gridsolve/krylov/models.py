"""Configuration for the Krylov solvers."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from gridsolve.core import Precision, machine_epsilon


class KrylovConfig(BaseModel):
    """Stopping and breakdown parameters shared by every Krylov solver.

    ``max_iters`` defaults to ``10 * n`` and ``breakdown_eps`` to
    ``100 * eps`` of the operand precision when left unset.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol: float = Field(default=1e-8, gt=0)
    max_iters: int | None = Field(default=None, ge=1)
    restart_m: int = Field(default=30, ge=1)
    breakdown_eps: float | None = Field(default=None, gt=0)
    keep_iterates: bool = False

    def iteration_cap(self, n: int) -> int:
        return self.max_iters if self.max_iters is not None else max(1, 10 * n)

    def breakdown_threshold(self, precision: Precision) -> float:
        if self.breakdown_eps is not None:
            return self.breakdown_eps
        return 100 * machine_epsilon(precision)

"""Pydantic models shared across solvers."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SolveReport(BaseModel):
    """Outcome of one solver run.

    ``residual_history`` holds one relative residual per iteration; GMRES
    appends one entry per inner iteration across restart cycles.
    """

    model_config = ConfigDict(extra="forbid")

    method: str
    iterations: int = Field(default=0, ge=0)
    converged: bool = False
    breakdown: bool = False
    final_relres: float = Field(default=0.0, ge=0.0)
    residual_history: list[float] = Field(default_factory=list)
    iterates: list[list[float]] | None = Field(default=None, exclude=True)

    @model_validator(mode="after")
    def _history_matches_iterations(self) -> SolveReport:
        if len(self.residual_history) != self.iterations:
            raise ValueError(
                f"residual_history has {len(self.residual_history)} entries "
                f"for {self.iterations} iterations"
            )
        return self

"""Test problem generators: matrix and right-hand-side specs.

Specs are written on the command line as ``kind:key=value,...``::

    spd:n=64,seed=3
    poisson2d:n=256
    file:path=A.mtx
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Literal

import numpy as np
import scipy.sparse
from pydantic import BaseModel, ConfigDict, Field, model_validator

from gridsolve.core import DenseMatrix, DenseVector, Precision
from gridsolve.errors import DimensionMismatchError
from gridsolve.matrix_io import load_matrix

logger = logging.getLogger(__name__)

MatrixKind = Literal["random_dense", "spd", "poisson2d", "file", "identity", "zeros"]
RhsKind = Literal["ones", "random", "file"]


def _parse_fields(text: str) -> tuple[str, dict[str, str]]:
    kind, _, rest = text.strip().partition(":")
    fields: dict[str, str] = {}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValueError(f"Malformed spec field '{item}' in '{text}' (expected key=value)")
        fields[key.strip()] = value.strip()
    return kind, fields


class MatrixSpec(BaseModel):
    """How to obtain the system matrix.

    ``spd`` is ``M.T @ M + n * I`` with ``M`` uniform on ``[0, 1)``;
    ``poisson2d`` is the 5-point Laplacian on a ``k x k`` grid, so ``n``
    must be a perfect square ``k**2``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: MatrixKind
    n: int | None = Field(default=None, ge=1)
    seed: int = 0
    path: Path | None = None

    @model_validator(mode="after")
    def _check_fields(self) -> MatrixSpec:
        if self.kind == "file":
            if self.path is None:
                raise ValueError("file matrices need path=...")
        elif self.n is None:
            raise ValueError(f"{self.kind} matrices need n=...")
        if self.kind == "poisson2d" and math.isqrt(self.n or 0) ** 2 != self.n:
            raise ValueError(f"poisson2d needs a square n, got {self.n}")
        return self

    @classmethod
    def parse(cls, text: str, default_seed: int = 0) -> MatrixSpec:
        """Build a spec from ``kind:key=value,...``; ``default_seed`` fills a missing seed."""
        kind, fields = _parse_fields(text)
        data: dict[str, Any] = {"kind": kind, **fields}
        if kind != "file":
            data.setdefault("seed", default_seed)
        return cls.model_validate(data)

    @property
    def symmetric(self) -> bool:
        return self.kind in ("spd", "poisson2d", "identity", "zeros")

    def build(self, precision: Precision = Precision.F64) -> DenseMatrix:
        """Generate (or load) the matrix; identical specs give identical matrices."""
        if self.kind == "file":
            assert self.path is not None
            A = load_matrix(self.path, precision=precision)
            if A.rows != A.cols:
                raise DimensionMismatchError(f"{self.path} holds a {A.rows}x{A.cols} matrix")
            return A
        n = self.n
        assert n is not None
        rng = np.random.default_rng(self.seed)
        if self.kind == "random_dense":
            values = rng.random((n, n))
        elif self.kind == "spd":
            M = rng.random((n, n))
            S = M.T @ M + n * np.eye(n)
            values = (S + S.T) / 2
        elif self.kind == "poisson2d":
            k = math.isqrt(n)
            T = scipy.sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(k, k))
            eye = scipy.sparse.identity(k)
            values = (scipy.sparse.kron(eye, T) + scipy.sparse.kron(T, eye)).toarray()
        elif self.kind == "identity":
            values = np.eye(n)
        else:
            values = np.zeros((n, n))
        logger.debug("generated %s matrix n=%d seed=%d", self.kind, n, self.seed)
        return DenseMatrix.from_array(values, precision)

    def __str__(self) -> str:
        if self.kind == "file":
            return f"file:path={self.path}"
        return f"{self.kind}:n={self.n},seed={self.seed}"


class RhsSpec(BaseModel):
    """How to obtain the right-hand side: ``ones``, ``random[:seed=S]`` or ``file:path=...``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: RhsKind
    seed: int | None = None
    path: Path | None = None

    @model_validator(mode="after")
    def _check_fields(self) -> RhsSpec:
        if self.kind == "file" and self.path is None:
            raise ValueError("file right-hand sides need path=...")
        return self

    @classmethod
    def parse(cls, text: str) -> RhsSpec:
        kind, fields = _parse_fields(text)
        data: dict[str, Any] = {"kind": kind, **fields}
        return cls.model_validate(data)

    def build(self, n: int, precision: Precision = Precision.F64, seed: int = 0) -> DenseVector:
        """Right-hand side of length ``n``; ``seed`` applies when the spec sets none."""
        if self.kind == "ones":
            return DenseVector.from_array(np.ones(n), precision)
        if self.kind == "random":
            rng = np.random.default_rng(self.seed if self.seed is not None else seed)
            return DenseVector.from_array(rng.random(n), precision)
        assert self.path is not None
        B = load_matrix(self.path, precision=precision)
        if B.cols != 1 or B.rows != n:
            raise DimensionMismatchError(
                f"{self.path} holds a {B.rows}x{B.cols} matrix, expected a {n}x1 column"
            )
        return DenseVector.from_array(B.to_numpy()[:, 0], precision)

"""Factorization results."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gridsolve.core import Array, DenseMatrix
from gridsolve.distgrid import DistMatrix


@dataclass
class LuFactors:
    """Packed ``P A = L U``.

    ``packed`` holds L strictly below the diagonal (unit diagonal implied)
    and U on and above it. ``pivots`` is the swap sequence as applied:
    row ``k`` was exchanged with row ``pivots[k]`` at step ``k``.
    """

    packed: DenseMatrix | DistMatrix
    pivots: list[int] = field(default_factory=list)

    @property
    def n(self) -> int:
        if isinstance(self.packed, DistMatrix):
            return self.packed.desc.g_rows
        return self.packed.rows

    @property
    def distributed(self) -> bool:
        return isinstance(self.packed, DistMatrix)

    def unpack(self) -> tuple[Array, Array]:
        """Return ``(L, U)`` as dense numpy arrays (serial factors only)."""
        if isinstance(self.packed, DistMatrix):
            raise TypeError("Gather distributed factors before unpacking")
        a = self.packed.to_numpy()
        return np.tril(a, -1) + np.eye(self.n, dtype=a.dtype), np.triu(a)

    def permute(self, values: Array) -> Array:
        """Apply the swap sequence to the rows of ``values`` (a copy)."""
        out = np.array(values, copy=True)
        for k, p in enumerate(self.pivots):
            if p != k:
                out[[k, p]] = out[[p, k]]
        return out


@dataclass
class CholFactor:
    """Lower Cholesky factor; only the lower triangle of ``lower`` is meaningful."""

    lower: DenseMatrix | DistMatrix

    @property
    def n(self) -> int:
        if isinstance(self.lower, DistMatrix):
            return self.lower.desc.g_rows
        return self.lower.rows

    @property
    def distributed(self) -> bool:
        return isinstance(self.lower, DistMatrix)

    def unpack(self) -> Array:
        """Return L as a dense numpy array with a zero upper triangle."""
        if isinstance(self.lower, DistMatrix):
            raise TypeError("Gather distributed factors before unpacking")
        return np.tril(self.lower.to_numpy())

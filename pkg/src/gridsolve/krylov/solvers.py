"""CG, restarted GMRES, BiCG and BiCGSTAB over any :class:`LinearOperator`.

Every solver returns ``(x, report)`` on convergence. On failure it raises
:class:`MaxIterationsError` or :class:`BreakdownError` carrying the partial
report and the last iterate. Relative residuals are measured against
``||b||``; a zero right-hand side returns the zero vector immediately.
"""

from __future__ import annotations

import logging
import math
from typing import Generic

import numpy as np
from scipy.linalg import solve_triangular

from gridsolve.errors import BreakdownError, DimensionMismatchError, MaxIterationsError
from gridsolve.krylov.models import KrylovConfig
from gridsolve.krylov.operators import LinearOperator, V
from gridsolve.models import SolveReport

logger = logging.getLogger(__name__)


class _Progress(Generic[V]):
    """Residual history, optional iterates and the failure paths of one run."""

    def __init__(self, method: str, A: LinearOperator[V], cfg: KrylovConfig) -> None:
        self.method = method
        self.A = A
        self.cfg = cfg
        self.tol = cfg.tol
        self.cap = cfg.iteration_cap(A.dim)
        self.eps = cfg.breakdown_threshold(A.precision)
        self.history: list[float] = []
        self.iterates: list[list[float]] | None = [] if cfg.keep_iterates else None
        self.relres = 0.0

    @property
    def iterations(self) -> int:
        return len(self.history)

    def record(self, relres: float, x: V) -> None:
        self.relres = relres
        self.history.append(relres)
        if self.iterates is not None:
            self.iterates.append(self.A.snapshot(x))
        logger.debug("%s iteration %d: relres %.3e", self.method, self.iterations, relres)

    def report(self, *, converged: bool, breakdown: bool = False) -> SolveReport:
        return SolveReport(
            method=self.method,
            iterations=self.iterations,
            converged=converged,
            breakdown=breakdown,
            final_relres=self.relres,
            residual_history=list(self.history),
            iterates=self.iterates,
        )

    def done(self, x: V) -> tuple[V, SolveReport]:
        logger.info(
            "%s converged in %d iterations (relres %.3e)",
            self.method,
            self.iterations,
            self.relres,
        )
        return x, self.report(converged=True)

    def breakdown(self, x: V, what: str) -> BreakdownError:
        logger.warning(
            "%s breakdown at iteration %d: %s", self.method, self.iterations, what
        )
        return BreakdownError(
            f"{self.method} breakdown at iteration {self.iterations}: {what}",
            report=self.report(converged=False, breakdown=True),
            solution=x,
        )

    def exhausted(self, x: V) -> MaxIterationsError:
        logger.warning(
            "%s stopped after %d iterations at relres %.3e",
            self.method,
            self.iterations,
            self.relres,
        )
        return MaxIterationsError(
            f"{self.method} did not reach tol {self.tol:.1e} in {self.cap} iterations "
            f"(relres {self.relres:.3e})",
            report=self.report(converged=False),
            solution=x,
        )


def _start(
    method: str, A: LinearOperator[V], b: V, x0: V | None, cfg: KrylovConfig | None
) -> tuple[_Progress[V], V, V, float]:
    """Validate operands and return ``(progress, x, r, ||b||)`` with ``r = b - A x``."""
    cfg = cfg or KrylovConfig()
    A.check(b, "b")
    if x0 is not None:
        A.check(x0, "x0")
    progress: _Progress[V] = _Progress(method, A, cfg)
    logger.info("%s: n=%d tol=%.1e max_iters=%d", method, A.dim, cfg.tol, progress.cap)

    bnorm = A.norm(b)
    if bnorm == 0.0:
        return progress, A.zeros(), A.zeros(), 0.0
    x = A.copy(x0) if x0 is not None else A.zeros()
    r = A.copy(b)
    if x0 is not None:
        Ax = A.zeros()
        A.apply(x, Ax)
        A.axpy(-1.0, Ax, r)
    progress.relres = A.norm(r) / bnorm
    return progress, x, r, bnorm


def _vanishes(value: float, scale: float, eps: float) -> bool:
    return abs(value) <= eps * scale


def cg(
    A: LinearOperator[V],
    b: V,
    x0: V | None = None,
    cfg: KrylovConfig | None = None,
) -> tuple[V, SolveReport]:
    """Conjugate gradients for symmetric positive definite ``A``.

    Raises:
        BreakdownError: If ``<p, A p>`` drops to ``breakdown_eps * ||p||^2``
            or below, which signals that ``A`` is not positive definite.
        MaxIterationsError: If the iteration cap is reached.
    """
    run, x, r, bnorm = _start("cg", A, b, x0, cfg)
    if bnorm == 0.0 or run.relres <= run.tol:
        return run.done(x)

    p = A.copy(r)
    q = A.zeros()
    rr = A.dot(r, r)
    while run.iterations < run.cap:
        A.apply(p, q)
        pq = A.dot(p, q)
        if pq <= run.eps * A.dot(p, p):
            raise run.breakdown(x, f"<p, Ap> = {pq:.3e}")
        alpha = rr / pq
        A.axpy(alpha, p, x)
        A.axpy(-alpha, q, r)
        rr_next = A.dot(r, r)
        run.record(math.sqrt(rr_next) / bnorm, x)
        if run.relres <= run.tol:
            return run.done(x)
        beta = rr_next / rr
        rr = rr_next
        A.scal(beta, p)
        A.axpy(1.0, r, p)
    raise run.exhausted(x)


def gmres(
    A: LinearOperator[V],
    b: V,
    x0: V | None = None,
    cfg: KrylovConfig | None = None,
) -> tuple[V, SolveReport]:
    """Restarted GMRES(m) with modified Gram-Schmidt and Givens rotations.

    One history entry is appended per inner iteration; within a restart
    cycle the recorded residuals never increase. A vanishing Arnoldi
    vector ends the cycle early and, when the least-squares residual is
    already below ``tol``, the run converges.

    Raises:
        BreakdownError: If the projected Hessenberg matrix is singular.
        MaxIterationsError: If the total inner-iteration cap is reached.
    """
    run, x, r, bnorm = _start("gmres", A, b, x0, cfg)
    if bnorm == 0.0 or run.relres <= run.tol:
        return run.done(x)

    m = run.cfg.restart_m
    beta = A.norm(r)
    while True:
        basis = [A.scal(1.0 / beta, A.copy(r))]
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        k = 0
        for j in range(m):
            if run.iterations >= run.cap:
                break
            w = A.zeros()
            A.apply(basis[j], w)
            scale = A.norm(w)
            for i in range(j + 1):
                H[i, j] = A.dot(w, basis[i])
                A.axpy(-H[i, j], basis[i], w)
            h_next = A.norm(w)
            H[j + 1, j] = h_next
            for i in range(j):
                top = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = top
            denom = math.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                raise run.breakdown(x, "singular Hessenberg matrix")
            cs[j] = H[j, j] / denom
            sn[j] = H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            # x is only updated at the end of the cycle
            run.record(abs(g[j + 1]) / bnorm, x)
            if run.relres <= run.tol or h_next <= run.eps * scale:
                break
            basis.append(A.scal(1.0 / h_next, w))

        y = solve_triangular(H[:k, :k], g[:k], lower=False)
        for i in range(k):
            A.axpy(float(y[i]), basis[i], x)
        if run.iterates is not None and k:
            run.iterates[-1] = A.snapshot(x)
        if run.relres <= run.tol:
            return run.done(x)
        if run.iterations >= run.cap:
            raise run.exhausted(x)

        r = A.copy(b)
        Ax = A.zeros()
        A.apply(x, Ax)
        A.axpy(-1.0, Ax, r)
        beta = A.norm(r)
        if beta == 0.0:
            run.relres = 0.0
            return run.done(x)
        logger.debug("gmres restart after %d iterations", run.iterations)


def bicg(
    A: LinearOperator[V],
    b: V,
    x0: V | None = None,
    cfg: KrylovConfig | None = None,
) -> tuple[V, SolveReport]:
    """Biconjugate gradients with shadow residual ``r~0 = r0``.

    Needs ``A.apply_transpose``.

    Raises:
        DimensionMismatchError: If the operator has no transpose.
        BreakdownError: If ``<r~, r>`` or ``<p~, A p>`` vanishes relative to
            the norms of its factors.
        MaxIterationsError: If the iteration cap is reached.
    """
    if not A.has_transpose:
        raise DimensionMismatchError("bicg needs an operator with a transpose")
    run, x, r, bnorm = _start("bicg", A, b, x0, cfg)
    if bnorm == 0.0 or run.relres <= run.tol:
        return run.done(x)

    rt = A.copy(r)
    p = A.copy(r)
    pt = A.copy(rt)
    q = A.zeros()
    qt = A.zeros()
    rho = A.dot(rt, r)
    while run.iterations < run.cap:
        if _vanishes(rho, A.norm(rt) * A.norm(r), run.eps):
            raise run.breakdown(x, f"<r~, r> = {rho:.3e}")
        A.apply(p, q)
        A.apply_transpose(pt, qt)
        ptq = A.dot(pt, q)
        if _vanishes(ptq, A.norm(pt) * A.norm(q), run.eps):
            raise run.breakdown(x, f"<p~, Ap> = {ptq:.3e}")
        alpha = rho / ptq
        A.axpy(alpha, p, x)
        A.axpy(-alpha, q, r)
        A.axpy(-alpha, qt, rt)
        run.record(A.norm(r) / bnorm, x)
        if run.relres <= run.tol:
            return run.done(x)
        rho_next = A.dot(rt, r)
        beta = rho_next / rho
        rho = rho_next
        A.scal(beta, p)
        A.axpy(1.0, r, p)
        A.scal(beta, pt)
        A.axpy(1.0, rt, pt)
    raise run.exhausted(x)


def bicgstab(
    A: LinearOperator[V],
    b: V,
    x0: V | None = None,
    cfg: KrylovConfig | None = None,
) -> tuple[V, SolveReport]:
    """BiCGSTAB with shadow residual ``r^ = r0``.

    Each iteration is two half steps. When the half-step residual ``s``
    already meets ``tol`` the iteration stops there; the history holds one
    entry per iteration either way.

    Raises:
        BreakdownError: If ``rho``, ``<r^, v>`` or ``<t, s>`` vanishes
            relative to the norms of its factors.
        MaxIterationsError: If the iteration cap is reached.
    """
    run, x, r, bnorm = _start("bicgstab", A, b, x0, cfg)
    if bnorm == 0.0 or run.relres <= run.tol:
        return run.done(x)

    rhat = A.copy(r)
    rhat_norm = A.norm(rhat)
    p = A.copy(r)
    v = A.zeros()
    t = A.zeros()
    rho_prev = alpha = omega = 1.0
    while run.iterations < run.cap:
        rho = A.dot(rhat, r)
        if _vanishes(rho, rhat_norm * A.norm(r), run.eps):
            raise run.breakdown(x, f"rho = {rho:.3e}")
        if run.iterations > 0:
            beta = (rho / rho_prev) * (alpha / omega)
            A.axpy(-omega, v, p)
            A.scal(beta, p)
            A.axpy(1.0, r, p)
        A.apply(p, v)
        rv = A.dot(rhat, v)
        if _vanishes(rv, rhat_norm * A.norm(v), run.eps):
            raise run.breakdown(x, f"<r^, v> = {rv:.3e}")
        alpha = rho / rv

        s = A.copy(r)
        A.axpy(-alpha, v, s)
        s_norm = A.norm(s)
        if s_norm / bnorm <= run.tol:
            A.axpy(alpha, p, x)
            run.record(s_norm / bnorm, x)
            return run.done(x)

        A.apply(s, t)
        ts = A.dot(t, s)
        if _vanishes(ts, A.norm(t) * s_norm, run.eps):
            raise run.breakdown(x, f"omega numerator <t, s> = {ts:.3e}")
        omega = ts / A.dot(t, t)
        A.axpy(alpha, p, x)
        A.axpy(omega, s, x)
        r = s
        A.axpy(-omega, t, r)
        run.record(A.norm(r) / bnorm, x)
        if run.relres <= run.tol:
            return run.done(x)
        rho_prev = rho
    raise run.exhausted(x)

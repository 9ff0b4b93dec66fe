"""Dense two-phase simplex for small linear programs in equality form.

Solves ``min c @ x  s.t.  A @ x = b, x >= 0`` with a full tableau and Bland's
smallest-index rule, which cannot cycle.  Problem sizes in this package are a
few hundred columns at most, so a dense tableau is adequate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8


@dataclass
class LPResult:
    """Outcome of :func:`solve`.

    ``status`` is one of ``"optimal"``, ``"infeasible"`` or ``"unbounded"``.
    ``residual`` is ``max |A x - b|`` for the returned ``x``; for an infeasible
    program it is the residual left after phase one.
    """

    status: str
    x: np.ndarray | None
    fun: float
    residual: float

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0


def _run_simplex(T, basis, ncols, pivot_tol, max_iter):
    """Iterate on tableau ``T`` over columns ``[0, ncols)``; returns a status."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        reduced = T[m, :ncols]
        candidates = np.flatnonzero(reduced < -pivot_tol)
        if candidates.size == 0:
            return "optimal"
        col = int(candidates[0])
        column = T[:m, col]
        rows = np.flatnonzero(column > pivot_tol)
        if rows.size == 0:
            return "unbounded"
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + pivot_tol * max(1.0, abs(best))]
        # Bland: leave with the smallest basic variable index among ties
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        rhs = T[:m, -1]
        rhs[(rhs < 0) & (rhs > -pivot_tol)] = 0.0
    raise RuntimeError("simplex iteration limit reached")


def solve(
    c,
    A,
    b,
    *,
    feas_tol: float = FEAS_TOL,
    pivot_tol: float = PIVOT_TOL,
    max_iter: int = 100_000,
) -> LPResult:
    """Minimise ``c @ x`` subject to ``A @ x = b`` and ``x >= 0``."""
    A = np.array(A, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    m, n = A.shape
    if b.shape[0] != m or c.shape[0] != n:
        raise ValueError("inconsistent LP dimensions")
    A0, b0 = A.copy(), b.copy()

    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n, n + m))

    status = _run_simplex(T, basis, n + m, pivot_tol, max_iter)
    assert status == "optimal"  # phase one is bounded below by zero

    x = _extract(T, basis, n)
    residual = float(np.max(np.abs(A0 @ x - b0))) if m else 0.0
    if residual > feas_tol:
        return LPResult("infeasible", None, float("nan"), residual)

    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for i in range(m):
        if basis[i] < n:
            keep.append(i)
            continue
        row = T[i, :n]
        nz = np.flatnonzero(np.abs(row) > pivot_tol)
        if nz.size:
            _pivot(T, i, int(nz[0]))
            basis[i] = int(nz[0])
            keep.append(i)
    T2 = np.vstack([T[keep][:, : n], np.zeros((1, n))])
    T2 = np.hstack([T2, np.append(T[keep, -1], 0.0)[:, None]])
    basis2 = [basis[i] for i in keep]
    m2 = len(keep)
    T2[m2, :n] = c
    for i, j in enumerate(basis2):
        if c[j] != 0.0:
            T2[m2] -= c[j] * T2[i]

    status = _run_simplex(T2, basis2, n, pivot_tol, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, float("-inf"), residual)
    x = _extract(T2, basis2, n)
    residual = float(np.max(np.abs(A0 @ x - b0))) if m else 0.0
    return LPResult("optimal", x, float(c @ x), residual)


def _extract(T, basis, n):
    x = np.zeros(n)
    for i, j in enumerate(basis):
        if j < n:
            x[j] = max(T[i, -1], 0.0)
    return x

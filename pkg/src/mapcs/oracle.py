"""Exact l1 minimization for small problems.

Two independent routes to ``min ||x||_1 s.t. F x = y``:

* :func:`l1_min_lp` -- two-phase primal simplex on the split form
  ``x = u - v``, ``u, v >= 0``, with Bland's rule throughout.
* :func:`l1_min_enum` -- brute force over all square column subsets, using
  the fact that an LP optimum is attained at a basic solution.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance

PIVOT_TOL = 1e-10
TIE_TOL = 1e-9
DISTINCT_TOL = 1e-8


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    DEGENERATE_TIE = "degenerate-tie"


class SimplexIterationLimit(RuntimeError):
    pass


@dataclass
class LpSolution:
    x_star: np.ndarray
    objective: float
    status: LpStatus
    message: str = ""

    @property
    def solved(self) -> bool:
        return self.status in (LpStatus.OPTIMAL, LpStatus.DEGENERATE_TIE)

    def to_json(self) -> str:
        obj = self.objective if np.isfinite(self.objective) else None
        return json.dumps({"x_star": [float(v) for v in self.x_star],
                           "objective": obj, "status": self.status.value})


def row_rank(F: np.ndarray, tol: float = PIVOT_TOL) -> int:
    """Rank by Gaussian elimination with partial pivoting."""
    A = np.array(F, dtype=np.float64)
    m, n = A.shape
    rank = 0
    for col in range(n):
        if rank == m:
            break
        p = rank + int(np.argmax(np.abs(A[rank:, col])))
        if abs(A[p, col]) < tol:
            continue
        A[[rank, p]] = A[[p, rank]]
        A[rank + 1:] -= np.outer(A[rank + 1:, col] / A[rank, col], A[rank])
        rank += 1
    return rank


class _Tableau:
    """Dense simplex tableau ``[A | b]`` with an explicit basis list."""

    def __init__(self, A, b, basis):
        self.T = np.hstack([A, b[:, None]]).astype(np.float64)
        self.basis = list(basis)
        self.pivots = 0

    @property
    def rhs(self):
        return self.T[:, -1]

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        others = np.arange(T.shape[0]) != row
        T[others] -= np.outer(T[others, col], T[row])
        self.basis[row] = col
        self.pivots += 1

    def reduced_costs(self, c):
        cb = c[self.basis]
        return c - cb @ self.T[:, :-1]

    def solve(self, c, allowed, limit):
        """Minimize ``c @ w`` using Bland's rule; returns False when unbounded."""
        while True:
            r = self.reduced_costs(c)
            entering = next((j for j in allowed if r[j] < -PIVOT_TOL), None)
            if entering is None:
                return True
            col = self.T[:, entering]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return False
            ratios = self.rhs[rows] / col[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            leave = min(tied, key=lambda i: self.basis[i])
            self.pivot(leave, entering)
            if self.pivots > limit:
                raise SimplexIterationLimit(f"simplex exceeded {limit} pivots")


def l1_min_lp(instance: ProblemInstance, max_n: int = 200) -> LpSolution:
    F = instance.matrix.F
    y = instance.y
    m, n = F.shape
    if n > max_n:
        raise ValueError(f"oracle is meant for n <= {max_n}, got {n}")
    if row_rank(F) < m:
        return LpSolution(np.full(n, np.nan), np.inf, LpStatus.INFEASIBLE,
                          "matrix is row-rank deficient")

    sign = np.where(y < 0, -1.0, 1.0)
    A = np.hstack([F, -F]) * sign[:, None]
    b = y * sign
    nw = 2 * n
    tab = _Tableau(np.hstack([A, np.eye(m)]), b, range(nw, nw + m))
    limit = 50 * (n + m)

    # phase 1: drive the artificials to zero
    c1 = np.concatenate([np.zeros(nw), np.ones(m)])
    tab.solve(c1, range(nw + m), limit)
    if tab.rhs[[i for i, j in enumerate(tab.basis) if j >= nw]].sum() > 1e-9:
        return LpSolution(np.full(n, np.nan), np.inf, LpStatus.INFEASIBLE, "phase 1 residual > 0")
    for row, j in enumerate(list(tab.basis)):
        if j >= nw:
            cand = np.flatnonzero(np.abs(tab.T[row, :nw]) > PIVOT_TOL)
            if cand.size == 0:
                return LpSolution(np.full(n, np.nan), np.inf, LpStatus.INFEASIBLE,
                                  "redundant constraint row")
            tab.pivot(row, int(cand[0]))

    # phase 2 over the structural columns only
    c2 = np.concatenate([np.ones(nw), np.zeros(m)])
    if not tab.solve(c2, range(nw), limit):
        return LpSolution(np.full(n, np.nan), -np.inf, LpStatus.UNBOUNDED)

    w = np.zeros(nw + m)
    w[tab.basis] = tab.rhs
    w[np.abs(w) < 1e-12 * max(1.0, float(np.max(np.abs(w))))] = 0.0  # degenerate basics
    x = w[:n] - w[n:nw]
    status = LpStatus.DEGENERATE_TIE if _has_alternative_optimum(tab, c2, nw, n) else LpStatus.OPTIMAL
    return LpSolution(x, float(np.abs(x).sum()), status)


def _has_alternative_optimum(tab: _Tableau, c, nw: int, n: int) -> bool:
    """True when a zero-reduced-cost pivot reaches a different ``x``."""
    r = tab.reduced_costs(c)
    basic = set(tab.basis)
    for j in range(nw):
        if j in basic or abs(r[j]) > TIE_TOL:
            continue
        col = tab.T[:, j]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            continue
        theta = float((tab.rhs[rows] / col[rows]).min())
        if theta <= DISTINCT_TOL:
            continue
        dw = np.zeros(nw + tab.T.shape[0])
        dw[j] = theta
        dw[tab.basis] -= theta * col
        dx = dw[:n] - dw[n:nw]
        if np.max(np.abs(dx)) > DISTINCT_TOL:
            return True
    return False


def _batched_solve(A: np.ndarray, b: np.ndarray, tol: float = PIVOT_TOL):
    """Gaussian elimination with partial pivoting over a stack of systems.

    Returns ``(x, ok)`` where ``ok`` flags systems whose pivots all exceeded ``tol``.
    """
    A = A.copy()
    b = b.copy()
    B, m, _ = A.shape
    ok = np.ones(B, dtype=bool)
    idx = np.arange(B)
    for k in range(m):
        p = k + np.argmax(np.abs(A[:, k:, k]), axis=1)
        ok &= np.abs(A[idx, p, k]) >= tol
        rk, rp = A[idx, k].copy(), A[idx, p].copy()
        A[idx, k], A[idx, p] = rp, rk
        bk, bp = b[idx, k].copy(), b[idx, p].copy()
        b[idx, k], b[idx, p] = bp, bk
        piv = np.where(ok, A[:, k, k], 1.0)
        f = A[:, k + 1:, k] / piv[:, None]
        A[:, k + 1:, :] -= f[:, :, None] * A[:, k, None, :]
        b[:, k + 1:] -= f * b[:, k, None]
    x = np.zeros_like(b)
    for k in range(m - 1, -1, -1):
        piv = np.where(ok, A[:, k, k], 1.0)
        x[:, k] = (b[:, k] - np.einsum("bj,bj->b", A[:, k, k + 1:], x[:, k + 1:])) / piv
    return x, ok


def l1_min_enum(instance: ProblemInstance, chunk: int = 20000) -> LpSolution:
    F = instance.matrix.F
    y = instance.y
    m, n = F.shape
    if n > 20 or m > 12:
        raise ValueError(f"enumeration limited to n <= 20, m <= 12 (got n={n}, m={m})")
    if m > n:
        raise ValueError("enumeration needs m <= n")

    best_obj = np.inf
    cands = []  # (objective, x) of feasible basic solutions near the running best
    subsets = itertools.combinations(range(n), m)
    while True:
        block = np.array(list(itertools.islice(subsets, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        A = F[:, block].transpose(1, 0, 2)
        xs, ok = _batched_solve(A, np.broadcast_to(y, (len(block), m)))
        if not ok.any():
            continue
        xs, block = xs[ok], block[ok]
        full = np.zeros((len(block), n))
        np.put_along_axis(full, block, xs, axis=1)
        feas = np.max(np.abs(full @ F.T - y), axis=1) < 1e-8
        full = full[feas]
        obj = np.abs(full).sum(axis=1)
        if obj.size == 0:
            continue
        best_obj = min(best_obj, float(obj.min()))
        keep = obj <= best_obj + TIE_TOL
        cands.extend(zip(obj[keep], full[keep]))
        cands = [(o, x) for o, x in cands if o <= best_obj + TIE_TOL]

    if not cands:
        return LpSolution(np.full(n, np.nan), np.inf, LpStatus.INFEASIBLE, "no feasible basic solution")
    i_best = int(np.argmin([o for o, _ in cands]))
    obj, x = cands[i_best]
    tie = any(np.max(np.abs(xc - x)) > DISTINCT_TOL for _, xc in cands)
    return LpSolution(x, float(obj), LpStatus.DEGENERATE_TIE if tie else LpStatus.OPTIMAL)

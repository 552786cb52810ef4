"""Bounded-variable primal revised simplex.

The LP ``min c'x  s.t.  row_lo <= A x <= row_hi,  lb <= x <= ub`` is put in
the form ``A x - s = 0`` with one logical column ``s_i`` per row carrying the
row bounds. A basis is described by a status per column (basic, at lower,
at upper, free at zero).

Let ``S`` be the basic structural columns and ``R`` the rows whose logical is
nonbasic ("tight" rows); ``|S| == |R|`` always holds. Every FTRAN/BTRAN with
the full ``m x m`` basis reduces to a solve with the ``|S| x |S|`` block
``A[R, S]``, which is small when the model has many more rows than columns
(tangent-cut families produce exactly that shape).

Phase 1 minimizes the sum of bound infeasibilities of the basic variables
(composite method), so warm starts from a parent basis after bound changes
need no artificial columns. Pricing is Dantzig with a Bland fallback when
the objective stalls; the ratio test is Harris' two-pass variant.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .model import LPArrays, MilpModel

logger = logging.getLogger(__name__)

BASIC, AT_LB, AT_UB, FREE = 0, 1, 2, 3

FEAS_TOL = 1e-7
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
HARRIS_TOL = 1e-9
STALL_LIMIT = 40


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration limit"
    NUMERICAL = "numerical breakdown"


@dataclass
class LPResult:
    status: LPStatus
    x: Optional[np.ndarray]
    objective: float
    iterations: int = 0
    basis: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return self.status == LPStatus.OPTIMAL


class _Singular(Exception):
    pass


class BoundedSimplex:
    """Reusable solver for one constraint matrix; bounds and costs vary per call."""

    def __init__(self, A: np.ndarray, row_lo: np.ndarray, row_hi: np.ndarray) -> None:
        A = np.asarray(A, dtype=float)
        self.m, self.n = A.shape
        scale = np.abs(A).max(axis=1) if self.n else np.ones(self.m)
        scale = np.where(scale > 0, 1.0 / np.where(scale > 0, scale, 1.0), 1.0)
        self.row_scale = scale
        # column-major: the basis loop gathers columns far more often than rows
        self.A = np.asfortranarray(A * scale[:, None])
        self.row_lo = row_lo * scale
        self.row_hi = row_hi * scale

    def _initial_status(self, lo: np.ndarray, hi: np.ndarray, status: Optional[np.ndarray]) -> np.ndarray:
        n, m = self.n, self.m
        if status is not None and len(status) == n + m:
            st = np.array(status, dtype=np.int8)
            if np.count_nonzero(st[:n] == BASIC) != np.count_nonzero(st[n:] != BASIC):
                st = None
        else:
            st = None
        if st is None:
            st = np.empty(n + m, dtype=np.int8)
            st[:n] = AT_LB
            st[n:] = BASIC
        nb = st != BASIC
        fin_lo = np.isfinite(lo)
        fin_hi = np.isfinite(hi)
        # repair nonbasic statuses that point at an infinite bound
        bad_lb = nb & (st == AT_LB) & ~fin_lo
        st[bad_lb] = np.where(fin_hi[bad_lb], AT_UB, FREE)
        bad_ub = nb & (st == AT_UB) & ~fin_hi
        st[bad_ub] = np.where(fin_lo[bad_ub], AT_LB, FREE)
        free = nb & (st == FREE) & (fin_lo | fin_hi)
        st[free] = np.where(fin_lo[free], AT_LB, AT_UB)
        return st

    def solve(
        self,
        c: np.ndarray,
        lb: np.ndarray,
        ub: np.ndarray,
        status: Optional[np.ndarray] = None,
        max_iter: Optional[int] = None,
    ) -> LPResult:
        n, m = self.n, self.m
        lo = np.concatenate([np.asarray(lb, dtype=float), self.row_lo])
        hi = np.concatenate([np.asarray(ub, dtype=float), self.row_hi])
        if np.any(lo > hi + FEAS_TOL):
            return LPResult(LPStatus.INFEASIBLE, None, math.nan)
        hi = np.maximum(hi, lo)
        if max_iter is None:
            max_iter = 50 * n + min(m, 20 * n) + 1000
        st = self._initial_status(lo, hi, status)
        try:
            return self._run(np.asarray(c, dtype=float), lo, hi, st, max_iter)
        except _Singular:
            if status is None:
                return LPResult(LPStatus.NUMERICAL, None, math.nan)
            logger.debug("warm basis singular, restarting from slack basis")
        try:
            return self._run(np.asarray(c, dtype=float), lo, hi, self._initial_status(lo, hi, None), max_iter)
        except _Singular:
            return LPResult(LPStatus.NUMERICAL, None, math.nan)

    def _run(self, c, lo, hi, st, max_iter) -> LPResult:
        A = self.A
        n, m = self.n, self.m
        span = hi - lo
        best_measure = math.inf
        last_phase = None
        stall = 0
        bland = False
        for it in range(max_iter):
            S = np.flatnonzero(st[:n] == BASIC)
            is_l = st[n:] == BASIC
            L = np.flatnonzero(is_l)
            R = np.flatnonzero(~is_l)
            k = len(S)
            if k != len(R):
                raise _Singular()

            val = np.where(st == AT_UB, hi, np.where(st == AT_LB, lo, 0.0))
            val[st == BASIC] = 0.0
            x = val[:n].copy()
            lu = None
            AS = A[:, S]
            if k:
                M = AS[R]
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", LinAlgWarning)
                    lu = lu_factor(M, check_finite=False)
                diag = np.abs(np.diag(lu[0]))
                if diag.min() <= 1e-12 * max(1.0, diag.max()):
                    raise _Singular()
                x[S] = lu_solve(lu, val[n + R] - A[R] @ x, check_finite=False)
            s = A @ x
            full = np.concatenate([x, s])
            full[n + R] = val[n + R]

            basic = np.concatenate([S, n + L])
            xb = full[basic]
            lb_b = lo[basic]
            ub_b = hi[basic]
            below = xb < lb_b - FEAS_TOL
            above = xb > ub_b + FEAS_TOL
            phase1 = bool(below.any() or above.any())

            if phase1:
                cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                cn = np.zeros(n)
                measure = float(np.sum((lb_b - xb)[below]) + np.sum((xb - ub_b)[above]))
            else:
                cb = np.concatenate([c[S], np.zeros(len(L))])
                cn = c
                measure = float(c @ x)
            if phase1 != last_phase:
                best_measure = math.inf
                stall = 0
                bland = False
                last_phase = phase1
            if measure < best_measure - 1e-12 * max(1.0, abs(best_measure)):
                best_measure = measure
                stall = 0
                bland = False
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True

            # duals: y_L = -c_L, A[R,S]^T y_R = c_S - A[L,S]^T y_L
            y = np.zeros(m)
            y[L] = -cb[k:]
            if k:
                rhs = cb[:k] - AS.T @ y
                y[R] = lu_solve(lu, rhs, trans=1, check_finite=False)
            d = np.empty(n + m)
            d[:n] = cn - A.T @ y
            d[n:] = y
            nonbasic = st != BASIC
            movable = nonbasic & (span > 0)
            can_inc = movable & ((st == AT_LB) | (st == FREE)) & (d < -DUAL_TOL)
            can_dec = movable & ((st == AT_UB) | (st == FREE)) & (d > DUAL_TOL)
            eligible = can_inc | can_dec
            if not eligible.any():
                if phase1:
                    return LPResult(LPStatus.INFEASIBLE, None, math.nan, it, st)
                x = np.clip(full[:n], lo[:n], hi[:n])
                return LPResult(LPStatus.OPTIMAL, x, float(c @ x), it, st.copy())
            cand = np.flatnonzero(eligible)
            q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            dirn = 1.0 if can_inc[q] else -1.0

            if q < n:
                col = A[:, q]
            else:
                col = np.zeros(m)
                col[q - n] = -1.0
            alpha = np.empty(len(basic))
            if k:
                alpha[:k] = lu_solve(lu, col[R], check_finite=False)
                alpha[k:] = (AS @ alpha[:k])[L] - col[L]
            else:
                alpha[:] = -col[L]
            delta = -dirn * alpha

            t_exact = np.full(len(basic), np.inf)
            t_relax = np.full(len(basic), np.inf)
            target = np.zeros(len(basic), dtype=np.int8)
            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            feas = ~(below | above)
            # decreasing basics
            msk = dec & above
            t_exact[msk] = (xb[msk] - ub_b[msk]) / -delta[msk]
            t_relax[msk] = t_exact[msk]
            target[msk] = AT_UB
            msk = dec & feas & np.isfinite(lb_b)
            t_exact[msk] = np.maximum(xb[msk] - lb_b[msk], 0.0) / -delta[msk]
            t_relax[msk] = (np.maximum(xb[msk] - lb_b[msk], 0.0) + HARRIS_TOL) / -delta[msk]
            target[msk] = AT_LB
            # increasing basics
            msk = inc & below
            t_exact[msk] = (lb_b[msk] - xb[msk]) / delta[msk]
            t_relax[msk] = t_exact[msk]
            target[msk] = AT_LB
            msk = inc & feas & np.isfinite(ub_b)
            t_exact[msk] = np.maximum(ub_b[msk] - xb[msk], 0.0) / delta[msk]
            t_relax[msk] = (np.maximum(ub_b[msk] - xb[msk], 0.0) + HARRIS_TOL) / delta[msk]
            target[msk] = AT_UB

            theta_max = t_relax.min() if len(basic) else np.inf
            if np.isfinite(theta_max):
                pool = np.flatnonzero(t_exact <= theta_max)
                if bland:
                    # textbook ratio test; Harris' tolerance can re-admit cycling
                    tmin = t_exact.min()
                    ties = np.flatnonzero(t_exact <= tmin + 1e-15)
                    r = int(ties[np.argmin(basic[ties])])
                else:
                    r = int(pool[np.argmax(np.abs(delta[pool]))])
                theta = max(float(t_exact[r]), 0.0)
            else:
                r = -1
                theta = np.inf

            if np.isfinite(span[q]) and span[q] <= theta:
                st[q] = AT_UB if dirn > 0 else AT_LB
                continue
            if r < 0:
                if phase1:
                    raise _Singular()
                return LPResult(LPStatus.UNBOUNDED, None, -math.inf, it, st)
            leave = int(basic[r])
            st[q] = BASIC
            st[leave] = AT_LB if span[leave] == 0 else target[r]
        return LPResult(LPStatus.ITERATION_LIMIT, None, math.nan, max_iter, st)


def _highs(arr: LPArrays, lb, ub) -> LPResult:
    from scipy.optimize import linprog

    A = arr.A
    eq = np.isfinite(arr.row_lo) & np.isfinite(arr.row_hi) & (arr.row_lo == arr.row_hi)
    up = np.isfinite(arr.row_hi) & ~eq
    dn = np.isfinite(arr.row_lo) & ~eq
    A_ub = np.vstack([A[up], -A[dn]])
    b_ub = np.concatenate([arr.row_hi[up], -arr.row_lo[dn]])
    bounds = [(None if not np.isfinite(a) else a, None if not np.isfinite(b) else b) for a, b in zip(lb, ub)]
    res = linprog(
        arr.c,
        A_ub=A_ub if len(b_ub) else None,
        b_ub=b_ub if len(b_ub) else None,
        A_eq=A[eq] if eq.any() else None,
        b_eq=arr.row_lo[eq] if eq.any() else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 0:
        return LPResult(LPStatus.OPTIMAL, np.asarray(res.x), float(res.fun), int(res.nit))
    if res.status == 2:
        return LPResult(LPStatus.INFEASIBLE, None, math.nan, int(res.nit))
    if res.status == 3:
        return LPResult(LPStatus.UNBOUNDED, None, -math.inf, int(res.nit))
    if res.status == 1:
        return LPResult(LPStatus.ITERATION_LIMIT, None, math.nan, int(res.nit))
    return LPResult(LPStatus.NUMERICAL, None, math.nan, int(res.nit))


def solver_for(model: MilpModel) -> BoundedSimplex:
    arr = model.arrays()
    cached = getattr(model, "_simplex", None)
    if cached is None or cached[0] is not arr:
        cached = (arr, BoundedSimplex(arr.A, arr.row_lo, arr.row_hi))
        model._simplex = cached  # type: ignore[attr-defined]
    return cached[1]


def solve_lp(
    model: MilpModel,
    lb: Optional[np.ndarray] = None,
    ub: Optional[np.ndarray] = None,
    basis: Optional[np.ndarray] = None,
    *,
    backend: str = "simplex",
    max_iter: Optional[int] = None,
) -> LPResult:
    """Solve the continuous relaxation of ``model`` (integrality ignored).

    ``lb``/``ub`` override the column bounds; ``basis`` is a status vector
    returned by an earlier solve of the same model and is used as a warm start.
    """
    arr = model.arrays()
    lb = arr.lb if lb is None else lb
    ub = arr.ub if ub is None else ub
    if backend == "highs":
        res = _highs(arr, lb, ub)
    elif backend == "simplex":
        res = solver_for(model).solve(arr.c, lb, ub, basis, max_iter)
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    if res.x is not None:
        res.objective += model.objective_offset
    return res

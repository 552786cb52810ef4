"""Best-first branch-and-bound over binary columns with branching priorities."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .model import MilpModel
from .simplex import LPStatus, solve_lp

logger = logging.getLogger(__name__)

INT_TOL = 1e-6
GAP_EPS = 1e-12


class BnBStatus(str, Enum):
    OPTIMAL = "optimal"
    GAP_REACHED = "gap reached"
    TIME_LIMIT = "time limit"
    UNRESOLVED = "unresolved nodes"
    INFEASIBLE = "infeasible"


@dataclass
class BnBResult:
    status: BnBStatus
    incumbent: Optional[np.ndarray]
    objective: float
    lower_bound: float
    gap: float
    nodes_explored: int = 0
    nodes_branched: int = 0
    branch_log: list[int] = field(default_factory=list)
    incumbent_history: list[float] = field(default_factory=list)
    lp_iterations: int = 0
    wall_time_s: float = 0.0

    @property
    def has_incumbent(self) -> bool:
        return self.incumbent is not None


def relative_gap(upper: float, lower: float) -> float:
    if not math.isfinite(upper):
        return math.inf
    return max(0.0, (upper - lower) / max(abs(upper), GAP_EPS))


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)
    basis: Optional[np.ndarray] = field(compare=False, default=None)


def _pick_branch(x: np.ndarray, binaries: np.ndarray, priority: np.ndarray) -> int:
    """Highest priority first, then most fractional, then lowest column."""
    vals = x[binaries]
    frac = np.abs(vals - np.round(vals))
    fractional = binaries[frac > INT_TOL]
    if len(fractional) == 0:
        return -1
    dist = np.abs(x[fractional] - 0.5)
    order = np.lexsort((fractional, dist, -priority[fractional]))
    return int(fractional[order[0]])


def branch_and_bound(
    m: MilpModel,
    gap_target: float = 0.0,
    time_limit_s: float = 1800.0,
    *,
    known_lower_bound: Optional[float] = None,
    backend: str = "simplex",
    node_limit: Optional[int] = None,
) -> BnBResult:
    """Minimize ``m`` over its binaries.

    Nodes are explored best-first on the parent LP bound (ties by creation
    order), so the search is deterministic. The run stops once the relative
    gap ``(UB - LB) / UB`` is at most ``gap_target`` or the time limit hits.
    ``known_lower_bound`` lets callers that already hold a valid bound (e.g.
    from a coarser relaxation) stop as soon as an incumbent reaches it.
    """
    if gap_target < 0:
        raise ValueError("gap_target must be non-negative")
    start = time.perf_counter()
    arr = m.arrays()
    binaries = np.flatnonzero(arr.binary)
    priority = arr.priority
    counter = itertools.count()
    inc_x: Optional[np.ndarray] = None
    inc_obj = math.inf
    history: list[float] = []
    branch_log: list[int] = []
    explored = branched = lp_iters = 0
    floor = -math.inf if known_lower_bound is None else known_lower_bound
    # bound of nodes whose LP no backend could solve; they cap the provable bound
    unresolved = math.inf

    def prune_level() -> float:
        if not math.isfinite(inc_obj):
            return math.inf
        return inc_obj - 1e-9 * max(1.0, abs(inc_obj))

    def try_incumbent(x: np.ndarray, obj: float) -> None:
        nonlocal inc_x, inc_obj
        if inc_x is None or obj < inc_obj - 1e-12 * max(1.0, abs(inc_obj)):
            xr = x.copy()
            xr[binaries] = np.round(xr[binaries])
            inc_x, inc_obj = xr, obj
            history.append(obj)

    def finish(status: BnBStatus, lower: float) -> BnBResult:
        lower = min(lower, inc_obj) if inc_x is not None else lower
        gap = relative_gap(inc_obj, lower) if inc_x is not None else math.inf
        return BnBResult(
            status,
            inc_x,
            inc_obj if inc_x is not None else math.nan,
            lower,
            gap,
            explored,
            branched,
            branch_log,
            history,
            lp_iters,
            time.perf_counter() - start,
        )

    root = _Node(-math.inf, next(counter), arr.lb.copy(), arr.ub.copy())
    heap: list[_Node] = [root]
    root_done = False
    while heap:
        lower = min(max(heap[0].bound, floor), unresolved)
        if inc_x is not None:
            if relative_gap(inc_obj, lower) <= 1e-9 or inc_obj <= floor + 1e-9 * max(1.0, abs(inc_obj)):
                return finish(BnBStatus.OPTIMAL, max(lower, floor))
            if gap_target > 0 and relative_gap(inc_obj, lower) <= gap_target:
                return finish(BnBStatus.GAP_REACHED, lower)
        if time.perf_counter() - start > time_limit_s or (node_limit is not None and explored >= node_limit):
            logger.info("branch-and-bound stopped by limit after %d nodes", explored)
            return finish(BnBStatus.TIME_LIMIT, lower)
        node = heapq.heappop(heap)
        if node.bound >= prune_level():
            continue
        explored += 1
        res = solve_lp(m, node.lb, node.ub, node.basis, backend=backend)
        lp_iters += res.iterations
        if res.status in (LPStatus.NUMERICAL, LPStatus.ITERATION_LIMIT) and backend == "simplex":
            res = solve_lp(m, node.lb, node.ub, None, backend="highs")
        if res.status != LPStatus.OPTIMAL:
            if res.status != LPStatus.INFEASIBLE:
                logger.warning("node LP ended with status %s; node set aside", res.status.value)
                unresolved = min(unresolved, node.bound)
            continue
        obj = res.objective
        if obj >= prune_level():
            continue
        x = res.x
        j = _pick_branch(x, binaries, priority)
        if j < 0:
            try_incumbent(x, obj)
            continue
        if not root_done:
            _rounding_heuristic(m, x, binaries, node, backend, try_incumbent)
            root_done = True
        branched += 1
        branch_log.append(j)
        down_lb, down_ub = node.lb.copy(), node.ub.copy()
        down_ub[j] = 0.0
        up_lb, up_ub = node.lb.copy(), node.ub.copy()
        up_lb[j] = 1.0
        children = [(down_lb, down_ub), (up_lb, up_ub)]
        if x[j] >= 0.5:
            children.reverse()
        for lb, ub in children:
            heapq.heappush(heap, _Node(obj, next(counter), lb, ub, res.basis))
    if unresolved < math.inf:
        if inc_x is None or unresolved < prune_level():
            return finish(BnBStatus.UNRESOLVED, max(unresolved, floor))
    if inc_x is None:
        return finish(BnBStatus.INFEASIBLE, math.inf)
    return finish(BnBStatus.OPTIMAL, inc_obj)


def _rounding_heuristic(m, x, binaries, node, backend, accept) -> None:
    """Try nearest and upward rounding of the root relaxation as early incumbents."""
    for rounded in (np.round(x[binaries]), np.ceil(x[binaries] - INT_TOL)):
        lb, ub = node.lb.copy(), node.ub.copy()
        vals = np.clip(rounded, lb[binaries], ub[binaries])
        lb[binaries] = vals
        ub[binaries] = vals
        res = solve_lp(m, lb, ub, None, backend=backend)
        if res.status == LPStatus.OPTIMAL:
            accept(res.x, res.objective)

"""Turning relaxed incumbents into plans that respect the true Shannon capacity.

Per round: check the plan against the exact capacity, tighten the tangent
grid and re-solve, then re-optimize the continuous resources with the
placement and schedule frozen. Edge nodes that still cannot be served are
carried into a residual topology and planned again, up to a round limit.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .capacity import capacity, capacity_slopes
from .formulations import BW_UNIT, FLOW_UNIT, Formulation, Sub6Formulation, build_formulation, extract_plan
from .formulations.microwave import MicrowaveFormulation
from .milp import BnBResult, BnBStatus, branch_and_bound, solve_lp
from .milp.model import MilpModel
from .topology import (
    Band,
    BackgroundLink,
    DeploymentPlan,
    Link,
    NodeKind,
    NodeReservation,
    Topology,
    deployment_cost,
)
from .verify import true_link_capacity

logger = logging.getLogger(__name__)

CAPACITY_REL_TOL = 1e-6
SPARE_SEED_GRID = (2, 2)
OA_REL_TOL = 1e-6
DEMAND_HEADROOM = 2e-6
RESOURCE_WEIGHT = 1e-3
MIN_FLOW_BPS = 1e-3
MAX_ESCALATED_K = 32
SERVED_TOL = 1e-7


class ENStatus(str, Enum):
    FEASIBLE_AS_IS = "FeasibleAsIs"
    REPAIRED_BY_REFINEMENT = "RepairedByRefinement"
    REPAIRED_BY_SPARE_BANDWIDTH = "RepairedBySpareBandwidth"
    DEFERRED_TO_ITERATION = "DeferredToIteration"
    INFEASIBLE = "Infeasible"


@dataclass
class SolveOptions:
    gap_target: float = 0.0
    time_limit_s: float = 1800.0
    backend: str = "simplex"
    refine_factor: int = 2
    skip_refinement: bool = False
    node_limit: Optional[int] = None


@dataclass
class RoundOutcome:
    plan: Optional[DeploymentPlan]
    formulation: Formulation
    result: BnBResult
    screened_out: tuple[int, ...] = ()


@dataclass
class SpareResult:
    plan: Optional[DeploymentPlan]
    served: tuple[int, ...]
    unserved: tuple[int, ...]
    rounds: int
    max_violation: float
    converged: bool
    message: str = ""

    @property
    def still_infeasible(self) -> bool:
        return self.plan is None or bool(self.unserved)


@dataclass
class RepairReport:
    statuses: dict[int, ENStatus]
    iterations_used: int
    final_plan: DeploymentPlan
    violations_found: int = 0
    rounds: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "iterations_used": self.iterations_used,
            "violations_found": self.violations_found,
            "en_status": {str(i): s.value for i, s in sorted(self.statuses.items())},
            "rounds": self.rounds,
        }


# ---------------------------------------------------------------- checking


def check_true_capacity(plan: DeploymentPlan, t: Topology) -> set[Link]:
    """Links whose flow exceeds the exact capacity of their allocated resources.

    Greedy plans carry no radio allocation and always return an empty set.
    """
    if plan.mode == "greedy":
        return set()
    bad = set()
    for link, f in plan.flows.items():
        if f <= 0:
            continue
        if f > true_link_capacity(plan, t, link) + CAPACITY_REL_TOL * f:
            bad.add(link)
    return bad


def affected_ens(plan: DeploymentPlan, t: Topology, violated: Iterable[Link]) -> set[int]:
    """Edge nodes whose traffic crosses a violated link on either hop."""
    violated = set(violated)
    ens = set(t.edge_nodes)
    bad_ans = {j for (j, _k) in violated if j not in ens}
    out = set()
    for (i, j), f in plan.flows.items():
        if i in ens and f > 0 and ((i, j) in violated or j in bad_ans):
            out.add(i)
    return out


# ---------------------------------------------------------------- solving


def empty_plan(t: Topology, mode: str) -> DeploymentPlan:
    return DeploymentPlan(mode=mode, infeasible_ens=tuple(t.edge_nodes))


def restrict_edges(t: Topology, keep: Iterable[int]) -> Topology:
    keep = set(keep)
    return t.replace(nodes=tuple(n for n in t.nodes if n.kind != NodeKind.EDGE or n.id in keep))


def grid_of(form: Formulation) -> tuple[int, int]:
    if isinstance(form, Sub6Formulation):
        return (len(form.power_points), form.grid_shape[1])
    return tuple(form.grid_shape)


def _bnb(m: MilpModel, opts: SolveOptions, known_lower_bound: Optional[float] = None) -> BnBResult:
    return branch_and_bound(
        m,
        opts.gap_target,
        opts.time_limit_s,
        known_lower_bound=known_lower_bound,
        backend=opts.backend,
        node_limit=opts.node_limit,
    )


def screen_unservable(t: Topology, mode: str, grid: tuple[int, int], opts: SolveOptions) -> set[int]:
    """Largest set of edge nodes the relaxation can serve together, found by maximizing served fractions."""
    form = build_formulation(t, mode, grid, elastic=True)
    res = _bnb(form.model, opts)
    if not res.has_incumbent:
        return set()
    return {i for i, col in form.served.items() if res.incumbent[col] >= 1.0 - SERVED_TOL}


def solve_round(t: Topology, mode: str, grid: tuple[int, int], opts: SolveOptions) -> RoundOutcome:
    """Solve one placement MILP, dropping edge nodes the relaxation cannot serve if it is infeasible."""
    form = build_formulation(t, mode, grid)
    res = _bnb(form.model, opts)
    if res.has_incumbent:
        return RoundOutcome(extract_plan(res, form), form, res)
    if res.status != BnBStatus.INFEASIBLE:
        return RoundOutcome(None, form, res)
    servable = screen_unservable(t, mode, grid, opts)
    dropped = tuple(i for i in t.edge_nodes if i not in servable)
    logger.info("relaxation infeasible; %d edge node(s) screened out: %s", len(dropped), dropped)
    if not servable:
        return RoundOutcome(empty_plan(t, mode), form, res, dropped)
    form2 = build_formulation(restrict_edges(t, servable), mode, grid)
    res2 = _bnb(form2.model, opts)
    if not res2.has_incumbent:
        if res2.status == BnBStatus.INFEASIBLE:
            return RoundOutcome(empty_plan(t, mode), form, res, tuple(t.edge_nodes))
        return RoundOutcome(None, form2, res2, dropped)
    plan = extract_plan(res2, form2)
    plan.infeasible_ens = tuple(sorted(set(plan.infeasible_ens) | set(dropped)))
    return RoundOutcome(plan, form2, res2, dropped)


def refine_and_resolve(
    form: Formulation,
    factor: int = 2,
    *,
    opts: Optional[SolveOptions] = None,
    known_lower_bound: Optional[float] = None,
) -> tuple[Formulation, BnBResult]:
    """Rebuild with a ``factor``-times finer tangent grid and solve again.

    The finer model is a tighter relaxation, so any valid lower bound of the
    coarse one (typically its B&B bound) remains valid and is passed along.
    """
    if factor < 1:
        raise ValueError("refinement factor must be >= 1")
    opts = opts or SolveOptions()
    k_p, k_w = grid_of(form)
    finer = build_formulation(form.topology, form.mode, (k_p * factor, k_w * factor), elastic=form.elastic)
    return finer, _bnb(finer.model, opts, known_lower_bound)


# ---------------------------------------------------------------- spare bandwidth


@dataclass(frozen=True)
class _Coupling:
    """One concave capacity coupling ``flow <= C(power, bandwidth)`` in scaled columns."""

    flow: int
    power: int
    bandwidth: Optional[int]
    fixed_bandwidth_hz: float
    fn: object
    p_unit: float
    w_max_hz: float


def _couplings(form: Formulation) -> list[_Coupling]:
    t = form.topology
    out = []
    mm = t.bands[Band.MMWAVE]
    for link in form.an_links:
        out.append(
            _Coupling(form.f[link], form.an_p[link], form.an_w[link], 0.0, form.capacity_fn(Band.MMWAVE, *link),
                      mm.max_power_per_radio_w, mm.max_bandwidth_per_radio_hz)
        )
    if isinstance(form, MicrowaveFormulation):
        mw = t.bands[Band.MICROWAVE]
        for link in form.en_links:
            out.append(
                _Coupling(form.f[link], form.p[link], form.w[link], 0.0, form.capacity_fn(Band.MICROWAVE, *link),
                          mw.max_power_per_radio_w, mw.max_bandwidth_per_radio_hz)
            )
    elif isinstance(form, Sub6Formulation):
        s6 = t.bands[Band.SUB6]
        for key in form.c:
            out.append(
                _Coupling(form.c[key], form.p[key], None, s6.channel_width_hz, form.capacity_fn(Band.SUB6, *key),
                          s6.max_power_per_radio_w, s6.channel_width_hz)
            )
    return out


def _add_tangent(m: MilpModel, cp: _Coupling, p: float, w: float, f: float, tag: tuple) -> None:
    if cp.bandwidth is None:
        dp, _ = capacity_slopes(cp.fn, p, w)
        rhs = float(capacity(cp.fn, p, w)) - float(dp) * p
        m.add_constraint({cp.flow: 1.0, cp.power: -float(dp) * cp.p_unit / FLOW_UNIT}, "<=", rhs / FLOW_UNIT, tag)
        return
    # planes of a homogeneous concave function pass through the origin; at W = 0
    # the plane through a small enough W' still separates the point (C <= W'/ln 2 there)
    if w <= 0:
        w = min(1e-6 * cp.w_max_hz, 1e-6 * f)
    dp, dw = capacity_slopes(cp.fn, p, w)
    m.add_constraint(
        {cp.flow: 1.0, cp.power: -float(dp) * cp.p_unit / FLOW_UNIT, cp.bandwidth: -float(dw) * BW_UNIT / FLOW_UNIT},
        "<=",
        0.0,
        tag,
    )


def _outer_approximation(
    m: MilpModel, couplings: list[_Coupling], backend: str, max_rounds: int, tag: str
) -> tuple[Optional[np.ndarray], int, float, bool]:
    worst = math.inf
    x = None
    for r in range(max_rounds):
        res = solve_lp(m, backend=backend)
        if not res.ok and backend != "highs":
            res = solve_lp(m, backend="highs")
        if not res.ok:
            return None, r + 1, math.inf, False
        x = res.x
        worst = 0.0
        added = 0
        for n, cp in enumerate(couplings):
            f = float(x[cp.flow]) * FLOW_UNIT
            if f <= MIN_FLOW_BPS:
                continue
            p = max(float(x[cp.power]), 0.0) * cp.p_unit
            w = cp.fixed_bandwidth_hz if cp.bandwidth is None else max(float(x[cp.bandwidth]), 0.0) * BW_UNIT
            c = float(capacity(cp.fn, p, w))
            rel = (f - c) / f
            if rel > OA_REL_TOL:
                worst = max(worst, rel)
                _add_tangent(m, cp, p, w, f, ("oa", tag, r, n))
                added += 1
        if not added:
            return x, r + 1, 0.0, True
    return x, max_rounds, worst, False


def _fix_binaries(form: Formulation, plan: DeploymentPlan) -> None:
    m = form.model
    t = form.topology
    selected = set(plan.selected_ans)
    for j, col in form.y.items():
        v = 1.0 if j in selected else 0.0
        m.set_bounds(col, v, v)
    if isinstance(form, Sub6Formulation):
        on = set()
        for (i, j), a in plan.en_link_alloc.items():
            for ch in a.channel_powers:
                on.add((i, j, ch))
        for key, col in form.x.items():
            v = 1.0 if key in on else 0.0
            m.set_bounds(col, v, v)
        for (j, ch), col in form.xn.items():
            res = t.reservations.get(j)
            used = any(k[1] == j and k[2] == ch for k in on) or bool(res and res.channel_users.get(ch, 0) > 0)
            v = 1.0 if used else 0.0
            m.set_bounds(col, v, v)


def _penalize_resources(m: MilpModel, couplings: list[_Coupling]) -> None:
    """Small cost on normalized power and bandwidth so the LP optimum is a unique boundary point."""
    cols = sorted({cp.power for cp in couplings} | {cp.bandwidth for cp in couplings if cp.bandwidth is not None})
    obj = dict(m.objective)
    for c in cols:
        ub = m.variables[c].ub
        if math.isfinite(ub) and ub > 0:
            obj[c] = obj.get(c, 0.0) + RESOURCE_WEIGHT / (len(cols) * ub)
    m.set_objective(obj, m.objective_offset)


def spare_bandwidth_pass(
    plan: DeploymentPlan,
    form: Formulation,
    *,
    backend: str = "simplex",
    max_rounds: int = 50,
) -> SpareResult:
    """Re-optimize flows, powers and bandwidths against the exact capacity with placement and schedule frozen.

    The continuous problem is convex; it is solved by Kelley-style outer
    approximation, adding a tangent plane at the current optimum of every
    violated coupling. First the served fractions are maximized; edge nodes
    that reach full demand are then fixed as served and the rest dropped.
    Demands are inflated by a tiny headroom during the solve and all flows
    scaled back afterwards, so the returned plan is strictly within capacity.
    """
    t = form.topology
    # the outer approximation supplies its own cuts, so a coarse seed grid keeps the LPs small
    efrm = build_formulation(t, form.mode, SPARE_SEED_GRID, elastic=True)
    _fix_binaries(efrm, plan)
    m = efrm.model
    full = 1.0 + DEMAND_HEADROOM
    candidates = set(plan.served_ens(t))
    for i, col in efrm.served.items():
        m.set_bounds(col, 0.0, full if i in candidates else 0.0)
    couplings = _couplings(efrm)
    _penalize_resources(m, couplings)
    x, r1, worst, ok = _outer_approximation(m, couplings, backend, max_rounds, "max")
    if x is None:
        return SpareResult(None, (), tuple(sorted(candidates)), r1, worst, False, "lp failed")
    served = tuple(sorted(i for i, col in efrm.served.items() if x[col] >= full * (1.0 - SERVED_TOL)))
    for i, col in efrm.served.items():
        v = full if i in served else 0.0
        m.set_bounds(col, v, v)
    x, r2, worst, ok = _outer_approximation(m, couplings, backend, max_rounds, "fix")
    if x is None or not ok:
        msg = "lp failed" if x is None else f"no convergence in {max_rounds} rounds (worst violation {worst:.3g})"
        return SpareResult(None, served, tuple(sorted(candidates - set(served))), r1 + r2, worst, False, msg)
    x = x.copy()
    for col in list(efrm.f.values()) + list(efrm.served.values()) + _channel_capacity_cols(efrm):
        x[col] /= full
    new = extract_plan(None, efrm, x)
    _drop_idle_aggregators(new, t)
    new.lower_bound = min(plan.lower_bound, new.objective)
    new.stats = dict(plan.stats)
    unserved = tuple(sorted(candidates - set(served)))
    return SpareResult(new, served, unserved, r1 + r2, worst, True)


def _channel_capacity_cols(form: Formulation) -> list[int]:
    return list(form.c.values()) if isinstance(form, Sub6Formulation) else []


def _drop_idle_aggregators(plan: DeploymentPlan, t: Topology) -> None:
    idle = {j for j in plan.selected_ans if plan.inflow(j) <= 0}
    if not idle:
        return
    plan.selected_ans = tuple(j for j in plan.selected_ans if j not in idle)
    plan.flows = {l: f for l, f in plan.flows.items() if l[0] not in idle}
    plan.an_gn_alloc = {l: a for l, a in plan.an_gn_alloc.items() if l[0] not in idle}
    plan.objective = deployment_cost(t, plan.selected_ans)


# ---------------------------------------------------------------- iteration


def iterate_residual(
    t: Topology,
    infeasible_ens: Iterable[int],
    unselected_ans: Iterable[int],
    accepted: Optional[DeploymentPlan] = None,
) -> Topology:
    """Sub-topology of still-unserved edge nodes, unused AN candidates and all gateways.

    Node ids are kept from ``t``. Gateway resources used by ``accepted`` become
    reservations, and its sub-6 transmissions become background links that
    new links must coexist with.
    """
    bad = set(infeasible_ens)
    if not bad:
        return t
    spare = set(unselected_ans)
    nodes = tuple(
        n
        for n in t.nodes
        if (n.kind == NodeKind.EDGE and n.id in bad)
        or (n.kind == NodeKind.AGGREGATOR and n.id in spare)
        or n.kind == NodeKind.GATEWAY
    )
    reservations = {j: NodeReservation(r.inbound_bandwidth_hz, dict(r.channel_users)) for j, r in t.reservations.items()}
    background = list(t.background)
    if accepted is not None:
        gateways = set(t.gateways)
        for (i, j), a in sorted(accepted.en_link_alloc.items()):
            if j in gateways:
                r = reservations.setdefault(j, NodeReservation(0.0, {}))
                if a.channel_powers:
                    users = dict(r.channel_users)
                    for ch in a.channel_powers:
                        users[ch] = users.get(ch, 0) + 1
                    reservations[j] = NodeReservation(r.inbound_bandwidth_hz, users)
                else:
                    reservations[j] = NodeReservation(r.inbound_bandwidth_hz + a.bandwidth_hz, dict(r.channel_users))
            for ch, p in sorted(a.channel_powers.items()):
                background.append(BackgroundLink(i, j, ch, p))
    return t.replace(nodes=nodes, reservations=reservations, background=tuple(background))


def merge_plans(base: DeploymentPlan, extra: DeploymentPlan, t: Topology) -> DeploymentPlan:
    selected = tuple(sorted(set(base.selected_ans) | set(extra.selected_ans)))
    return DeploymentPlan(
        mode=base.mode,
        selected_ans=selected,
        flows={**base.flows, **extra.flows},
        en_link_alloc={**base.en_link_alloc, **extra.en_link_alloc},
        an_gn_alloc={**base.an_gn_alloc, **extra.an_gn_alloc},
        objective=deployment_cost(t, selected),
        lower_bound=base.lower_bound,
        infeasible_ens=base.infeasible_ens,
        stats=dict(base.stats),
    )


def _served(plan: DeploymentPlan, t: Topology) -> set[int]:
    return set(t.edge_nodes) - set(plan.infeasible_ens)


def _repair_round(
    plan: DeploymentPlan, form: Formulation, opts: SolveOptions, info: dict
) -> tuple[DeploymentPlan, dict[int, ENStatus], Formulation]:
    """Tighten, then spare bandwidth, on one round's plan. Returns the round plan and stage labels of served ENs."""
    t = form.topology
    violated = check_true_capacity(plan, t)
    info["violations"] = len(violated)
    first_ok: dict[int, ENStatus] = {}
    for i in _served(plan, t) - affected_ens(plan, t, violated):
        first_ok[i] = ENStatus.FEASIBLE_AS_IS
    if not violated:
        return plan, first_ok, form

    if not opts.skip_refinement and opts.refine_factor > 1:
        finer, res = refine_and_resolve(form, opts.refine_factor, opts=opts, known_lower_bound=plan.lower_bound)
        info["refined_grid"] = list(grid_of(finer))
        info["refined_status"] = res.status.value
        if res.has_incumbent:
            refined = extract_plan(res, finer)
            refined.lower_bound = plan.lower_bound
            refined.infeasible_ens = tuple(sorted(set(refined.infeasible_ens) | set(plan.infeasible_ens)))
            violated = check_true_capacity(refined, t)
            info["violations_after_refinement"] = len(violated)
            for i in _served(refined, t) - affected_ens(refined, t, violated):
                first_ok.setdefault(i, ENStatus.REPAIRED_BY_REFINEMENT)
            plan, form = refined, finer
            if not violated:
                return plan, {i: s for i, s in first_ok.items() if i in _served(plan, t)}, form

    spare = spare_bandwidth_pass(plan, form, backend=opts.backend)
    info["spare_rounds"] = spare.rounds
    info["spare_converged"] = spare.converged
    if spare.plan is None:
        logger.warning("spare bandwidth pass failed: %s", spare.message)
        return empty_plan(t, plan.mode), {}, form
    new = spare.plan
    new.infeasible_ens = tuple(sorted(set(new.infeasible_ens) | set(plan.infeasible_ens)))
    served = _served(new, t)
    for i in served:
        first_ok.setdefault(i, ENStatus.REPAIRED_BY_SPARE_BANDWIDTH)
    return new, {i: s for i, s in first_ok.items() if i in served}, form


def repair(
    plan: DeploymentPlan,
    formulation: Formulation,
    t: Topology,
    max_iterations: int = 3,
    *,
    opts: Optional[SolveOptions] = None,
) -> RepairReport:
    """Make ``plan`` (solved from ``formulation``) feasible for the exact capacity.

    ``t`` is the full topology; ``formulation.topology`` may be a restriction
    of it when edge nodes were screened out before solving. Each outer round
    runs refinement and the spare-bandwidth pass, then plans the remaining
    edge nodes on a residual topology. Edge nodes served in a later round are
    reported as DeferredToIteration; those never served as Infeasible.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    opts = opts or SolveOptions()
    start = time.perf_counter()
    mode = formulation.mode
    grid = grid_of(formulation)
    merged = DeploymentPlan(mode=mode, lower_bound=plan.lower_bound, stats=dict(plan.stats))
    statuses: dict[int, ENStatus] = {}
    rounds: list[dict] = []
    violations_found = 0
    cur_plan, cur_form = plan, formulation
    used = 0
    for rnd in range(1, max_iterations + 1):
        used = rnd
        info: dict = {"round": rnd, "edge_nodes": len(cur_form.topology.edge_nodes)}
        round_plan, labels, used_form = _repair_round(cur_plan, cur_form, opts, info)
        grid = max(grid, grid_of(used_form))
        if rnd == 1:
            violations_found = info.get("violations", 0)
        served_now = _served(round_plan, cur_form.topology)
        info["served"] = len(served_now)
        info["selected_ans"] = list(round_plan.selected_ans)
        rounds.append(info)
        merged = merge_plans(merged, round_plan, t)
        for i in served_now:
            statuses[i] = labels.get(i, ENStatus.FEASIBLE_AS_IS) if rnd == 1 else ENStatus.DEFERRED_TO_ITERATION
        remaining = [i for i in t.edge_nodes if i not in statuses]
        if not remaining or rnd == max_iterations:
            break
        if not served_now:
            # the residual would repeat this round; only a finer grid can change the outcome
            if opts.skip_refinement or opts.refine_factor < 2 or max(grid) >= MAX_ESCALATED_K:
                break
            grid = (grid[0] * opts.refine_factor, grid[1] * opts.refine_factor)
        unselected = [j for j in t.aggregators if j not in merged.selected_ans]
        residual = iterate_residual(t, remaining, unselected, merged)
        outcome = solve_round(residual, mode, grid, opts)
        if outcome.plan is None:
            rounds.append({"round": rnd + 1, "status": outcome.result.status.value})
            break
        cur_plan, cur_form = outcome.plan, outcome.formulation
    for i in t.edge_nodes:
        statuses.setdefault(i, ENStatus.INFEASIBLE)
    merged.infeasible_ens = tuple(sorted(i for i, s in statuses.items() if s == ENStatus.INFEASIBLE))
    for (i, j) in list(merged.flows):
        if i in merged.infeasible_ens:
            del merged.flows[(i, j)]
            merged.en_link_alloc.pop((i, j), None)
    merged.lower_bound = min(merged.lower_bound, merged.objective)
    return RepairReport(
        statuses=dict(sorted(statuses.items())),
        iterations_used=used,
        final_plan=merged,
        violations_found=violations_found,
        rounds=rounds,
        timings={"repair_wall_time_s": time.perf_counter() - start},
    )


def plan_and_repair(
    t: Topology,
    mode: str,
    grid: tuple[int, int] = (8, 8),
    *,
    opts: Optional[SolveOptions] = None,
    max_iterations: int = 3,
) -> tuple[Optional[RepairReport], RoundOutcome]:
    """Solve the first round and repair it. The report is None if the solver produced no incumbent."""
    opts = opts or SolveOptions()
    outcome = solve_round(t, mode, grid, opts)
    if outcome.plan is None:
        return None, outcome
    report = repair(outcome.plan, outcome.formulation, t, max_iterations, opts=opts)
    report.timings["first_round_bnb_s"] = outcome.result.wall_time_s
    return report, outcome

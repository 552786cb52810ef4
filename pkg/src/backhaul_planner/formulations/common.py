"""Pieces shared by the microwave and sub-6 builders.

Columns are scaled so the LP stays well conditioned: flows are in Mbps,
bandwidths in MHz and every power is a fraction of its band's per-radio
maximum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ..capacity import CapacityFn, TangentGrid, build_tangent_grid, capacity, emit_cuts
from ..milp.bnb import BnBResult
from ..milp.model import MilpModel, VarKind
from ..topology import Band, DeploymentPlan, Link, LinkAlloc, Topology, uplink_adjacency

logger = logging.getLogger(__name__)

FLOW_UNIT = 1e6
BW_UNIT = 1e6
ZERO_TOL = 1e-9
Y_PRIORITY = 10


@dataclass
class Formulation:
    topology: Topology
    model: MilpModel
    en_band: Band
    ens: list[int]
    structurally_infeasible: tuple[int, ...]
    en_links: list[Link]
    an_links: list[Link]
    y: dict[int, int] = field(default_factory=dict)
    f: dict[Link, int] = field(default_factory=dict)
    an_w: dict[Link, int] = field(default_factory=dict)
    an_p: dict[Link, int] = field(default_factory=dict)
    an_grids: dict[Link, TangentGrid] = field(default_factory=dict)
    served: dict[int, int] = field(default_factory=dict)
    grid_shape: tuple[int, int] = (8, 8)
    elastic: bool = False

    @property
    def mode(self) -> str:
        return "microwave" if self.en_band == Band.MICROWAVE else "sub6"

    def capacity_fn(self, band: Band, tx: int, rx: int, channel: Optional[int] = None) -> CapacityFn:
        t = self.topology
        g = t.gain(band, tx, rx, channel)
        gap = t.gap_to_capacity if band == Band.SUB6 else 1.0
        return CapacityFn(g, t.bands[band].noise_spectral_density_w_per_hz, gap)


def link_sets(t: Topology, en_band: Band) -> tuple[list[int], tuple[int, ...], list[Link], list[Link]]:
    """Usable EN and AN->GN links, dropping ANs that cannot reach any gateway."""
    an_links = uplink_adjacency(t, Band.MMWAVE)
    live_ans = {j for j, _ in an_links}
    ans = set(t.aggregators)
    en_links = [(i, j) for i, j in uplink_adjacency(t, en_band) if j not in ans or j in live_ans]
    has_link = {i for i, _ in en_links}
    ens = [i for i in t.edge_nodes if i in has_link]
    isolated = tuple(i for i in t.edge_nodes if i not in has_link)
    for i in isolated:
        logger.warning("edge node %d has no usable uplink; marked structurally infeasible", i)
    return ens, isolated, en_links, an_links


def add_placement_vars(form: Formulation) -> None:
    t = form.topology
    for j in t.aggregators:
        form.y[j] = form.model.add_binary(("y", j), priority=Y_PRIORITY)


def add_flow_vars(form: Formulation, en_caps: Mapping[Link, float]) -> None:
    """Flow columns with the full-resource capacity as a valid upper bound."""
    m = form.model
    for link in form.en_links:
        form.f[link] = m.add_var(("f",) + link, ub=en_caps[link] / FLOW_UNIT)
    t = form.topology
    mm = t.bands[Band.MMWAVE]
    for link in form.an_links:
        cap = capacity(form.capacity_fn(Band.MMWAVE, *link), mm.max_power_per_radio_w, mm.max_bandwidth_per_radio_hz)
        form.f[link] = m.add_var(("f",) + link, ub=cap / FLOW_UNIT)


def add_objective(form: Formulation) -> None:
    t = form.topology
    m = form.model
    if form.elastic:
        for i in form.ens:
            form.served[i] = m.add_var(("s", i), lb=0.0, ub=1.0)
        m.set_objective({col: -1.0 for col in form.served.values()})
    else:
        m.set_objective({col: t.node(j).cost for j, col in form.y.items()})


def add_flow_balance(form: Formulation) -> None:
    t = form.topology
    m = form.model
    for i in form.ens:
        coeffs = {form.f[l]: 1.0 for l in form.en_links if l[0] == i}
        demand = t.node(i).demand_bps / FLOW_UNIT
        if form.elastic:
            coeffs[form.served[i]] = -demand
            m.add_constraint(coeffs, "==", 0.0, ("en_flow", i))
        else:
            m.add_constraint(coeffs, "==", demand, ("en_flow", i))
    for j in t.aggregators:
        coeffs = {form.f[l]: 1.0 for l in form.en_links if l[1] == j}
        for l in form.an_links:
            if l[0] == j:
                coeffs[form.f[l]] = coeffs.get(form.f[l], 0.0) - 1.0
        if coeffs:
            m.add_constraint(coeffs, "==", 0.0, ("an_flow", j))


def add_mmwave_submodel(form: Formulation, grids: Optional[Mapping[Link, TangentGrid]], k: tuple[int, int]) -> None:
    """60 GHz AN->GN columns, tangent cuts and the one-radio AN budgets."""
    t = form.topology
    m = form.model
    mm = t.bands[Band.MMWAVE]
    units = (FLOW_UNIT, mm.max_power_per_radio_w, BW_UNIT)
    for link in form.an_links:
        form.an_w[link] = m.add_var(("W60",) + link, ub=mm.max_bandwidth_per_radio_hz / BW_UNIT)
        form.an_p[link] = m.add_var(("p60",) + link, ub=1.0)
        grid = grids.get(link) if grids else None
        if grid is None:
            grid = build_tangent_grid(
                form.capacity_fn(Band.MMWAVE, *link), mm.max_power_per_radio_w, mm.max_bandwidth_per_radio_hz, *k
            )
        form.an_grids[link] = grid
        for cut in emit_cuts(grid, form.f[link], form.an_p[link], form.an_w[link], units=units, name=("cut60",) + link):
            m.add(cut)
    for j in t.aggregators:
        out = [l for l in form.an_links if l[0] == j]
        if not out:
            continue
        m.add_constraint({form.an_w[l]: 1.0 for l in out}, "<=", mm.max_bandwidth_per_radio_hz / BW_UNIT, ("an_bw60", j))
        m.add_constraint({form.an_p[l]: 1.0 for l in out}, "<=", 1.0, ("an_p60", j))


def binary_values(form: Formulation, x: np.ndarray) -> dict[tuple, float]:
    return {v.name: float(round(x[v.index])) for v in form.model.variables if v.kind == VarKind.BINARY}


def _clean(v: float, scale: float) -> float:
    v = float(v)
    return 0.0 if v < ZERO_TOL else v * scale


def extract_common(form: Formulation, x: np.ndarray, sol: Optional[BnBResult]) -> DeploymentPlan:
    t = form.topology
    mm = t.bands[Band.MMWAVE]
    selected = tuple(sorted(j for j, col in form.y.items() if x[col] > 0.5))
    flows = {}
    for link, col in form.f.items():
        val = _clean(x[col], FLOW_UNIT)
        if val > 0:
            flows[link] = val
    an_alloc = {}
    for link in form.an_links:
        w = _clean(x[form.an_w[link]], BW_UNIT)
        p = _clean(x[form.an_p[link]], mm.max_power_per_radio_w)
        if w > 0 or p > 0 or link in flows:
            an_alloc[link] = LinkAlloc(Band.MMWAVE, w, p)
    infeasible = set(form.structurally_infeasible)
    if form.elastic:
        infeasible |= {i for i, col in form.served.items() if x[col] < 1.0 - 1e-9}
    plan = DeploymentPlan(
        mode=form.mode,
        selected_ans=selected,
        flows=flows,
        an_gn_alloc=an_alloc,
        objective=float(sum(t.node(j).cost for j in selected)),
        infeasible_ens=tuple(sorted(infeasible)),
    )
    if sol is not None:
        plan.lower_bound = min(float(sol.lower_bound), plan.objective) if np.isfinite(sol.lower_bound) else 0.0
        plan.stats = {
            "status": sol.status.value,
            "nodes_explored": sol.nodes_explored,
            "nodes_branched": sol.nodes_branched,
            "milp_gap": sol.gap,
        }
    else:
        plan.lower_bound = plan.objective
    return plan

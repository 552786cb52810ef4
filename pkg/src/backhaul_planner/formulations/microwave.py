"""Interference-free 28 GHz access with 60 GHz aggregation.

Each EN link carries its own (flow, bandwidth, power) triple; bandwidth and
power are split continuously (TDMA/FDMA sharing), and the concave capacity
coupling is replaced by tangent-plane cuts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ..capacity import TangentGrid, build_tangent_grid, capacity, emit_cuts
from ..milp.bnb import BnBResult
from ..milp.model import MilpModel
from ..topology import Band, DeploymentPlan, Link, LinkAlloc, Topology
from .common import (
    BW_UNIT,
    FLOW_UNIT,
    Formulation,
    _clean,
    add_flow_balance,
    add_flow_vars,
    add_mmwave_submodel,
    add_objective,
    add_placement_vars,
    extract_common,
    link_sets,
)


@dataclass
class MicrowaveFormulation(Formulation):
    w: dict[Link, int] = field(default_factory=dict)
    p: dict[Link, int] = field(default_factory=dict)
    grids: dict[Link, TangentGrid] = field(default_factory=dict)


def build_microwave(
    t: Topology,
    grids: Optional[Mapping[Link, TangentGrid]] = None,
    *,
    k_p: int = 8,
    k_w: int = 8,
    elastic: bool = False,
) -> MicrowaveFormulation:
    """Build the relaxed placement MILP for 28 GHz edge links.

    ``grids`` may supply a tangent grid per link (EN links and AN->GN links);
    missing ones are built as ``k_p x k_w`` geometric grids. With
    ``elastic=True`` demands become ``d_i s_i`` and the objective maximizes
    the served fractions instead of minimizing cost.
    """
    band = t.bands[Band.MICROWAVE]
    ens, isolated, en_links, an_links = link_sets(t, Band.MICROWAVE)
    form = MicrowaveFormulation(
        topology=t,
        model=MilpModel(),
        en_band=Band.MICROWAVE,
        ens=ens,
        structurally_infeasible=isolated,
        en_links=en_links,
        an_links=an_links,
        grid_shape=(k_p, k_w),
        elastic=elastic,
    )
    m = form.model
    add_placement_vars(form)
    pmax, wmax = band.max_power_per_radio_w, band.max_bandwidth_per_radio_hz
    caps = {l: capacity(form.capacity_fn(Band.MICROWAVE, *l), pmax, wmax) for l in en_links}
    add_flow_vars(form, caps)
    add_objective(form)
    add_flow_balance(form)

    units = (FLOW_UNIT, pmax, BW_UNIT)
    for link in en_links:
        form.w[link] = m.add_var(("W",) + link, ub=wmax / BW_UNIT)
        form.p[link] = m.add_var(("p",) + link, ub=1.0)
        grid = grids.get(link) if grids else None
        if grid is None:
            grid = build_tangent_grid(form.capacity_fn(Band.MICROWAVE, *link), pmax, wmax, k_p, k_w)
        form.grids[link] = grid
        for cut in emit_cuts(grid, form.f[link], form.p[link], form.w[link], units=units, name=("cut",) + link):
            m.add(cut)

    for i in ens:
        out = [l for l in en_links if l[0] == i]
        m.add_constraint({form.w[l]: 1.0 for l in out}, "<=", wmax / BW_UNIT, ("en_bw", i))
        m.add_constraint({form.p[l]: 1.0 for l in out}, "<=", 1.0, ("en_p", i))

    for j in t.aggregators:
        inbound = [l for l in en_links if l[1] == j]
        if not inbound:
            continue
        coeffs = {form.w[l]: 1.0 for l in inbound}
        coeffs[form.y[j]] = -t.node(j).max_radios * wmax / BW_UNIT
        m.add_constraint(coeffs, "<=", 0.0, ("an_bw", j))
        # with W = 0 the cuts still admit f = m_p p, so flow is gated on y directly
        for l in inbound:
            m.add_constraint({form.f[l]: 1.0, form.y[j]: -caps[l] / FLOW_UNIT}, "<=", 0.0, ("an_gate",) + l)
    for k in t.gateways:
        inbound = [l for l in en_links if l[1] == k]
        if not inbound:
            continue
        reserved = t.reservations.get(k)
        used = reserved.inbound_bandwidth_hz if reserved else 0.0
        room = max(0.0, t.node(k).max_radios * wmax - used)
        m.add_constraint({form.w[l]: 1.0 for l in inbound}, "<=", room / BW_UNIT, ("gn_bw", k))

    add_mmwave_submodel(form, grids, (k_p, k_w))
    return form


def extract_microwave_plan(sol: BnBResult, form: MicrowaveFormulation, x: Optional[np.ndarray] = None) -> DeploymentPlan:
    if x is None:
        if sol is None or sol.incumbent is None:
            raise ValueError("no incumbent to extract a plan from")
        x = sol.incumbent
    plan = extract_common(form, x, sol)
    band = form.topology.bands[Band.MICROWAVE]
    for link in form.en_links:
        w = _clean(x[form.w[link]], BW_UNIT)
        p = _clean(x[form.p[link]], band.max_power_per_radio_w)
        if w > 0 or p > 0 or link in plan.flows:
            plan.en_link_alloc[link] = LinkAlloc(Band.MICROWAVE, w, p)
    return plan

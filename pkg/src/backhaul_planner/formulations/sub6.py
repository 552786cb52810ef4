"""Channelized 5.8 GHz access under the protocol interference model.

Per EN link and channel there is a schedule bit ``x_ijm``, a power column
``p_ijm`` and an auxiliary channel capacity ``c_ijm``. The flow bound is
``f_ij <= sum_m c_ijm`` with ``c_ijm`` under fixed-width tangent cuts and
gated by ``x_ijm`` so an unscheduled channel carries nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..capacity import capacity, emit_cuts_fixed_bandwidth, geometric_points
from ..milp.bnb import BnBResult
from ..milp.model import MilpModel
from ..topology import Band, DeploymentPlan, Link, LinkAlloc, Topology
from .common import (
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

X_PRIORITY = 1
NODE_X_PRIORITY = 0

Triple = tuple[int, int, int]


@dataclass
class Sub6Formulation(Formulation):
    channels: list[int] = field(default_factory=list)
    x: dict[Triple, int] = field(default_factory=dict)
    xn: dict[tuple[int, int], int] = field(default_factory=dict)
    p: dict[Triple, int] = field(default_factory=dict)
    c: dict[Triple, int] = field(default_factory=dict)
    power_points: np.ndarray = field(default_factory=lambda: np.zeros(0))


def interference_coefficient(t: Topology, interferer: int, victim_rx: int, channel: int) -> Optional[float]:
    """Coefficient ``1 - P_I / (g p_max)`` of the schedule bit in a scaled interference row.

    None when the interferer cannot exceed ``P_I`` even at full power.
    """
    g = t.gain(Band.SUB6, interferer, victim_rx, channel)
    if g is None:
        return None
    pmax = t.bands[Band.SUB6].max_power_per_radio_w
    coef = 1.0 - t.interference_threshold_w / (g * pmax)
    return coef if coef > 0 else None


def build_sub6(
    t: Topology,
    power_points: Optional[Sequence[float]] = None,
    *,
    k_p: int = 8,
    mm_grid: tuple[int, int] = (8, 8),
    elastic: bool = False,
) -> Sub6Formulation:
    band = t.bands[Band.SUB6]
    pmax, wch = band.max_power_per_radio_w, band.channel_width_hz
    pts = geometric_points(pmax, k_p) if power_points is None else np.asarray(sorted(power_points), dtype=float)
    ens, isolated, en_links, an_links = link_sets(t, Band.SUB6)
    channels = list(range(band.num_channels))
    form = Sub6Formulation(
        topology=t,
        model=MilpModel(),
        en_band=Band.SUB6,
        ens=ens,
        structurally_infeasible=isolated,
        en_links=en_links,
        an_links=an_links,
        grid_shape=mm_grid,
        elastic=elastic,
        channels=channels,
        power_points=pts,
    )
    m = form.model
    add_placement_vars(form)

    chan_cap = {}
    for (i, j) in en_links:
        for ch in channels:
            g = t.gain(Band.SUB6, i, j, ch)
            if g is not None:
                chan_cap[(i, j, ch)] = capacity(form.capacity_fn(Band.SUB6, i, j, ch), pmax, wch)
    link_caps = {l: sum(v for (i, j, _), v in chan_cap.items() if (i, j) == l) for l in en_links}
    add_flow_vars(form, link_caps)
    add_objective(form)
    add_flow_balance(form)

    receivers = sorted({j for _, j in en_links})
    victims = sorted(set(receivers) | {b.rx for b in t.background})
    for j in receivers:
        for ch in channels:
            form.xn[(j, ch)] = m.add_binary(("xn", j, ch), priority=NODE_X_PRIORITY)
    for (i, j, ch), cap in chan_cap.items():
        key = (i, j, ch)
        form.x[key] = m.add_binary(("x",) + key, priority=X_PRIORITY)
        form.p[key] = m.add_var(("p",) + key, ub=1.0)
        form.c[key] = m.add_var(("c",) + key, ub=cap / FLOW_UNIT)
        fn = form.capacity_fn(Band.SUB6, i, j, ch)
        link_pts = np.union1d(pts, interference_caps(t, i, j, ch, victims))
        for cut in emit_cuts_fixed_bandwidth(
            fn, wch, link_pts, form.c[key], form.p[key], units=(FLOW_UNIT, pmax), name=("cut",) + key
        ):
            m.add(cut)
        m.add_constraint({form.c[key]: 1.0, form.x[key]: -cap / FLOW_UNIT}, "<=", 0.0, ("c_gate",) + key)
        m.add_constraint({form.p[key]: 1.0, form.x[key]: -1.0}, "<=", 0.0, ("p_gate",) + key)
        m.add_constraint({form.x[key]: 1.0, form.xn[(j, ch)]: -1.0}, "<=", 0.0, ("x_node",) + key)
    for l in en_links:
        coeffs = {form.f[l]: 1.0}
        for key, col in form.c.items():
            if key[:2] == l:
                coeffs[col] = -1.0
        m.add_constraint(coeffs, "<=", 0.0, ("f_cap",) + l)

    _add_interference(form)
    _add_background(form)

    A = t.sdma_order
    ans = set(t.aggregators)
    for j in receivers:
        reserved = t.reservations.get(j)
        for ch in channels:
            users = [form.x[key] for key in form.x if key[1] == j and key[2] == ch]
            if not users:
                continue
            coeffs = {col: 1.0 for col in users}
            if j in ans:
                coeffs[form.y[j]] = -float(A)
                m.add_constraint(coeffs, "<=", 0.0, ("sdma", j, ch))
            else:
                used = reserved.channel_users.get(ch, 0) if reserved else 0
                m.add_constraint(coeffs, "<=", float(max(A - used, 0)), ("sdma", j, ch))
        if reserved:
            for ch, users in reserved.channel_users.items():
                if users > 0 and (j, ch) in form.xn:
                    m.set_bounds(form.xn[(j, ch)], 1.0, 1.0)
        m.add_constraint(
            {form.xn[(j, ch)]: 1.0 for ch in channels}, "<=", float(t.node(j).max_radios), ("node_radio", j)
        )
    for i in ens:
        cols = [col for key, col in form.x.items() if key[0] == i]
        m.add_constraint({col: 1.0 for col in cols}, "<=", float(t.node(i).max_radios), ("en_radio", i))

    add_mmwave_submodel(form, None, mm_grid)
    return form


def interference_caps(t: Topology, tx: int, rx: int, channel: int, receivers: Sequence[int]) -> np.ndarray:
    """Powers at which ``tx`` would just reach ``P_I`` at another receiver; extra exact tangent points.

    An interference-limited transmitter ends up at one of these levels, so
    making the relaxation exact there removes most capacity violations.
    """
    pmax = t.bands[Band.SUB6].max_power_per_radio_w
    caps = []
    for j in receivers:
        if j == rx:
            continue
        g = t.gain(Band.SUB6, tx, j, channel)
        if g is not None and t.interference_threshold_w / g < pmax:
            caps.append(t.interference_threshold_w / g)
    return np.asarray(sorted(set(caps)), dtype=float)


def _add_interference(form: Sub6Formulation) -> None:
    """``p_kh^m + (1 - P_I / (g_kj^m p_max)) x_ij^m <= 1`` for k != i, h != j."""
    t = form.topology
    m = form.model
    for (i, j, ch), xcol in form.x.items():
        for (k, h, ch2), pcol in form.p.items():
            if ch2 != ch or k == i or h == j:
                continue
            coef = interference_coefficient(t, k, j, ch)
            if coef is None:
                continue
            m.add_constraint({pcol: 1.0, xcol: coef}, "<=", 1.0, ("intf", i, j, k, h, ch))


def _add_background(form: Sub6Formulation) -> None:
    """Coexistence with links accepted in an earlier planning round."""
    t = form.topology
    pmax = t.bands[Band.SUB6].max_power_per_radio_w
    PI = t.interference_threshold_w
    for bg in t.background:
        for (k, h, ch), pcol in form.p.items():
            if ch != bg.channel or k == bg.tx or h == bg.rx:
                continue
            g_in = t.gain(Band.SUB6, k, bg.rx, ch)
            if g_in is not None:
                var = form.model.variables[pcol]
                form.model.set_bounds(pcol, var.lb, min(var.ub, PI / (g_in * pmax)))
            g_out = t.gain(Band.SUB6, bg.tx, h, ch)
            if g_out is not None and bg.power_w * g_out > PI:
                form.model.set_bounds(form.x[(k, h, ch)], 0.0, 0.0)


def interference_power_limits(t: Topology, active: dict[Triple, float]) -> dict[Triple, float]:
    """Largest power each active (tx, rx, channel) may use given the other active links."""
    pmax = t.bands[Band.SUB6].max_power_per_radio_w
    PI = t.interference_threshold_w
    victims = [(i, j, ch) for (i, j, ch) in active] + [(b.tx, b.rx, b.channel) for b in t.background]
    limits = {}
    for (k, h, ch) in active:
        lim = pmax
        for (i, j, ch2) in victims:
            if ch2 != ch or i == k or j == h:
                continue
            g = t.gain(Band.SUB6, k, j, ch)
            if g is not None:
                lim = min(lim, PI / g)
        limits[(k, h, ch)] = lim
    return limits


def extract_sub6_plan(sol: BnBResult, form: Sub6Formulation, x: Optional[np.ndarray] = None) -> DeploymentPlan:
    if x is None:
        if sol is None or sol.incumbent is None:
            raise ValueError("no incumbent to extract a plan from")
        x = sol.incumbent
    plan = extract_common(form, x, sol)
    t = form.topology
    band = t.bands[Band.SUB6]
    active = {}
    for key, col in form.x.items():
        if x[col] > 0.5:
            active[key] = _clean(x[form.p[key]], band.max_power_per_radio_w)
    limits = interference_power_limits(t, active)
    # a scheduled channel at zero power carries nothing and is left out of the plan
    active = {key: min(pw, limits[key]) for key, pw in active.items() if pw > 0}
    served = set(plan.served_ens(t))
    for (i, j) in form.en_links:
        chans = {ch: pw for (a, b, ch), pw in active.items() if (a, b) == (i, j)}
        # a flow left without powered channels stays in the plan so the capacity check flags it
        if not chans or (i not in served and (i, j) not in plan.flows):
            continue
        plan.en_link_alloc[(i, j)] = LinkAlloc(
            Band.SUB6, band.channel_width_hz * len(chans), float(sum(chans.values())), dict(sorted(chans.items()))
        )
    return plan

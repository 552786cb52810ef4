"""Independent post-hoc plan checks.

Everything here is recomputed from the topology and the plan alone; nothing
is read back from the MILP. A plan is accepted only when ``verify_plan``
returns an empty list.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

from .capacity import CapacityFn, capacity
from .topology import Band, DeploymentPlan, NodeKind, Topology, uplink_adjacency

REL_TOL = 1e-6
ABS_BPS = 1e-3


@dataclass(frozen=True)
class Violation:
    family: str
    detail: str

    def __str__(self) -> str:
        return f"{self.family}: {self.detail}"


def link_capacity_fn(t: Topology, band: Band, tx: int, rx: int, channel=None) -> CapacityFn:
    g = t.gain(band, tx, rx, channel) or 0.0
    gap = t.gap_to_capacity if band == Band.SUB6 else 1.0
    return CapacityFn(g, t.bands[band].noise_spectral_density_w_per_hz, gap)


def true_link_capacity(plan: DeploymentPlan, t: Topology, link) -> float:
    """Shannon capacity of the resources the plan gives ``link`` (0 if none)."""
    alloc = plan.en_link_alloc.get(link) or plan.an_gn_alloc.get(link)
    if alloc is None:
        return 0.0
    if alloc.channel_powers:
        w = t.bands[alloc.band].channel_width_hz
        return float(
            sum(capacity(link_capacity_fn(t, alloc.band, *link, ch), p, w) for ch, p in alloc.channel_powers.items())
        )
    return float(capacity(link_capacity_fn(t, alloc.band, *link), alloc.power_w, alloc.bandwidth_hz))


def _exceeds(value: float, limit: float) -> bool:
    return value > limit + REL_TOL * max(abs(limit), abs(value)) + 1e-15


def verify_plan(plan: DeploymentPlan, t: Topology) -> list[Violation]:
    out: list[Violation] = []
    out += _check_structure(plan, t)
    out += _check_flow_balance(plan, t)
    if plan.mode == "greedy":
        return out
    out += _check_true_capacity(plan, t)
    out += _check_mmwave_budgets(plan, t)
    if plan.mode == "microwave":
        out += _check_microwave(plan, t)
    elif plan.mode == "sub6":
        out += _check_sub6(plan, t)
    else:
        out.append(Violation("mode", f"unknown plan mode {plan.mode!r}"))
    return out


def _check_structure(plan: DeploymentPlan, t: Topology) -> list[Violation]:
    out = []
    kinds = {n.id: n.kind for n in t.nodes}
    selected = set(plan.selected_ans)
    en_band = Band.MICROWAVE if plan.mode == "microwave" else Band.SUB6
    en_ok = set(uplink_adjacency(t, en_band))
    mm_ok = set(uplink_adjacency(t, Band.MMWAVE))
    for j in selected:
        if kinds.get(j) != NodeKind.AGGREGATOR:
            out.append(Violation("placement", f"node {j} selected but is not an aggregator candidate"))
    for (i, j), f in plan.flows.items():
        if f < -ABS_BPS:
            out.append(Violation("flow", f"negative flow on ({i},{j})"))
        src, dst = kinds.get(i), kinds.get(j)
        if src == NodeKind.EDGE:
            if plan.mode != "greedy" and (i, j) not in en_ok:
                out.append(Violation("adjacency", f"flow on unusable edge link ({i},{j})"))
            if dst == NodeKind.AGGREGATOR and j not in selected:
                out.append(Violation("placement", f"flow into unselected aggregator {j}"))
            if i in plan.infeasible_ens and f > ABS_BPS:
                out.append(Violation("flow", f"infeasible edge node {i} still routes traffic"))
        elif src == NodeKind.AGGREGATOR:
            if (i, j) not in mm_ok:
                out.append(Violation("adjacency", f"flow on unusable 60 GHz link ({i},{j})"))
            if i not in selected and f > ABS_BPS:
                out.append(Violation("placement", f"unselected aggregator {i} forwards traffic"))
        else:
            out.append(Violation("adjacency", f"flow on non-uplink pair ({i},{j})"))
    expected = sum(t.node(j).cost for j in selected)
    if not math.isclose(plan.objective, expected, rel_tol=1e-9, abs_tol=1e-9):
        out.append(Violation("objective", f"objective {plan.objective} != deployment cost {expected}"))
    if plan.gap < 0:
        out.append(Violation("objective", "negative gap"))
    return out


def _check_flow_balance(plan: DeploymentPlan, t: Topology) -> list[Violation]:
    out = []
    infeasible = set(plan.infeasible_ens)
    for i in t.edge_nodes:
        if i in infeasible:
            continue
        d = t.node(i).demand_bps
        sent = plan.outflow(i)
        if abs(sent - d) > REL_TOL * d:
            out.append(Violation("flow balance", f"edge node {i} routes {sent:.6g} of {d:.6g} bps"))
    for j in t.aggregators:
        fin, fout = plan.inflow(j), plan.outflow(j)
        if abs(fin - fout) > REL_TOL * max(fin, fout) + ABS_BPS:
            out.append(Violation("flow balance", f"aggregator {j} receives {fin:.6g} but forwards {fout:.6g} bps"))
    if plan.mode == "greedy":
        for i in t.edge_nodes:
            if i in infeasible:
                continue
            used = [j for (a, j), f in plan.flows.items() if a == i and f > ABS_BPS]
            if len(used) != 1:
                out.append(Violation("assignment", f"edge node {i} assigned to {len(used)} centers"))
    return out


def _check_true_capacity(plan: DeploymentPlan, t: Topology) -> list[Violation]:
    out = []
    for link, f in sorted(plan.flows.items()):
        if f <= ABS_BPS:
            continue
        cap = true_link_capacity(plan, t, link)
        if f > cap + REL_TOL * f:
            out.append(Violation("true capacity", f"link {link} carries {f:.6g} bps over capacity {cap:.6g}"))
    return out


def _check_mmwave_budgets(plan: DeploymentPlan, t: Topology) -> list[Violation]:
    out = []
    mm = t.bands[Band.MMWAVE]
    w = defaultdict(float)
    p = defaultdict(float)
    for (j, _), a in plan.an_gn_alloc.items():
        w[j] += a.bandwidth_hz
        p[j] += a.power_w
    for j in sorted(w):
        if _exceeds(w[j], mm.max_bandwidth_per_radio_hz):
            out.append(Violation("60 GHz budget", f"aggregator {j} uses {w[j]:.6g} Hz"))
        if _exceeds(p[j], mm.max_power_per_radio_w):
            out.append(Violation("60 GHz budget", f"aggregator {j} uses {p[j]:.6g} W"))
    return out


def _check_microwave(plan: DeploymentPlan, t: Topology) -> list[Violation]:
    out = []
    band = t.bands[Band.MICROWAVE]
    en_w, en_p, rx_w = defaultdict(float), defaultdict(float), defaultdict(float)
    for (i, j), a in plan.en_link_alloc.items():
        if a.bandwidth_hz < 0 or a.power_w < 0:
            out.append(Violation("budget", f"negative resource on ({i},{j})"))
        en_w[i] += a.bandwidth_hz
        en_p[i] += a.power_w
        rx_w[j] += a.bandwidth_hz
    for i in sorted(en_w):
        if _exceeds(en_w[i], band.max_bandwidth_per_radio_hz):
            out.append(Violation("budget", f"edge node {i} bandwidth {en_w[i]:.6g} Hz"))
        if _exceeds(en_p[i], band.max_power_per_radio_w):
            out.append(Violation("budget", f"edge node {i} power {en_p[i]:.6g} W"))
    for j in sorted(rx_w):
        room = t.node(j).max_radios * band.max_bandwidth_per_radio_hz
        res = t.reservations.get(j)
        if res is not None:
            room -= res.inbound_bandwidth_hz
        if _exceeds(rx_w[j], room):
            out.append(Violation("budget", f"node {j} receives on {rx_w[j]:.6g} Hz, room {room:.6g}"))
    return out


def _check_sub6(plan: DeploymentPlan, t: Topology) -> list[Violation]:
    out = []
    band = t.bands[Band.SUB6]
    A = t.sdma_order
    P_I = t.interference_threshold_w
    active = []
    for (i, j), a in sorted(plan.en_link_alloc.items()):
        for ch, p in sorted(a.channel_powers.items()):
            if not 0 <= ch < band.num_channels:
                out.append(Violation("channel", f"link ({i},{j}) uses unknown channel {ch}"))
            if p < 0 or _exceeds(p, band.max_power_per_radio_w):
                out.append(Violation("budget", f"link ({i},{j}) channel {ch} power {p:.6g} W"))
            active.append((i, j, ch, p))
    per_en = defaultdict(int)
    users = defaultdict(int)
    node_channels = defaultdict(set)
    for i, j, ch, _ in active:
        per_en[i] += 1
        users[(j, ch)] += 1
        node_channels[j].add(ch)
    for j, res in t.reservations.items():
        for ch, n in res.channel_users.items():
            if n > 0:
                users[(j, ch)] += n
                node_channels[j].add(ch)
    for i, n in sorted(per_en.items()):
        if n > t.node(i).max_radios:
            out.append(Violation("radios", f"edge node {i} schedules {n} link-channels on {t.node(i).max_radios} radios"))
    for j, chans in sorted(node_channels.items()):
        if len(chans) > t.node(j).max_radios:
            out.append(Violation("radios", f"node {j} listens on {len(chans)} channels with {t.node(j).max_radios} radios"))
    for (j, ch), n in sorted(users.items()):
        if n > A:
            out.append(Violation("sdma", f"node {j} channel {ch} serves {n} links, order {A}"))
    victims = [(i, j, ch) for i, j, ch, _ in active] + [(b.tx, b.rx, b.channel) for b in t.background]
    transmitters = [(i, j, ch, p) for i, j, ch, p in active]
    for k, h, ch, p in transmitters:
        for i, j, ch2 in victims:
            if ch2 != ch or k == i or h == j:
                continue
            g = t.gain(Band.SUB6, k, j, ch)
            if g is None:
                continue
            if _exceeds(p * g, P_I):
                out.append(Violation("interference", f"({k},{h}) ch {ch} puts {p * g:.6g} W at receiver {j}"))
    for b in t.background:
        for i, j, ch, _ in active:
            if b.channel != ch or b.tx == i or b.rx == j:
                continue
            g = t.gain(Band.SUB6, b.tx, j, ch)
            if g is not None and _exceeds(b.power_w * g, P_I):
                out.append(Violation("interference", f"earlier link ({b.tx},{b.rx}) ch {ch} interferes at {j}"))
    return out

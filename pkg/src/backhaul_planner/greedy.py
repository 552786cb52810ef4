"""Greedy weighted set-cover placement baseline.

Channels are assumed unlimited and every edge node talks to exactly one
aggregator or gateway. A center covers an edge node when the link at full
power and full radio bandwidth can carry that node's demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .capacity import CapacityFn, capacity
from .topology import Band, DeploymentPlan, Topology, uplink_adjacency


@dataclass(frozen=True)
class CoverageSet:
    center: int
    members: frozenset[int]
    weight: float


class OpCounter:
    """Counts elementary set-membership operations for scaling checks."""

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int) -> None:
        self.count += n


def harmonic(n: int) -> float:
    return float(sum(1.0 / k for k in range(1, n + 1)))


def _best_gain(t: Topology, band: Band, i: int, j: int) -> Optional[float]:
    g = t.gain(band, i, j)
    if g is not None:
        return g
    per_channel = [t.gain(band, i, j, m) for m in range(t.bands[band].num_channels)]
    per_channel = [x for x in per_channel if x is not None]
    return max(per_channel) if per_channel else None


def full_power_capacity(t: Topology, band: Band, i: int, j: int) -> float:
    g = _best_gain(t, band, i, j)
    if g is None:
        return 0.0
    prof = t.bands[band]
    gap = t.gap_to_capacity if band == Band.SUB6 else 1.0
    return float(capacity(CapacityFn(g, prof.noise_spectral_density_w_per_hz, gap), prof.max_power_per_radio_w, prof.max_bandwidth_per_radio_hz))


def coverage_sets(t: Topology, band: Band = Band.SUB6) -> list[CoverageSet]:
    """One set per AN candidate and GN, in id order.

    Aggregators without any 60 GHz link to a gateway cannot backhaul and get
    an empty set.
    """
    live = {j for j, _ in uplink_adjacency(t, Band.MMWAVE)}
    links = uplink_adjacency(t, band)
    ans = set(t.aggregators)
    out = []
    for center in sorted(ans | set(t.gateways)):
        members = set()
        if center not in ans or center in live:
            for i, j in links:
                if j == center and full_power_capacity(t, band, i, j) >= t.node(i).demand_bps:
                    members.add(i)
        out.append(CoverageSet(center, frozenset(members), t.node(center).cost if center in ans else 0.0))
    return out


def _pick(sets: list[CoverageSet], uncovered: set[int], weighted: bool, ops: OpCounter) -> Optional[tuple[CoverageSet, set[int]]]:
    best = None
    best_key = None
    for s in sets:
        ops.add(len(s.members))
        gain = s.members & uncovered
        if not gain:
            continue
        if weighted:
            ratio = math.inf if s.weight <= 0 else len(gain) / s.weight
            key = (-ratio, -len(gain), s.weight, s.center)
        else:
            key = (-len(gain), s.weight, s.center)
        if best_key is None or key < best_key:
            best, best_key = (s, gain), key
    return best


def greedy_place(t: Topology, band: Band = Band.SUB6, *, sets: Optional[list[CoverageSet]] = None) -> DeploymentPlan:
    """Gateways first by remaining coverage, then aggregators by coverage per unit cost.

    Ties go to the lower cost and then the lower node id. The plan's
    ``lower_bound`` is the set-cover bound ``cost / H(d)`` with ``d`` the
    largest coverage set, and ``stats["operations"]`` the work counter.
    """
    ops = OpCounter()
    sets = coverage_sets(t, band) if sets is None else sets
    gateways = set(t.gateways)
    gn_sets = [s for s in sets if s.center in gateways]
    an_sets = [s for s in sets if s.center not in gateways]
    coverable = set().union(*(s.members for s in sets)) if sets else set()
    uncovered = set(coverable)
    assign: dict[int, int] = {}
    used_gns: list[int] = []
    remaining_gns = list(gn_sets)
    while uncovered and remaining_gns:
        pick = _pick(remaining_gns, uncovered, False, ops)
        if pick is None:
            break
        s, gain = pick
        remaining_gns.remove(s)
        used_gns.append(s.center)
        for i in gain:
            assign[i] = s.center
        uncovered -= gain
    selected: list[int] = []
    remaining_ans = list(an_sets)
    while uncovered and remaining_ans:
        pick = _pick(remaining_ans, uncovered, True, ops)
        if pick is None:
            break
        s, gain = pick
        remaining_ans.remove(s)
        selected.append(s.center)
        for i in gain:
            assign[i] = s.center
        uncovered -= gain

    flows = {(i, j): t.node(i).demand_bps for i, j in sorted(assign.items())}
    for j in sorted(selected):
        load = sum(t.node(i).demand_bps for i, c in assign.items() if c == j)
        k = _uplink_gateway(t, j)
        flows[(j, k)] = load
    cost = float(sum(t.node(j).cost for j in selected))
    d = max((len(s.members) for s in sets), default=0)
    plan = DeploymentPlan(
        mode="greedy",
        selected_ans=tuple(sorted(selected)),
        flows=flows,
        objective=cost,
        lower_bound=cost / harmonic(d) if d else 0.0,
        infeasible_ens=tuple(i for i in t.edge_nodes if i not in assign),
        stats={"operations": ops.count, "gateways_used": sorted(used_gns), "band": band.value},
    )
    return plan


def _uplink_gateway(t: Topology, an: int) -> int:
    best = max(
        ((t.gain(Band.MMWAVE, an, k) or 0.0, -k) for k in t.gateways if t.gain(Band.MMWAVE, an, k) is not None),
        default=None,
    )
    if best is None:
        raise ValueError(f"aggregator {an} has no 60 GHz link to a gateway")
    return -best[1]

"""Topology, band profiles and the deployment plan shared by every planner stage.

All quantities are stored in linear SI units (W, Hz, bit/s, dimensionless gain).
Conversions from dB happen once, at ingestion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

THERMAL_NOISE_DBM_HZ = -174.0
DEFAULT_GAIN_FLOOR = 1e-30


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        return -math.inf
    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    return linear_to_db(w) + 30.0


class Band(str, Enum):
    SUB6 = "sub6"
    MICROWAVE = "microwave"
    MMWAVE = "mmwave"


class NodeKind(str, Enum):
    EDGE = "edge"
    AGGREGATOR = "aggregator"
    GATEWAY = "gateway"


@dataclass(frozen=True)
class BandProfile:
    band_id: Band
    channel_width_hz: float
    num_channels: int
    max_power_per_radio_w: float
    max_bandwidth_per_radio_hz: float
    antenna_gain_linear: float
    rain_attenuation_db: float
    oxygen_absorption_db: float
    fading_margin_db: float
    noise_spectral_density_w_per_hz: float
    carrier_hz: float

    @property
    def extra_attenuation_db(self) -> float:
        return self.rain_attenuation_db + self.oxygen_absorption_db + self.fading_margin_db

    @property
    def noise_per_channel_w(self) -> float:
        return self.noise_spectral_density_w_per_hz * self.channel_width_hz


def default_band_profiles(n0_dbm_hz: float = THERMAL_NOISE_DBM_HZ) -> dict[Band, BandProfile]:
    """Per-band defaults at 5.8, 28 and 60 GHz.

    The microwave and mmWave radios are limited to one channel of bandwidth
    each; the channelized sub-6 radio spans all of its channels.
    """
    n0 = dbm_to_watts(n0_dbm_hz)
    sub6 = BandProfile(
        band_id=Band.SUB6,
        channel_width_hz=40e6,
        num_channels=6,
        max_power_per_radio_w=dbm_to_watts(19.0),
        max_bandwidth_per_radio_hz=6 * 40e6,
        antenna_gain_linear=db_to_linear(17.0),
        rain_attenuation_db=0.0,
        oxygen_absorption_db=0.0,
        fading_margin_db=15.0,
        noise_spectral_density_w_per_hz=n0,
        carrier_hz=5.8e9,
    )
    microwave = BandProfile(
        band_id=Band.MICROWAVE,
        channel_width_hz=56e6,
        num_channels=6,
        max_power_per_radio_w=dbm_to_watts(19.0),
        max_bandwidth_per_radio_hz=56e6,
        antenna_gain_linear=db_to_linear(38.0),
        rain_attenuation_db=2.5,
        oxygen_absorption_db=0.5,
        fading_margin_db=25.0,
        noise_spectral_density_w_per_hz=n0,
        carrier_hz=28e9,
    )
    mmwave = BandProfile(
        band_id=Band.MMWAVE,
        channel_width_hz=160e6,
        num_channels=6,
        max_power_per_radio_w=dbm_to_watts(25.0),
        max_bandwidth_per_radio_hz=160e6,
        antenna_gain_linear=db_to_linear(38.0),
        rain_attenuation_db=10.0,
        oxygen_absorption_db=15.0,
        fading_margin_db=25.0,
        noise_spectral_density_w_per_hz=n0,
        carrier_hz=60e9,
    )
    return {Band.SUB6: sub6, Band.MICROWAVE: microwave, Band.MMWAVE: mmwave}


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    demand_bps: float = 0.0
    deploy_cost: Optional[float] = None
    max_radios: int = 1
    position: Optional[tuple[float, float, float]] = None

    @property
    def cost(self) -> float:
        return self.deploy_cost if self.deploy_cost is not None else 0.0


Link = tuple[int, int]


@dataclass(frozen=True)
class LinkGainTable:
    """Directed linear power gains per band.

    ``channel_gains`` optionally overrides the sub-6 gain of a link on a
    specific channel, keyed by ``(tx, rx, channel)``.
    """

    gains: Mapping[Band, Mapping[Link, float]] = field(default_factory=dict)
    channel_gains: Mapping[tuple[int, int, int], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        frozen = {Band(b): MappingProxyType(dict(table)) for b, table in self.gains.items()}
        object.__setattr__(self, "gains", MappingProxyType(frozen))
        object.__setattr__(self, "channel_gains", MappingProxyType(dict(self.channel_gains)))

    def gain(self, band: Band, tx: int, rx: int, channel: Optional[int] = None) -> Optional[float]:
        if channel is not None and band == Band.SUB6:
            g = self.channel_gains.get((tx, rx, channel))
            if g is not None:
                return g
        table = self.gains.get(band)
        if table is None:
            return None
        return table.get((tx, rx))

    def pairs(self, band: Band) -> list[Link]:
        table = self.gains.get(band, {})
        return sorted(table)


@dataclass(frozen=True)
class NodeReservation:
    """Resources already consumed at a node by an accepted partial plan."""

    inbound_bandwidth_hz: float = 0.0
    channel_users: Mapping[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class BackgroundLink:
    """An already-accepted sub-6 transmission that new links must coexist with."""

    tx: int
    rx: int
    channel: int
    power_w: float


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    gains: LinkGainTable
    bands: Mapping[Band, BandProfile] = field(default_factory=default_band_profiles)
    sdma_order: int = 1
    interference_threshold_w: float = 1.6e-13
    gap_to_capacity: float = 1.0
    gain_floor: float = DEFAULT_GAIN_FLOOR
    reservations: Mapping[int, NodeReservation] = field(default_factory=dict)
    background: tuple[BackgroundLink, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "bands", MappingProxyType(dict(self.bands)))
        object.__setattr__(self, "reservations", MappingProxyType(dict(self.reservations)))
        object.__setattr__(self, "background", tuple(self.background))
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: int) -> Node:
        return self._by_id[node_id]  # type: ignore[attr-defined]

    def ids_of(self, kind: NodeKind) -> list[int]:
        return sorted(n.id for n in self.nodes if n.kind == kind)

    @property
    def edge_nodes(self) -> list[int]:
        return self.ids_of(NodeKind.EDGE)

    @property
    def aggregators(self) -> list[int]:
        return self.ids_of(NodeKind.AGGREGATOR)

    @property
    def gateways(self) -> list[int]:
        return self.ids_of(NodeKind.GATEWAY)

    def gain(self, band: Band, tx: int, rx: int, channel: Optional[int] = None) -> Optional[float]:
        """Usable gain of a directed link, or None if below the gain floor."""
        g = self.gains.gain(band, tx, rx, channel)
        if g is None or not (g > self.gain_floor) or not math.isfinite(g):
            return None
        return g

    def replace(self, **changes) -> "Topology":
        from dataclasses import replace

        return replace(self, **changes)


def validate_topology(t: Topology) -> list[str]:
    """Return human-readable invariant violations; empty when the topology is well formed."""
    problems: list[str] = []
    ids = [n.id for n in t.nodes]
    if sorted(ids) != list(range(len(ids))):
        problems.append("node ids must be dense 0..N-1 without duplicates")
    if not any(n.kind == NodeKind.GATEWAY for n in t.nodes):
        problems.append("no gateway node")
    for n in t.nodes:
        if n.kind == NodeKind.EDGE:
            if not (n.demand_bps > 0) or not math.isfinite(n.demand_bps):
                problems.append(f"edge node {n.id}: zero demand")
        elif n.demand_bps != 0:
            problems.append(f"{n.kind.value} node {n.id}: demand defined on non-edge node")
        if n.kind == NodeKind.AGGREGATOR:
            if n.deploy_cost is None:
                problems.append(f"aggregator node {n.id}: missing deploy cost")
            elif not (n.deploy_cost >= 0) or not math.isfinite(n.deploy_cost):
                problems.append(f"aggregator node {n.id}: negative deploy cost")
        elif n.deploy_cost is not None:
            problems.append(f"{n.kind.value} node {n.id}: deploy cost defined on non-aggregator node")
        if n.max_radios < 1:
            problems.append(f"node {n.id}: max_radios must be >= 1")
    known = set(ids)
    for band, table in t.gains.gains.items():
        for (i, j), g in table.items():
            if i == j:
                problems.append(f"{band.value} gain ({i},{j}): self link")
            if i not in known or j not in known:
                problems.append(f"{band.value} gain ({i},{j}): unknown node")
            if not (g > 0) or not math.isfinite(g):
                problems.append(f"{band.value} gain ({i},{j}): gain must be finite and positive")
    for (i, j, m), g in t.gains.channel_gains.items():
        if i == j:
            problems.append(f"sub6 channel gain ({i},{j},{m}): self link")
        if not (g > 0) or not math.isfinite(g):
            problems.append(f"sub6 channel gain ({i},{j},{m}): gain must be finite and positive")
        nch = t.bands[Band.SUB6].num_channels if Band.SUB6 in t.bands else 0
        if not 0 <= m < nch:
            problems.append(f"sub6 channel gain ({i},{j},{m}): channel out of range")
    for band in Band:
        prof = t.bands.get(band)
        if prof is None:
            problems.append(f"band {band.value}: missing profile")
            continue
        positive = [
            prof.channel_width_hz,
            prof.max_power_per_radio_w,
            prof.max_bandwidth_per_radio_hz,
            prof.antenna_gain_linear,
            prof.noise_spectral_density_w_per_hz,
        ]
        if not all(v > 0 and math.isfinite(v) for v in positive) or prof.num_channels < 1:
            problems.append(f"band {band.value}: physical parameters must be positive")
        if min(prof.rain_attenuation_db, prof.oxygen_absorption_db, prof.fading_margin_db) < 0:
            problems.append(f"band {band.value}: attenuations must be non-negative")
    sub6 = t.bands.get(Band.SUB6)
    if sub6 is not None and not math.isclose(
        sub6.max_bandwidth_per_radio_hz, sub6.channel_width_hz * sub6.num_channels, rel_tol=1e-12
    ):
        problems.append("band sub6: max bandwidth must equal channel width x number of channels")
    if t.sdma_order < 1:
        problems.append("sdma order A must be >= 1")
    if not (t.interference_threshold_w > 0):
        problems.append("interference threshold P_I must be positive")
    if not (t.gap_to_capacity >= 1):
        problems.append("gap to capacity must be >= 1")
    return problems


EN_BANDS = (Band.SUB6, Band.MICROWAVE)


def uplink_adjacency(t: Topology, band: Band) -> list[Link]:
    """Directed uplink links usable in ``band``.

    EN->AN and EN->GN for the edge bands, AN->GN for mmWave. Pairs absent
    from the gain table (or under the gain floor) are skipped.
    """
    kinds = {n.id: n.kind for n in t.nodes}
    if band == Band.MMWAVE:
        ok_src, ok_dst = {NodeKind.AGGREGATOR}, {NodeKind.GATEWAY}
    else:
        ok_src, ok_dst = {NodeKind.EDGE}, {NodeKind.AGGREGATOR, NodeKind.GATEWAY}
    links = []
    for i, j in t.gains.pairs(band):
        if kinds.get(i) in ok_src and kinds.get(j) in ok_dst and t.gain(band, i, j) is not None:
            links.append((i, j))
    return links


@dataclass
class LinkAlloc:
    band: Band
    bandwidth_hz: float
    power_w: float
    channel_powers: dict[int, float] = field(default_factory=dict)


@dataclass
class DeploymentPlan:
    """Placement, routing and radio resources chosen for one topology."""

    mode: str
    selected_ans: tuple[int, ...] = ()
    flows: dict[Link, float] = field(default_factory=dict)
    en_link_alloc: dict[Link, LinkAlloc] = field(default_factory=dict)
    an_gn_alloc: dict[Link, LinkAlloc] = field(default_factory=dict)
    objective: float = 0.0
    lower_bound: float = 0.0
    infeasible_ens: tuple[int, ...] = ()
    stats: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return plan_gap(self.objective, self.lower_bound)

    def served_ens(self, t: Topology) -> list[int]:
        bad = set(self.infeasible_ens)
        return [i for i in t.edge_nodes if i not in bad]

    def inflow(self, node: int) -> float:
        return sum(f for (_, j), f in self.flows.items() if j == node)

    def outflow(self, node: int) -> float:
        return sum(f for (i, _), f in self.flows.items() if i == node)


def plan_gap(objective: float, lower_bound: float, eps: float = 1e-12) -> float:
    return max(0.0, (objective - lower_bound) / max(abs(objective), eps))


def deployment_cost(t: Topology, ans: Iterable[int]) -> float:
    return float(sum(t.node(j).cost for j in ans))

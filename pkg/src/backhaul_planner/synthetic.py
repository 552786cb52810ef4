"""Seeded random street-grid scenarios for tests and demos."""

from __future__ import annotations

from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from .link_budget import gains_from_positions
from .topology import Band, BandProfile, LinkGainTable, Node, NodeKind, Topology, db_to_linear, default_band_profiles

EN_HEIGHT_M = 6.0
ROOF_HEIGHT_M = 30.0


def random_topology(
    seed: int,
    n_en: int,
    n_an: int,
    n_gn: int = 1,
    *,
    area_m: float = 400.0,
    demand_mbps: float | tuple[float, float] = 100.0,
    costs: Optional[Sequence[float]] = None,
    cost_range: Optional[tuple[float, float]] = None,
    en_radios: int = 1,
    node_radios: int = 1,
    sdma_order: int = 1,
    shadowing_db: float = 6.0,
    channel_spread_db: float = 0.0,
    num_channels: Optional[int] = None,
    interference_threshold_w: float = 1.6e-13,
    bands: Optional[dict[Band, BandProfile]] = None,
) -> Topology:
    """Uniformly scattered ENs at street level and rooftop AN/GN sites.

    Node ids are dense: ENs first, then AN candidates, then gateways. Costs
    default to 1 for every AN (equal-cost setting) unless ``costs`` or
    ``cost_range`` is given. ``channel_spread_db`` adds independent per-channel
    fading to the sub-6 gains; ``num_channels`` shrinks the sub-6 channel set.
    """
    rng = np.random.default_rng(seed)
    bands = dict(bands or default_band_profiles())
    if num_channels is not None:
        sub6 = bands[Band.SUB6]
        bands[Band.SUB6] = replace(
            sub6, num_channels=num_channels, max_bandwidth_per_radio_hz=sub6.channel_width_hz * num_channels
        )
    nodes: list[Node] = []
    nid = 0
    for _ in range(n_en):
        if isinstance(demand_mbps, tuple):
            d = float(rng.uniform(*demand_mbps))
        else:
            d = float(demand_mbps)
        xy = rng.uniform(0.0, area_m, size=2)
        nodes.append(Node(nid, NodeKind.EDGE, demand_bps=d * 1e6, max_radios=en_radios, position=(xy[0], xy[1], EN_HEIGHT_M)))
        nid += 1
    for a in range(n_an):
        if costs is not None:
            c = float(costs[a])
        elif cost_range is not None:
            c = float(np.round(rng.uniform(*cost_range), 3))
        else:
            c = 1.0
        xy = rng.uniform(0.0, area_m, size=2)
        nodes.append(Node(nid, NodeKind.AGGREGATOR, deploy_cost=c, max_radios=node_radios, position=(xy[0], xy[1], ROOF_HEIGHT_M)))
        nid += 1
    for _ in range(n_gn):
        xy = rng.uniform(0.0, area_m, size=2)
        nodes.append(Node(nid, NodeKind.GATEWAY, max_radios=node_radios, position=(xy[0], xy[1], ROOF_HEIGHT_M)))
        nid += 1
    gains = gains_from_positions(nodes, bands, shadowing_db=shadowing_db, seed=int(rng.integers(2**31)))
    if channel_spread_db > 0:
        gains = _with_channel_fading(gains, bands[Band.SUB6].num_channels, channel_spread_db, rng)
    return Topology(
        tuple(nodes),
        gains,
        bands,
        sdma_order=sdma_order,
        interference_threshold_w=interference_threshold_w,
    )


def _with_channel_fading(gains: LinkGainTable, num_channels: int, spread_db: float, rng) -> LinkGainTable:
    per_channel = {}
    for (i, j), g in sorted(gains.gains[Band.SUB6].items()):
        for m in range(num_channels):
            per_channel[(i, j, m)] = g * db_to_linear(rng.normal(0.0, spread_db))
    return LinkGainTable(dict(gains.gains), per_channel)


def random_gain_topology(
    seed: int,
    n_en: int,
    n_an: int,
    n_gn: int = 1,
    *,
    snr_db_range: tuple[float, float] = (0.0, 30.0),
    link_prob: float = 0.7,
    demand_mbps: tuple[float, float] = (40.0, 200.0),
    cost_range: tuple[float, float] = (1.0, 5.0),
    num_channels: Optional[int] = None,
    sdma_order: int = 1,
    en_radios: int = 1,
    node_radios: int = 1,
    interference_threshold_w: float = 1.6e-13,
) -> Topology:
    """Position-free instance whose gains are drawn as full-power SNRs.

    Each EN link exists with probability ``link_prob``; its gain is chosen so
    that the full-power, full-bandwidth SNR is uniform in ``snr_db_range``.
    Every AN gets a mmWave link to at least one GN.
    """
    rng = np.random.default_rng(seed)
    bands = default_band_profiles()
    if num_channels is not None:
        s = bands[Band.SUB6]
        bands[Band.SUB6] = replace(s, num_channels=num_channels, max_bandwidth_per_radio_hz=s.channel_width_hz * num_channels)
    ens = list(range(n_en))
    ans = list(range(n_en, n_en + n_an))
    gns = list(range(n_en + n_an, n_en + n_an + n_gn))
    nodes = [Node(i, NodeKind.EDGE, demand_bps=float(rng.uniform(*demand_mbps)) * 1e6, max_radios=en_radios) for i in ens]
    nodes += [
        Node(j, NodeKind.AGGREGATOR, deploy_cost=float(np.round(rng.uniform(*cost_range), 2)), max_radios=node_radios)
        for j in ans
    ]
    nodes += [Node(k, NodeKind.GATEWAY, max_radios=node_radios) for k in gns]

    def gain_for(band: Band, snr_db: float, width: float) -> float:
        b = bands[band]
        return db_to_linear(snr_db) * b.noise_spectral_density_w_per_hz * width / b.max_power_per_radio_w

    tables: dict[Band, dict] = {b: {} for b in Band}
    channel: dict = {}
    for i in ens:
        for j in ans + gns:
            for band in (Band.MICROWAVE, Band.SUB6):
                if rng.random() < link_prob:
                    width = bands[band].channel_width_hz
                    tables[band][(i, j)] = gain_for(band, rng.uniform(*snr_db_range), width)
    for j in ans:
        targets = [k for k in gns if rng.random() < 0.8] or [gns[int(rng.integers(len(gns)))]]
        for k in targets:
            tables[Band.MMWAVE][(j, k)] = gain_for(Band.MMWAVE, rng.uniform(15.0, 35.0), bands[Band.MMWAVE].channel_width_hz)
    # sub-6 interference paths between every EN and every receiver
    for i in ens:
        for j in ans + gns:
            if (i, j) not in tables[Band.SUB6]:
                tables[Band.SUB6][(i, j)] = gain_for(Band.SUB6, rng.uniform(-15.0, 5.0), bands[Band.SUB6].channel_width_hz)
    return Topology(
        tuple(nodes),
        LinkGainTable(tables, channel),
        bands,
        sdma_order=sdma_order,
        interference_threshold_w=interference_threshold_w,
    )

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from backhaul_planner.topology import (  # noqa: E402
    Band,
    LinkGainTable,
    Node,
    NodeKind,
    Topology,
    db_to_linear,
    default_band_profiles,
)


def snr_gain(t_bands, band: Band, snr_db: float, width: float | None = None) -> float:
    """Gain giving ``snr_db`` at full power over ``width`` (default: one channel)."""
    b = t_bands[band]
    w = b.channel_width_hz if width is None else width
    return db_to_linear(snr_db) * b.noise_spectral_density_w_per_hz * w / b.max_power_per_radio_w


def make_topology(
    ens: dict[int, float],
    ans: dict[int, float],
    gns: list[int],
    gains: dict[Band, dict[tuple[int, int], float]],
    **kwargs,
) -> Topology:
    """Topology from ``{id: demand_mbps}``, ``{id: cost}``, gateway ids and gains given as full-power SNR in dB."""
    bands = kwargs.pop("bands", None) or default_band_profiles()
    nodes = [Node(i, NodeKind.EDGE, demand_bps=d * 1e6) for i, d in ens.items()]
    nodes += [Node(j, NodeKind.AGGREGATOR, deploy_cost=c) for j, c in ans.items()]
    nodes += [Node(k, NodeKind.GATEWAY) for k in gns]
    radios = kwargs.pop("radios", {})
    nodes = [Node(n.id, n.kind, n.demand_bps, n.deploy_cost, radios.get(n.id, 1), n.position) for n in nodes]
    tables = {
        band: {l: snr_gain(bands, band, snr) for l, snr in table.items()} for band, table in gains.items()
    }
    return Topology(tuple(sorted(nodes, key=lambda n: n.id)), LinkGainTable(tables), bands, **kwargs)


@pytest.fixture
def bands():
    return default_band_profiles()

import math

import numpy as np
import pytest

from backhaul_planner.link_budget import (
    AntennaPattern,
    PathLossModel,
    free_space_loss_db,
    gains_from_positions,
    interference_margin,
    synth_gain,
)
from backhaul_planner.topology import (
    Band,
    DeploymentPlan,
    LinkAlloc,
    LinkGainTable,
    Node,
    NodeKind,
    Topology,
    default_band_profiles,
)

C = 299_792_458.0


def test_free_space_loss_by_hand():
    # 20 log10(4 pi d f / c)
    expected = 20 * math.log10(4 * math.pi * 100 * 28e9 / C)
    assert free_space_loss_db(100, 28e9) == pytest.approx(expected)


def test_gain_at_one_metre_is_reference_and_antennas():
    band = default_band_profiles()[Band.MICROWAVE]
    model = PathLossModel(60.0, 2.0, 3.5)
    g = synth_gain(model, band, 1.0, los=True)
    assert 10 * math.log10(g) == pytest.approx(-60.0 + 2 * 38.0)
    assert synth_gain(model, band, 1.0, los=False) == pytest.approx(g)


def test_inverse_square_with_exponent_two():
    band = default_band_profiles()[Band.SUB6]
    model = PathLossModel.for_band(band)
    assert synth_gain(model, band, 200.0, True) / synth_gain(model, band, 100.0, True) == pytest.approx(0.25)
    assert synth_gain(model, band, 200.0, False) / synth_gain(model, band, 100.0, False) == pytest.approx(2 ** -3.5)


def test_sixty_ghz_extra_attenuation_over_free_space():
    band = default_band_profiles()[Band.MMWAVE]
    model = PathLossModel.for_band(band)
    d = 150.0
    loss = model.loss_db(d, los=True)
    assert loss - free_space_loss_db(d, 60e9) == pytest.approx(50.0)


def test_exponent_validation_and_degenerate_distance():
    with pytest.raises(ValueError):
        PathLossModel(40.0, 1.5, 3.0)
    with pytest.raises(ValueError):
        PathLossModel(40.0, 3.0, 2.5)
    band = default_band_profiles()[Band.SUB6]
    with pytest.raises(ValueError, match="degenerate"):
        synth_gain(PathLossModel.for_band(band), band, 0.0, True)


def test_antenna_pattern_half_beamwidth_inclusive():
    pat = AntennaPattern(100.0, 10.0, 0.1)
    assert pat.gain(5.0) == 100.0
    assert pat.gain(5.0001) == 0.1
    with pytest.raises(ValueError):
        AntennaPattern(1.0, 10.0, 2.0)


def test_gains_from_positions_cover_uplink_pairs():
    nodes = [
        Node(0, NodeKind.EDGE, 1e8, position=(0, 0, 6)),
        Node(1, NodeKind.AGGREGATOR, deploy_cost=1.0, position=(100, 0, 30)),
        Node(2, NodeKind.GATEWAY, position=(200, 0, 30)),
    ]
    bands = default_band_profiles()
    table = gains_from_positions(nodes, bands)
    assert sorted(table.gains[Band.SUB6]) == [(0, 1), (0, 2)]
    assert sorted(table.gains[Band.MMWAVE]) == [(1, 2)]
    d = math.dist((0, 0, 6), (100, 0, 30))
    model = PathLossModel.for_band(bands[Band.MICROWAVE])
    assert table.gains[Band.MICROWAVE][(0, 1)] == pytest.approx(synth_gain(model, bands[Band.MICROWAVE], d, False))


def _line_topology(sidelobe_scenario=True):
    # two parallel 28 GHz links, 0->2 and 1->3, 50 m apart
    nodes = (
        Node(0, NodeKind.EDGE, 1e8, position=(0.0, 0.0, 0.0)),
        Node(1, NodeKind.EDGE, 1e8, position=(0.0, 50.0, 0.0)),
        Node(2, NodeKind.GATEWAY, position=(100.0, 0.0, 0.0)),
        Node(3, NodeKind.GATEWAY, position=(100.0, 50.0, 0.0)),
    )
    return Topology(nodes, LinkGainTable(), default_band_profiles())


def _plan(power=0.05, width=56e6):
    return DeploymentPlan(
        "microwave",
        flows={(0, 2): 1e8, (1, 3): 1e8},
        en_link_alloc={(0, 2): LinkAlloc(Band.MICROWAVE, width, power), (1, 3): LinkAlloc(Band.MICROWAVE, width, power)},
    )


def test_zero_sidelobe_gives_infinite_margin():
    t = _line_topology()
    m = interference_margin(_plan(), t, AntennaPattern(1000.0, 5.0, 0.0))
    assert m[Band.MICROWAVE] == math.inf
    assert m[Band.SUB6] is None


def test_adjacent_links_are_not_paired():
    t = _line_topology()
    plan = DeploymentPlan(
        "microwave",
        flows={(0, 2): 1e8, (1, 2): 1e8},
        en_link_alloc={(0, 2): LinkAlloc(Band.MICROWAVE, 28e6, 0.05), (1, 2): LinkAlloc(Band.MICROWAVE, 28e6, 0.05)},
    )
    assert interference_margin(plan, t, AntennaPattern(1000.0, 5.0, 1.0))[Band.MICROWAVE] is None


def test_margin_matches_db_arithmetic():
    t = _line_topology()
    side_db = -20.0
    pat = AntennaPattern(10 ** 3.8, 5.0, 10 ** (side_db / 10))
    m = interference_margin(_plan(0.05, 56e6), t, pat)[Band.MICROWAVE]
    band = t.bands[Band.MICROWAVE]
    # interferer 0 -> victim rx 3: distance sqrt(100^2 + 50^2), off-axis 26.6 deg at both ends
    d = math.hypot(100, 50)
    loss_db = free_space_loss_db(1.0, 28e9) + 35.0 * math.log10(d) + 28.0
    i_dbm = 10 * math.log10(0.05 * 1e3) + side_db + side_db - loss_db
    n_dbm = -174.0 + 10 * math.log10(56e6)
    assert m == pytest.approx(n_dbm - i_dbm, abs=0.1)
    assert np.isfinite(m)

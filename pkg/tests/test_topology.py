import math

import pytest
from conftest import make_topology

from backhaul_planner.topology import (
    Band,
    DeploymentPlan,
    LinkGainTable,
    Node,
    NodeKind,
    Topology,
    db_to_linear,
    dbm_to_watts,
    default_band_profiles,
    deployment_cost,
    linear_to_db,
    plan_gap,
    uplink_adjacency,
    validate_topology,
    watts_to_dbm,
)


def three_node(**kw):
    return make_topology({0: 100}, {1: 2.0}, [2], {Band.SUB6: {(0, 1): 10, (0, 2): 10}, Band.MMWAVE: {(1, 2): 20}}, **kw)


def test_unit_conversions_round_trip():
    assert db_to_linear(-120) == pytest.approx(1e-12)
    assert dbm_to_watts(30) == pytest.approx(1.0)
    assert watts_to_dbm(dbm_to_watts(19.0)) == pytest.approx(19.0)
    assert linear_to_db(db_to_linear(-37.5)) == pytest.approx(-37.5)


def test_default_profiles_follow_band_table():
    b = default_band_profiles()
    sub6, mw, mm = b[Band.SUB6], b[Band.MICROWAVE], b[Band.MMWAVE]
    assert sub6.channel_width_hz == 40e6 and mw.channel_width_hz == 56e6 and mm.channel_width_hz == 160e6
    assert all(p.num_channels == 6 for p in b.values())
    assert watts_to_dbm(sub6.max_power_per_radio_w) == pytest.approx(19)
    assert watts_to_dbm(mm.max_power_per_radio_w) == pytest.approx(25)
    assert linear_to_db(mw.antenna_gain_linear) == pytest.approx(38)
    assert mm.extra_attenuation_db == pytest.approx(50.0)
    assert sub6.max_bandwidth_per_radio_hz == 6 * 40e6


def test_well_formed_topology_has_no_violations():
    assert validate_topology(three_node()) == []


def test_missing_gateway_reported():
    t = make_topology({0: 100}, {1: 1.0}, [], {Band.SUB6: {(0, 1): 10}})
    assert "no gateway node" in validate_topology(t)


def test_zero_demand_reported_with_node_id():
    t = make_topology({0: 100, 1: 100, 2: 100, 3: 0}, {}, [4], {Band.SUB6: {(i, 4): 10 for i in range(4)}})
    assert "edge node 3: zero demand" in validate_topology(t)


def test_non_dense_ids_and_field_misuse_reported():
    bands = default_band_profiles()
    nodes = (
        Node(0, NodeKind.EDGE, demand_bps=1e6),
        Node(2, NodeKind.GATEWAY, deploy_cost=1.0),
        Node(3, NodeKind.AGGREGATOR),
    )
    problems = validate_topology(Topology(nodes, LinkGainTable(), bands))
    assert any("dense" in p for p in problems)
    assert any("deploy cost defined on non-aggregator" in p for p in problems)
    assert any("missing deploy cost" in p for p in problems)


def test_bad_gain_values_reported():
    t = three_node()
    bad = t.replace(gains=LinkGainTable({Band.SUB6: {(0, 0): 1e-9, (0, 1): -1.0}}))
    problems = validate_topology(bad)
    assert any("self link" in p for p in problems)
    assert any("finite and positive" in p for p in problems)


def test_uplink_adjacency_definition():
    t = three_node()
    assert uplink_adjacency(t, Band.SUB6) == [(0, 1), (0, 2)]
    assert uplink_adjacency(t, Band.MMWAVE) == [(1, 2)]


def test_missing_pair_and_en_to_en_gain_are_not_links():
    t = make_topology(
        {0: 100, 1: 100}, {2: 1.0}, [3],
        {Band.SUB6: {(0, 2): 10, (0, 1): 30, (1, 3): 5}, Band.MMWAVE: {(2, 3): 20}},
    )
    links = uplink_adjacency(t, Band.SUB6)
    assert (0, 1) not in links
    assert (0, 3) not in links
    assert links == [(0, 2), (1, 3)]


def test_gain_below_floor_treated_as_absent():
    t = three_node()
    t2 = t.replace(gain_floor=1.0)
    assert t2.gain(Band.SUB6, 0, 1) is None
    assert uplink_adjacency(t2, Band.SUB6) == []


def test_channel_gain_overrides_band_gain():
    t = three_node()
    t2 = t.replace(gains=LinkGainTable(dict(t.gains.gains), {(0, 1, 3): 5e-9}))
    assert t2.gain(Band.SUB6, 0, 1, 3) == 5e-9
    assert t2.gain(Band.SUB6, 0, 1, 2) == t.gain(Band.SUB6, 0, 1)


def test_plan_gap_and_cost():
    t = three_node()
    assert deployment_cost(t, [1]) == 2.0
    assert plan_gap(10.0, 6.0) == pytest.approx(0.4)
    assert plan_gap(0.0, 0.0) == 0.0
    p = DeploymentPlan("microwave", flows={(0, 1): 5.0, (1, 2): 5.0})
    assert p.inflow(1) == p.outflow(1) == 5.0
    assert p.served_ens(t) == [0]
    assert math.isfinite(p.gap)

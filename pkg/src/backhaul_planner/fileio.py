"""Topology files, plan documents and DOT export.

Topology document (JSON)::

    {
      "nodes": [{"id": 0, "kind": "edge", "demand_mbps": 100, "radios": 1, "xyz": [0, 0, 6]},
                {"id": 1, "kind": "aggregator", "cost": 1.0, "xyz": [...]},
                {"id": 2, "kind": "gateway"}],
      "gains": [{"band": "sub6", "from": 0, "to": 1, "db": -120, "channel": 0}],
      "bands": {"sub6": {"num_channels": 6, "max_power_dbm": 19}},
      "global": {"A": 1, "P_I_dbm": -98, "N0_dbm_hz": -174},
      "path_loss": {"los_exponent": 2.0, "nlos_exponent": 3.5, "shadowing_db": 0}
    }

Every dB quantity carries a ``_db``/``_dbm`` suffix and is converted to linear
units here, once. Bands and globals are partial overrides of the built-in
defaults. When no gains are listed and every node has ``xyz``, gains are
synthesized from the path-loss model.
"""

from __future__ import annotations

import json
import math
from dataclasses import replace
from pathlib import Path
from typing import Any, Optional, Union

from .link_budget import PathLossModel, gains_from_positions
from .topology import (
    Band,
    BandProfile,
    DeploymentPlan,
    LinkGainTable,
    Node,
    NodeKind,
    Topology,
    db_to_linear,
    dbm_to_watts,
    default_band_profiles,
    validate_topology,
)

PathLike = Union[str, Path]

KIND_ALIASES = {
    "edge": NodeKind.EDGE,
    "en": NodeKind.EDGE,
    "aggregator": NodeKind.AGGREGATOR,
    "an": NodeKind.AGGREGATOR,
    "gateway": NodeKind.GATEWAY,
    "gn": NodeKind.GATEWAY,
}

# (linear field, optional dB/dBm field, converter from the dB field)
_BAND_FIELDS = {
    "channel_width_hz": (None, None),
    "num_channels": (None, None),
    "max_power_per_radio_w": ("max_power_dbm", dbm_to_watts),
    "max_bandwidth_per_radio_hz": (None, None),
    "antenna_gain_linear": ("antenna_gain_db", db_to_linear),
    "rain_attenuation_db": (None, None),
    "oxygen_absorption_db": (None, None),
    "fading_margin_db": (None, None),
    "noise_spectral_density_w_per_hz": ("noise_dbm_hz", dbm_to_watts),
    "carrier_hz": (None, None),
}


class TopologyFormatError(ValueError):
    """Malformed document; the message names the offending field."""


class TopologyValidationError(ValueError):
    """Well-formed document describing an inconsistent topology."""

    def __init__(self, problems: list[str]) -> None:
        self.problems = list(problems)
        super().__init__("topology failed validation:\n  " + "\n  ".join(self.problems))


def _number(obj: dict, key: str, where: str, default: Any = None, *, integer: bool = False) -> Any:
    if key not in obj:
        if default is None:
            raise TopologyFormatError(f"{where}.{key}: required field missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TopologyFormatError(f"{where}.{key}: expected a number, got {v!r}")
    if integer:
        if float(v) != int(v):
            raise TopologyFormatError(f"{where}.{key}: expected an integer, got {v!r}")
        return int(v)
    if not math.isfinite(v):
        raise TopologyFormatError(f"{where}.{key}: must be finite")
    return float(v)


def _section(doc: dict, key: str, kind: type, default: Any) -> Any:
    v = doc.get(key, default)
    if not isinstance(v, kind):
        raise TopologyFormatError(f"{key}: expected a {'list' if kind is list else 'mapping'}")
    return v


def _parse_band(name: str, base: BandProfile, spec: dict) -> BandProfile:
    where = f"bands.{name}"
    if not isinstance(spec, dict):
        raise TopologyFormatError(f"{where}: expected a mapping")
    known = set(_BAND_FIELDS) | {f for f, _ in _BAND_FIELDS.values() if f}
    for key in spec:
        if key not in known:
            raise TopologyFormatError(f"{where}.{key}: unknown band field")
    changes = {}
    for lin, (db_key, conv) in _BAND_FIELDS.items():
        if lin in spec and db_key and db_key in spec:
            raise TopologyFormatError(f"{where}: give only one of {lin} and {db_key}")
        if lin in spec:
            changes[lin] = _number(spec, lin, where, integer=lin == "num_channels")
        elif db_key and db_key in spec:
            changes[lin] = conv(_number(spec, db_key, where))
    prof = replace(base, **changes)
    if base.band_id == Band.SUB6 and "num_channels" in changes and "max_bandwidth_per_radio_hz" not in changes:
        prof = replace(prof, max_bandwidth_per_radio_hz=prof.channel_width_hz * prof.num_channels)
    return prof


def _parse_node(raw: Any, k: int) -> Node:
    where = f"nodes[{k}]"
    if not isinstance(raw, dict):
        raise TopologyFormatError(f"{where}: expected a mapping")
    nid = _number(raw, "id", where, integer=True)
    kind_raw = raw.get("kind")
    if not isinstance(kind_raw, str) or kind_raw.lower() not in KIND_ALIASES:
        raise TopologyFormatError(f"{where}.kind: expected one of edge/aggregator/gateway, got {kind_raw!r}")
    kind = KIND_ALIASES[kind_raw.lower()]
    if "demand_mbps" in raw and "demand_bps" in raw:
        raise TopologyFormatError(f"{where}: give only one of demand_mbps and demand_bps")
    key = "demand_bps" if "demand_bps" in raw else "demand_mbps"
    demand = _number(raw, key, where, 0.0)
    if demand < 0:
        raise TopologyFormatError(f"{where}.{key}: must be non-negative, got {demand:g}")
    if key == "demand_mbps":
        demand *= 1e6
    cost = _number(raw, "cost", where) if "cost" in raw else None
    if cost is not None and cost < 0:
        raise TopologyFormatError(f"{where}.cost: must be non-negative, got {cost:g}")
    radios = _number(raw, "radios", where, 1, integer=True)
    xyz = raw.get("xyz")
    pos = None
    if xyz is not None:
        if not isinstance(xyz, list) or len(xyz) not in (2, 3):
            raise TopologyFormatError(f"{where}.xyz: expected [x, y] or [x, y, z]")
        vals = [_number({"v": v}, "v", f"{where}.xyz[{n}]") for n, v in enumerate(xyz)]
        pos = (vals[0], vals[1], vals[2] if len(vals) == 3 else 0.0)
    return Node(nid, kind, demand_bps=demand, deploy_cost=cost, max_radios=radios, position=pos)


def _parse_gains(raw: list) -> LinkGainTable:
    tables: dict[Band, dict] = {b: {} for b in Band}
    channel: dict = {}
    for k, g in enumerate(raw):
        where = f"gains[{k}]"
        if not isinstance(g, dict):
            raise TopologyFormatError(f"{where}: expected a mapping")
        try:
            band = Band(g.get("band"))
        except ValueError:
            raise TopologyFormatError(f"{where}.band: expected sub6/microwave/mmwave, got {g.get('band')!r}") from None
        i = _number(g, "from", where, integer=True)
        j = _number(g, "to", where, integer=True)
        if ("db" in g) == ("linear" in g):
            raise TopologyFormatError(f"{where}: give exactly one of db and linear")
        value = db_to_linear(_number(g, "db", where)) if "db" in g else _number(g, "linear", where)
        if "channel" in g:
            if band != Band.SUB6:
                raise TopologyFormatError(f"{where}.channel: only sub6 gains are per channel")
            m = _number(g, "channel", where, integer=True)
            key = (i, j, m)
            if key in channel:
                raise TopologyFormatError(f"{where}: duplicate gain for link ({i},{j}) channel {m}")
            channel[key] = value
        else:
            if (i, j) in tables[band]:
                raise TopologyFormatError(f"{where}: duplicate {band.value} gain for link ({i},{j})")
            tables[band][(i, j)] = value
    return LinkGainTable(tables, channel)


def parse_topology_document(doc: Any, *, seed: int = 0) -> Topology:
    if not isinstance(doc, dict):
        raise TopologyFormatError("document: expected a mapping at top level")
    for key in doc:
        if key not in ("nodes", "gains", "bands", "global", "path_loss"):
            raise TopologyFormatError(f"{key}: unknown top-level section")
    glob = _section(doc, "global", dict, {})
    n0 = _number(glob, "N0_dbm_hz", "global", -174.0)
    bands = default_band_profiles(n0)
    for name, spec in sorted(_section(doc, "bands", dict, {}).items()):
        try:
            band = Band(name)
        except ValueError:
            raise TopologyFormatError(f"bands.{name}: unknown band") from None
        bands[band] = _parse_band(name, bands[band], spec)
    nodes = tuple(_parse_node(raw, k) for k, raw in enumerate(_section(doc, "nodes", list, [])))
    gains_raw = _section(doc, "gains", list, [])
    if gains_raw:
        gains = _parse_gains(gains_raw)
    elif nodes and all(n.position is not None for n in nodes):
        pl = _section(doc, "path_loss", dict, {})
        los = _number(pl, "los_exponent", "path_loss", 2.0)
        nlos = _number(pl, "nlos_exponent", "path_loss", 3.5)
        try:
            models = {b: PathLossModel.for_band(p, los, nlos) for b, p in bands.items()}
        except ValueError as e:
            raise TopologyFormatError(f"path_loss: {e}") from None
        gains = gains_from_positions(
            nodes, bands, models=models, shadowing_db=_number(pl, "shadowing_db", "path_loss", 0.0), seed=seed
        )
    else:
        gains = LinkGainTable()
    if "P_I_dbm" in glob and "P_I_w" in glob:
        raise TopologyFormatError("global: give only one of P_I_dbm and P_I_w")
    p_i = _number(glob, "P_I_w", "global") if "P_I_w" in glob else dbm_to_watts(_number(glob, "P_I_dbm", "global", -98.0))
    gap_db = _number(glob, "gap_to_capacity_db", "global", 0.0)
    t = Topology(
        nodes,
        gains,
        bands,
        sdma_order=_number(glob, "A", "global", 1, integer=True),
        interference_threshold_w=p_i,
        gap_to_capacity=db_to_linear(gap_db),
        gain_floor=_number(glob, "gain_floor", "global", 1e-30),
    )
    problems = validate_topology(t)
    if problems:
        raise TopologyValidationError(problems)
    return t


def parse_topology(path: PathLike, *, seed: int = 0) -> Topology:
    """Read and validate a topology file; ``seed`` drives shadowing when gains are synthesized."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TopologyFormatError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return parse_topology_document(doc, seed=seed)


def serialize_topology(t: Topology) -> dict:
    """Document for ``t`` in linear units, so parsing it back is exact.

    Residual-round state (reservations, background links) is not part of the
    file format and is dropped.
    """
    nodes = []
    for n in sorted(t.nodes, key=lambda n: n.id):
        d: dict[str, Any] = {"id": n.id, "kind": n.kind.value, "radios": n.max_radios}
        if n.kind == NodeKind.EDGE:
            d["demand_bps"] = n.demand_bps
        if n.deploy_cost is not None:
            d["cost"] = n.deploy_cost
        if n.position is not None:
            d["xyz"] = list(n.position)
        nodes.append(d)
    gains = []
    for band in Band:
        for (i, j), g in sorted(t.gains.gains.get(band, {}).items()):
            gains.append({"band": band.value, "from": i, "to": j, "linear": g})
    for (i, j, m), g in sorted(t.gains.channel_gains.items()):
        gains.append({"band": Band.SUB6.value, "from": i, "to": j, "channel": m, "linear": g})
    bands = {}
    for band in Band:
        p = t.bands[band]
        bands[band.value] = {k: getattr(p, k) for k in _BAND_FIELDS}
    return {
        "nodes": nodes,
        "gains": gains,
        "bands": bands,
        "global": {
            "A": t.sdma_order,
            "P_I_w": t.interference_threshold_w,
            "gap_to_capacity_db": 10.0 * math.log10(t.gap_to_capacity),
            "gain_floor": t.gain_floor,
        },
    }


def dumps(doc: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indent, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_topology(t: Topology, path: PathLike) -> None:
    Path(path).write_text(dumps(serialize_topology(t)))


# ---------------------------------------------------------------- plan document


def _link_key(link) -> str:
    return f"{link[0]}->{link[1]}"


def plan_document(plan: DeploymentPlan, report: Optional[Any] = None, *, config: Optional[dict] = None) -> dict:
    """Deterministic structured view of a plan; wall-clock data is left out on purpose."""
    doc: dict[str, Any] = {
        "mode": plan.mode,
        "objective": plan.objective,
        "lower_bound": plan.lower_bound,
        "gap": plan.gap,
        "selected_ans": list(plan.selected_ans),
        "infeasible_ens": list(plan.infeasible_ens),
        "flows_bps": {_link_key(l): f for l, f in sorted(plan.flows.items())},
        "en_links": {
            _link_key(l): {
                "band": a.band.value,
                "bandwidth_hz": a.bandwidth_hz,
                "power_w": a.power_w,
                "channel_powers_w": {str(c): p for c, p in sorted(a.channel_powers.items())},
            }
            for l, a in sorted(plan.en_link_alloc.items())
        },
        "an_gn_links": {
            _link_key(l): {"band": a.band.value, "bandwidth_hz": a.bandwidth_hz, "power_w": a.power_w}
            for l, a in sorted(plan.an_gn_alloc.items())
        },
        "solver": dict(plan.stats),
    }
    if report is not None:
        doc["repair"] = report.to_dict()
    if config is not None:
        doc["config"] = config
    return doc


# ---------------------------------------------------------------- DOT


_SHAPES = {NodeKind.EDGE: "circle", NodeKind.AGGREGATOR: "box", NodeKind.GATEWAY: "doubleoctagon"}


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def render_dot(plan: DeploymentPlan, t: Topology) -> str:
    """Digraph of the plan: shapes by node kind, selected ANs filled, edges labeled band/channels/flow."""
    selected = set(plan.selected_ans)
    infeasible = set(plan.infeasible_ens)
    lines = ["digraph backhaul {", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    for n in sorted(t.nodes, key=lambda n: n.id):
        attrs = [f"shape={_SHAPES[n.kind]}"]
        if n.kind == NodeKind.EDGE:
            label = f"EN {n.id}\\n{_fmt(n.demand_bps / 1e6)} Mbps"
            if n.id in infeasible:
                attrs.append("color=red")
        elif n.kind == NodeKind.AGGREGATOR:
            label = f"AN {n.id}\\ncost {_fmt(n.cost)}"
            attrs.append("style=filled, fillcolor=gold, penwidth=2" if n.id in selected else "style=dashed")
        else:
            label = f"GN {n.id}"
            attrs.append("style=filled, fillcolor=lightblue")
        lines.append(f'  n{n.id} [label="{label}", {", ".join(attrs)}];')
    allocs = {**plan.en_link_alloc, **plan.an_gn_alloc}
    for (i, j), f in sorted(plan.flows.items()):
        if f <= 0:
            continue
        a = allocs.get((i, j))
        if a is not None:
            band = a.band.value
            if a.channel_powers:
                band += " ch " + ",".join(str(c) for c in sorted(a.channel_powers))
        else:
            band = "assigned"
        lines.append(f'  n{i} -> n{j} [label="{band}\\n{_fmt(f / 1e6)} Mbps"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_graph(plan: DeploymentPlan, t: Topology, path: PathLike) -> Path:
    p = Path(path)
    try:
        p.write_text(render_dot(plan, t))
    except OSError as e:
        raise OSError(f"cannot write graph to {p}: {e.strerror or e}") from e
    return p

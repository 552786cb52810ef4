"""Geometric link gains and the post-hoc interference margin check.

Gains are synthesized from a log-distance path-loss model anchored at the
free-space loss at 1 m, plus the band's rain, oxygen and fading allowances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .topology import (
    Band,
    BandProfile,
    DeploymentPlan,
    LinkGainTable,
    Node,
    NodeKind,
    Topology,
    db_to_linear,
    linear_to_db,
)

SPEED_OF_LIGHT = 299_792_458.0


def free_space_loss_db(distance_m: float, carrier_hz: float) -> float:
    return 20.0 * math.log10(4.0 * math.pi * distance_m * carrier_hz / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class PathLossModel:
    reference_loss_db_at_1m: float
    los_exponent: float = 2.0
    nlos_exponent: float = 3.5
    extra_attenuation_db: float = 0.0

    def __post_init__(self) -> None:
        if self.los_exponent < 2.0 or self.nlos_exponent < self.los_exponent:
            raise ValueError("path-loss exponents must satisfy 2 <= LOS <= NLOS")
        if not all(math.isfinite(v) for v in (self.reference_loss_db_at_1m, self.extra_attenuation_db)):
            raise ValueError("losses must be finite")

    @classmethod
    def for_band(cls, band: BandProfile, los_exponent: float = 2.0, nlos_exponent: float = 3.5) -> "PathLossModel":
        return cls(free_space_loss_db(1.0, band.carrier_hz), los_exponent, nlos_exponent, band.extra_attenuation_db)

    def loss_db(self, distance_m: float, los: bool) -> float:
        n = self.los_exponent if los else self.nlos_exponent
        return self.reference_loss_db_at_1m + 10.0 * n * math.log10(distance_m) + self.extra_attenuation_db


@dataclass(frozen=True)
class AntennaPattern:
    boresight_gain_linear: float
    beamwidth_deg: float
    sidelobe_gain_linear: float = 0.0

    def __post_init__(self) -> None:
        if not self.boresight_gain_linear >= self.sidelobe_gain_linear >= 0:
            raise ValueError("need boresight gain >= sidelobe gain >= 0")

    def gain(self, off_axis_deg: float) -> float:
        # exactly at half beamwidth counts as inside the main lobe
        if off_axis_deg <= self.beamwidth_deg / 2.0 + 1e-12:
            return self.boresight_gain_linear
        return self.sidelobe_gain_linear


def synth_gain(model: PathLossModel, band: BandProfile, distance_m: float, los: bool) -> float:
    """Linear end-to-end gain including both boresight antenna gains."""
    if not distance_m > 0:
        raise ValueError("degenerate geometry: distance must be positive")
    return band.antenna_gain_linear**2 * db_to_linear(-model.loss_db(distance_m, los))


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def default_los(band: Band) -> bool:
    """Edge links are NLOS in both access bands; AN->GN at mmWave is LOS."""
    return band == Band.MMWAVE


def gains_from_positions(
    nodes: Sequence[Node],
    bands: Mapping[Band, BandProfile],
    *,
    models: Optional[Mapping[Band, PathLossModel]] = None,
    shadowing_db: float = 0.0,
    seed: int = 0,
    floor: float = 1e-30,
) -> LinkGainTable:
    """Uplink gains for every EN->AN/GN pair (sub-6 and microwave) and AN->GN pair (mmWave).

    With ``shadowing_db > 0`` a seeded log-normal term is added per link and band.
    """
    rng = np.random.default_rng(seed)
    models = dict(models or {})
    kinds = {n.id: n.kind for n in nodes}
    pos = {n.id: n.position for n in nodes}
    if any(p is None for p in pos.values()):
        raise ValueError("every node needs a position to synthesize gains")
    tables: dict[Band, dict] = {b: {} for b in Band}
    ids = sorted(pos)
    for band in Band:
        prof = bands[band]
        model = models.get(band) or PathLossModel.for_band(prof)
        if band == Band.MMWAVE:
            src, dst = {NodeKind.AGGREGATOR}, {NodeKind.GATEWAY}
        else:
            src, dst = {NodeKind.EDGE}, {NodeKind.AGGREGATOR, NodeKind.GATEWAY}
        for i in ids:
            if kinds[i] not in src:
                continue
            for j in ids:
                if kinds[j] not in dst:
                    continue
                d = distance(pos[i], pos[j])
                g = synth_gain(model, prof, d, default_los(band))
                if shadowing_db > 0:
                    g *= db_to_linear(rng.normal(0.0, shadowing_db))
                if g > floor:
                    tables[band][(i, j)] = g
    return LinkGainTable(tables)


def _off_axis_deg(at: np.ndarray, towards: np.ndarray, other: np.ndarray) -> float:
    u = towards - at
    v = other - at
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    cos = float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
    return math.degrees(math.acos(cos))


@dataclass(frozen=True)
class _Tx:
    tx: int
    rx: int
    power_w: float
    bandwidth_hz: float
    channel: Optional[int]


def _active_transmissions(plan: DeploymentPlan, t: Topology, band: Band) -> list[_Tx]:
    out = []
    allocs = list(plan.en_link_alloc.items()) + list(plan.an_gn_alloc.items())
    for (i, j), a in sorted(allocs):
        if a.band != band:
            continue
        if a.channel_powers:
            w = t.bands[band].channel_width_hz
            for ch, p in sorted(a.channel_powers.items()):
                if p > 0:
                    out.append(_Tx(i, j, p, w, ch))
        elif a.power_w > 0 and a.bandwidth_hz > 0:
            out.append(_Tx(i, j, a.power_w, a.bandwidth_hz, None))
    return out


def interference_margin(
    plan: DeploymentPlan,
    t: Topology,
    pattern: AntennaPattern,
    *,
    models: Optional[Mapping[Band, PathLossModel]] = None,
) -> dict[Band, Optional[float]]:
    """Worst-case (noise floor dB - interference dB) per band over interfering link pairs.

    Only ordered pairs of non-adjacent links that share spectrum are
    considered (same channel for sub-6; the whole band otherwise). The
    interfering path uses the geometric path loss with ``pattern`` applied at
    both the interfering transmitter and the victim receiver. A band with no
    such pair maps to None; zero interference gives ``+inf``.
    """
    models = dict(models or {})
    result: dict[Band, Optional[float]] = {}
    for band in Band:
        txs = _active_transmissions(plan, t, band)
        model = models.get(band) or PathLossModel.for_band(t.bands[band])
        n0 = t.bands[band].noise_spectral_density_w_per_hz
        worst: Optional[float] = None
        for u in txs:
            for v in txs:
                if u is v or {u.tx, u.rx} & {v.tx, v.rx}:
                    continue
                if u.channel != v.channel:
                    continue
                pos = {k: t.node(k).position for k in (u.tx, u.rx, v.tx, v.rx)}
                if any(p is None for p in pos.values()):
                    raise ValueError("interference margin needs node positions")
                p_utx, p_urx = np.asarray(pos[u.tx], float), np.asarray(pos[u.rx], float)
                p_vtx, p_vrx = np.asarray(pos[v.tx], float), np.asarray(pos[v.rx], float)
                g_tx = pattern.gain(_off_axis_deg(p_utx, p_urx, p_vrx))
                g_rx = pattern.gain(_off_axis_deg(p_vrx, p_vtx, p_utx))
                path = db_to_linear(-model.loss_db(distance(p_utx, p_vrx), default_los(band)))
                interference = u.power_w * g_tx * g_rx * path
                margin = linear_to_db(n0 * v.bandwidth_hz) - linear_to_db(interference)
                worst = margin if worst is None else min(worst, margin)
        result[band] = worst
    return result

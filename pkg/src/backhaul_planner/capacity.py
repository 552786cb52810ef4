"""Shannon link capacity and its outer linearization by tangent planes.

``C(p, W) = W log2(1 + p g / (gamma N0 W))`` is jointly concave and
positively homogeneous in ``(p, W)``, so every first-order Taylor plane is a
global upper bound. The planes are emitted as linear cuts on the
``(flow, power, bandwidth)`` columns of a MILP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .milp.model import Constraint

LN2 = math.log(2.0)


@dataclass(frozen=True)
class CapacityFn:
    gain: float
    noise_density: float
    snr_gap: float = 1.0

    def __post_init__(self) -> None:
        if not (self.gain > 0 and self.noise_density > 0 and self.snr_gap > 0):
            raise ValueError("gain, noise density and snr gap must be positive")

    @property
    def kappa(self) -> float:
        """SNR per unit power per unit bandwidth, g / (gamma N0)."""
        return self.gain / (self.noise_density * self.snr_gap)


def capacity(c: CapacityFn, p, w):
    """Capacity in bit/s; 0 whenever ``p`` or ``w`` is 0."""
    p_arr = np.asarray(p, dtype=float)
    w_arr = np.asarray(w, dtype=float)
    if np.any(p_arr < 0) or np.any(w_arr < 0):
        raise ValueError("power and bandwidth must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = c.kappa * p_arr / w_arr
        out = np.where((w_arr > 0) & (p_arr > 0), w_arr * np.log1p(snr) / LN2, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def capacity_slopes(c: CapacityFn, p, w):
    """Partial derivatives (dC/dp, dC/dW) at ``w > 0``."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    snr = c.kappa * p / w
    dp = c.kappa / (LN2 * (1.0 + snr))
    dw = (np.log1p(snr) - snr / (1.0 + snr)) / LN2
    return dp, dw


def geometric_points(upper: float, k: int) -> np.ndarray:
    """``k`` points ``upper / 2**(k-1), ..., upper / 2, upper``."""
    if not (upper > 0):
        raise ValueError("grid maximum must be positive")
    if k < 1:
        raise ValueError("grid size must be >= 1")
    return upper / 2.0 ** np.arange(k - 1, -1, -1, dtype=float)


@dataclass(frozen=True)
class TangentGrid:
    capacity_fn: CapacityFn
    power_points: np.ndarray
    bandwidth_points: np.ndarray
    values: np.ndarray  # (k_p, k_w)
    slope_p: np.ndarray
    slope_w: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.power_points), len(self.bandwidth_points)

    @property
    def size(self) -> int:
        return self.values.size

    def intercepts(self) -> np.ndarray:
        pp, ww = np.meshgrid(self.power_points, self.bandwidth_points, indexing="ij")
        return self.values - self.slope_p * pp - self.slope_w * ww

    def upper_bound(self, p, w):
        """Minimum over all tangent planes at ``(p, w)`` (vectorized)."""
        p = np.asarray(p, dtype=float)
        w = np.asarray(w, dtype=float)
        b = self.intercepts().ravel()
        mp = self.slope_p.ravel()
        mw = self.slope_w.ravel()
        planes = b + mp * p[..., None] + mw * w[..., None]
        return planes.min(axis=-1)


def build_tangent_grid(c: CapacityFn, p_max: float, w_max: float, k_p: int = 8, k_w: int = 8) -> TangentGrid:
    ps = geometric_points(p_max, k_p)
    ws = geometric_points(w_max, k_w)
    pp, ww = np.meshgrid(ps, ws, indexing="ij")
    values = capacity(c, pp, ww)
    mp, mw = capacity_slopes(c, pp, ww)
    return TangentGrid(c, ps, ws, np.asarray(values), mp, mw)


def emit_cuts(
    grid: TangentGrid,
    flow_var: int,
    power_var: int,
    bandwidth_var: int,
    *,
    units: tuple[float, float, float] = (1.0, 1.0, 1.0),
    name: tuple = (),
) -> list[Constraint]:
    """One row ``f <= C + m_p (p - p_i) + m_W (W - W_j)`` per grid point.

    ``units`` gives the physical size of one unit of the flow, power and
    bandwidth columns; rows are divided through by the flow unit.
    """
    fu, pu, wu = units
    b = grid.intercepts()
    cuts = []
    for a in range(grid.shape[0]):
        for k in range(grid.shape[1]):
            coeffs = {
                flow_var: 1.0,
                power_var: -grid.slope_p[a, k] * pu / fu,
                bandwidth_var: -grid.slope_w[a, k] * wu / fu,
            }
            cuts.append(Constraint(coeffs, "<=", float(b[a, k]) / fu, name + (a, k)))
    return cuts


def fixed_bandwidth_tangents(c: CapacityFn, w_fixed: float, power_points: Sequence[float]):
    """Intercepts and slopes of tangents to ``p -> C(p, w_fixed)``."""
    if not (w_fixed > 0):
        raise ValueError("fixed bandwidth must be positive")
    ps = np.asarray(power_points, dtype=float)
    values = np.asarray(capacity(c, ps, np.full_like(ps, w_fixed)))
    slopes, _ = capacity_slopes(c, ps, np.full_like(ps, w_fixed))
    return values - slopes * ps, slopes


def emit_cuts_fixed_bandwidth(
    c: CapacityFn,
    w_fixed: float,
    power_points: Sequence[float],
    flow_var: int,
    power_var: int,
    *,
    units: tuple[float, float] = (1.0, 1.0),
    name: tuple = (),
) -> list[Constraint]:
    """Rows ``f <= C(p_k) + C'(p_k) (p - p_k)`` for a channel of fixed width."""
    fu, pu = units
    intercepts, slopes = fixed_bandwidth_tangents(c, w_fixed, power_points)
    return [
        Constraint({flow_var: 1.0, power_var: -s * pu / fu}, "<=", float(b) / fu, name + (k,))
        for k, (b, s) in enumerate(zip(intercepts, slopes))
    ]

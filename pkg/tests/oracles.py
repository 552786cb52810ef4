"""Reference implementations used only by the tests.

Nothing here imports the package's formulation builders or its LP engine:
the enumeration oracles rebuild each fixed-placement LP from scratch with
dense matrices and hand them to HiGHS through ``scipy.optimize.linprog``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from backhaul_planner.topology import Band, Topology

MBPS = 1e6
MHZ = 1e6


# ---------------------------------------------------------------- dense tableau simplex


def tableau_simplex(c: np.ndarray, A: np.ndarray, b: np.ndarray, max_iter: int = 10_000):
    """min c'x s.t. A x <= b, x >= 0 with b >= 0, by a full tableau and Bland's rule.

    Returns (status, x, objective) with status in {"optimal", "unbounded"}.
    """
    m, n = A.shape
    if np.any(b < 0):
        raise ValueError("oracle needs b >= 0 so the slack basis is feasible")
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = c
    basis = list(range(n, n + m))
    for _ in range(max_iter):
        reduced = T[m, :-1]
        entering = next((j for j in range(n + m) if reduced[j] < -1e-12), None)
        if entering is None:
            x = np.zeros(n + m)
            for r, j in enumerate(basis):
                x[j] = T[r, -1]
            return "optimal", x[:n], float(c @ x[:n])
        col = T[:m, entering]
        ratios = [(T[r, -1] / col[r], basis[r], r) for r in range(m) if col[r] > 1e-12]
        if not ratios:
            return "unbounded", None, -math.inf
        _, _, r = min(ratios)
        T[r] /= T[r, entering]
        for rr in range(m + 1):
            if rr != r and T[rr, entering] != 0:
                T[rr] -= T[rr, entering] * T[r]
        basis[r] = entering
    raise RuntimeError("tableau oracle did not terminate")


# ---------------------------------------------------------------- capacity planes


def shannon(kappa: float, p: float, w: float) -> float:
    if p <= 0 or w <= 0:
        return 0.0
    return w * math.log2(1.0 + kappa * p / w)


def plane(kappa: float, p0: float, w0: float) -> tuple[float, float]:
    """Slopes (a, b) with C(p, w) <= a p + b w, tight at (p0, w0).

    The capacity is homogeneous of degree one, so by Euler's identity the
    tangent plane passes through the origin.
    """
    s = kappa * p0 / w0
    a = kappa / ((1.0 + s) * math.log(2.0))
    b = math.log2(1.0 + s) - s / ((1.0 + s) * math.log(2.0))
    return a, b


def geometric(top: float, k: int) -> list[float]:
    return [top / 2.0**e for e in range(k - 1, -1, -1)]


def _kappa(t: Topology, band: Band, i: int, j: int, ch: Optional[int] = None) -> float:
    g = t.gain(band, i, j, ch)
    gap = t.gap_to_capacity if band == Band.SUB6 else 1.0
    return g / (t.bands[band].noise_spectral_density_w_per_hz * gap)


# ---------------------------------------------------------------- tiny LP builder


class _LP:
    def __init__(self) -> None:
        self.n = 0
        self.ub_bounds: list[float] = []
        self.rows_ub: list[dict] = []
        self.rhs_ub: list[float] = []
        self.rows_eq: list[dict] = []
        self.rhs_eq: list[float] = []

    def var(self, ub: float = math.inf) -> int:
        self.n += 1
        self.ub_bounds.append(ub)
        return self.n - 1

    def le(self, coeffs: dict, rhs: float) -> None:
        self.rows_ub.append(coeffs)
        self.rhs_ub.append(rhs)

    def eq(self, coeffs: dict, rhs: float) -> None:
        self.rows_eq.append(coeffs)
        self.rhs_eq.append(rhs)

    @staticmethod
    def _dense(rows: list[dict], n: int) -> Optional[np.ndarray]:
        if not rows:
            return None
        M = np.zeros((len(rows), n))
        for r, row in enumerate(rows):
            for j, a in row.items():
                M[r, j] += a
        return M

    def feasible(self) -> bool:
        if self.n == 0:
            return all(r >= 0 for r in self.rhs_ub) and all(abs(r) < 1e-12 for r in self.rhs_eq)
        res = linprog(
            np.zeros(self.n),
            A_ub=self._dense(self.rows_ub, self.n),
            b_ub=np.array(self.rhs_ub) if self.rows_ub else None,
            A_eq=self._dense(self.rows_eq, self.n),
            b_eq=np.array(self.rhs_eq) if self.rows_eq else None,
            bounds=[(0, u if math.isfinite(u) else None) for u in self.ub_bounds],
            method="highs",
        )
        return res.status == 0


def _usable_links(t: Topology, band: Band):
    """EN links to GNs and to ANs that have a 60 GHz route, plus the AN->GN links."""
    ens, ans, gns = set(t.edge_nodes), set(t.aggregators), set(t.gateways)
    mm = [(j, k) for j in sorted(ans) for k in sorted(gns) if t.gain(Band.MMWAVE, j, k) is not None]
    live = {j for j, _ in mm}
    links = []
    for i in sorted(ens):
        for j in sorted(ans | gns):
            if j in ans and j not in live:
                continue
            if band == Band.SUB6:
                ok = any(t.gain(band, i, j, m) is not None for m in range(t.bands[band].num_channels))
            else:
                ok = t.gain(band, i, j) is not None
            if ok:
                links.append((i, j))
    return links, mm


def _mmwave_part(lp: _LP, t: Topology, mm_links, f: dict, grid: tuple[int, int]) -> None:
    mmb = t.bands[Band.MMWAVE]
    pmax, wmax = mmb.max_power_per_radio_w, mmb.max_bandwidth_per_radio_hz
    w, p = {}, {}
    for l in mm_links:
        f[l] = lp.var()
        w[l] = lp.var(wmax / MHZ)
        p[l] = lp.var(1.0)
        kap = _kappa(t, Band.MMWAVE, *l)
        for p0 in geometric(pmax, grid[0]):
            for w0 in geometric(wmax, grid[1]):
                a, b = plane(kap, p0, w0)
                lp.le({f[l]: 1.0, p[l]: -a * pmax / MBPS, w[l]: -b * MHZ / MBPS}, 0.0)
    for j in t.aggregators:
        out = [l for l in mm_links if l[0] == j]
        if out:
            lp.le({w[l]: 1.0 for l in out}, wmax / MHZ)
            lp.le({p[l]: 1.0 for l in out}, 1.0)


def _balance(lp: _LP, t: Topology, en_links, mm_links, f: dict, served: list[int]) -> None:
    for i in served:
        lp.eq({f[l]: 1.0 for l in en_links if l[0] == i}, t.node(i).demand_bps / MBPS)
    for j in t.aggregators:
        row = {f[l]: 1.0 for l in en_links if l[1] == j}
        for l in mm_links:
            if l[0] == j:
                row[f[l]] = row.get(f[l], 0.0) - 1.0
        if row:
            lp.eq(row, 0.0)


# ---------------------------------------------------------------- microwave oracle


def microwave_subset_feasible(t: Topology, chosen: set[int], grid: tuple[int, int]) -> bool:
    band = t.bands[Band.MICROWAVE]
    pmax, wmax = band.max_power_per_radio_w, band.max_bandwidth_per_radio_hz
    links, mm = _usable_links(t, Band.MICROWAVE)
    ans = set(t.aggregators)
    served = sorted({i for i, _ in links})
    links = [l for l in links if l[1] not in ans or l[1] in chosen]
    if any(not any(l[0] == i for l in links) for i in served):
        return False
    lp = _LP()
    f, w, p = {}, {}, {}
    for l in links:
        f[l] = lp.var()
        w[l] = lp.var(wmax / MHZ)
        p[l] = lp.var(1.0)
        kap = _kappa(t, Band.MICROWAVE, *l)
        for p0 in geometric(pmax, grid[0]):
            for w0 in geometric(wmax, grid[1]):
                a, b = plane(kap, p0, w0)
                lp.le({f[l]: 1.0, p[l]: -a * pmax / MBPS, w[l]: -b * MHZ / MBPS}, 0.0)
    for i in served:
        out = [l for l in links if l[0] == i]
        lp.le({w[l]: 1.0 for l in out}, wmax / MHZ)
        lp.le({p[l]: 1.0 for l in out}, 1.0)
    for j in sorted({l[1] for l in links}):
        inbound = [l for l in links if l[1] == j]
        lp.le({w[l]: 1.0 for l in inbound}, t.node(j).max_radios * wmax / MHZ)
    _mmwave_part(lp, t, mm, f, grid)
    _balance(lp, t, links, mm, f, served)
    return lp.feasible()


@dataclass
class OracleResult:
    cost: float
    subset: Optional[tuple[int, ...]]
    lps: int


def _subsets_by_cost(t: Topology):
    ans = t.aggregators
    subsets = [s for r in range(len(ans) + 1) for s in itertools.combinations(ans, r)]
    return sorted(subsets, key=lambda s: (sum(t.node(j).cost for j in s), len(s), s))


def microwave_oracle(t: Topology, grid: tuple[int, int]) -> OracleResult:
    """Cheapest AN subset whose fixed-placement relaxation LP is feasible (inf if none)."""
    lps = 0
    for s in _subsets_by_cost(t):
        lps += 1
        if microwave_subset_feasible(t, set(s), grid):
            return OracleResult(sum(t.node(j).cost for j in s), s, lps)
    return OracleResult(math.inf, None, lps)


# ---------------------------------------------------------------- sub-6 oracle


def _sub6_victims(t: Topology, links) -> list[int]:
    return sorted({j for _, j in links} | {b.rx for b in t.background})


def _power_points(t: Topology, i: int, j: int, ch: int, k_p: int, victims) -> list[float]:
    band = t.bands[Band.SUB6]
    pmax = band.max_power_per_radio_w
    pts = set(geometric(pmax, k_p))
    for v in victims:
        if v == j:
            continue
        g = t.gain(Band.SUB6, i, v, ch)
        if g is not None and t.interference_threshold_w / g < pmax:
            pts.add(t.interference_threshold_w / g)
    return sorted(pts)


def sub6_schedule_feasible(t: Topology, chosen: set[int], active: list[tuple[int, int, int]], grid: tuple[int, int], links, mm) -> bool:
    band = t.bands[Band.SUB6]
    pmax, wch = band.max_power_per_radio_w, band.channel_width_hz
    A = t.sdma_order
    ans = set(t.aggregators)
    served = sorted({i for i, _ in links})
    # combinatorial rows first
    for i in served:
        if sum(1 for a in active if a[0] == i) > t.node(i).max_radios:
            return False
    per_rx = {}
    for (_, j, ch) in active:
        per_rx.setdefault(j, set()).add(ch)
        if sum(1 for a in active if a[1] == j and a[2] == ch) > A:
            return False
    for j, chans in per_rx.items():
        if len(chans) > t.node(j).max_radios:
            return False
    victims = _sub6_victims(t, links)
    lp = _LP()
    f = {}
    c, p = {}, {}
    for l in links:
        f[l] = lp.var()
    for key in active:
        i, j, ch = key
        p[key] = lp.var(1.0)
        c[key] = lp.var()
        kap = _kappa(t, Band.SUB6, i, j, ch)
        for p0 in _power_points(t, i, j, ch, grid[0], victims):
            a, b = plane(kap, p0, wch)
            lp.le({c[key]: 1.0, p[key]: -a * pmax / MBPS}, b * wch / MBPS)
    for l in links:
        lp.le({f[l]: 1.0, **{c[k]: -1.0 for k in active if k[:2] == l}}, 0.0)
    for (i, j, ch) in active:
        for key in active:
            k, h, ch2 = key
            if ch2 != ch or k == i or h == j:
                continue
            g = t.gain(Band.SUB6, k, j, ch)
            if g is not None and g * pmax > t.interference_threshold_w:
                lp.le({p[key]: 1.0}, t.interference_threshold_w / (g * pmax))
    _mmwave_part(lp, t, mm, f, grid)
    _balance(lp, t, links, mm, f, served)
    return lp.feasible()


def sub6_oracle(t: Topology, grid: tuple[int, int]) -> OracleResult:
    """Cheapest placement for which some channel schedule makes the relaxation LP feasible."""
    band = t.bands[Band.SUB6]
    all_links, mm = _usable_links(t, Band.SUB6)
    ans = set(t.aggregators)
    served = sorted({i for i, _ in all_links})
    lps = 0
    for s in _subsets_by_cost(t):
        links = [l for l in all_links if l[1] not in ans or l[1] in s]
        per_en = []
        for i in served:
            triples = [
                (i, j, m)
                for (a, j) in links
                if a == i
                for m in range(band.num_channels)
                if t.gain(Band.SUB6, i, j, m) is not None
            ]
            r = t.node(i).max_radios
            options = [combo for size in range(1, r + 1) for combo in itertools.combinations(triples, size)]
            per_en.append(options)
        if any(not opts for opts in per_en):
            continue
        for pick in itertools.product(*per_en):
            active = [key for combo in pick for key in combo]
            lps += 1
            if sub6_schedule_feasible(t, set(s), active, grid, links, mm):
                return OracleResult(sum(t.node(j).cost for j in s), s, lps)
    return OracleResult(math.inf, None, lps)


# ---------------------------------------------------------------- set cover oracle


def set_cover_optimum(universe: set[int], sets: dict[int, frozenset], weights: dict[int, float], free: set[int]) -> float:
    """Minimum weight of non-free sets that, together with the free ones, cover ``universe``."""
    base = set().union(*(sets[c] for c in free)) if free else set()
    paid = sorted(c for c in sets if c not in free)
    best = math.inf
    for r in range(len(paid) + 1):
        for combo in itertools.combinations(paid, r):
            covered = base.union(*(sets[c] for c in combo)) if combo else base
            if universe <= covered:
                best = min(best, sum(weights[c] for c in combo))
    return best

"""Acceptance checks; each prints one PASS/FAIL line with its measured numbers."""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from oracles import microwave_oracle, set_cover_optimum, sub6_oracle

from backhaul_planner.capacity import CapacityFn, build_tangent_grid, fixed_bandwidth_tangents, geometric_points
from backhaul_planner.fileio import write_topology
from backhaul_planner.formulations import build_formulation
from backhaul_planner.greedy import coverage_sets, greedy_place, harmonic
from backhaul_planner.link_budget import AntennaPattern, interference_margin
from backhaul_planner.milp import BnBStatus, branch_and_bound
from backhaul_planner.repair import SolveOptions, check_true_capacity, plan_and_repair, solve_round
from backhaul_planner.synthetic import random_gain_topology, random_topology
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
from backhaul_planner.verify import verify_plan

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok

    return emit


def shannon_np(g, n0, p, w):
    """Capacity written out directly, independent of the package."""
    out = np.zeros_like(p)
    pos = w > 0
    out[pos] = w[pos] * np.log2(1.0 + p[pos] * g / (n0 * w[pos]))
    return out


# ---------------------------------------------------------------- 1


def test_1_relaxation_soundness(report):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst_over = 0.0
    worst_tight = 0.0
    for _ in range(100):
        g = 10 ** rng.uniform(-14, -8)
        n0 = 10 ** rng.uniform(-21, -20)
        pmax = rng.uniform(0.01, 1.0)
        wmax = 10 ** rng.uniform(6, 9)
        kp, kw = rng.integers(1, 9, 2)
        fn = CapacityFn(g, n0)
        grid = build_tangent_grid(fn, pmax, wmax, int(kp), int(kw))
        p = rng.uniform(0, pmax, 10_000)
        w = rng.uniform(0, wmax, 10_000)
        true = shannon_np(g, n0, p, w)
        ub = grid.upper_bound(p, w)
        worst_over = max(worst_over, float(np.max((true - ub) / np.maximum(true, 1e-300))))
        pp, ww = np.meshgrid(grid.power_points, grid.bandwidth_points, indexing="ij")
        at = shannon_np(g, n0, pp.ravel(), ww.ravel())
        worst_tight = max(worst_tight, float(np.max(np.abs(grid.upper_bound(pp, ww).ravel() - at) / at)))
        # fixed-bandwidth family used for the channelized band
        pts = geometric_points(pmax, int(kp))
        b, s = fixed_bandwidth_tangents(fn, wmax, pts)
        fixed_true = shannon_np(g, n0, p, np.full_like(p, wmax))
        fixed_ub = np.min(b[None, :] + s[None, :] * p[:, None], axis=1)
        worst_over = max(worst_over, float(np.max((fixed_true - fixed_ub) / np.maximum(fixed_true, 1e-300))))
        fixed_at = shannon_np(g, n0, pts, np.full_like(pts, wmax))
        worst_tight = max(worst_tight, float(np.max(np.abs(b + s * pts - fixed_at) / fixed_at)))
    elapsed = time.perf_counter() - start
    ok = worst_over <= 1e-9 and worst_tight <= 1e-9 and elapsed < 10.0
    report(1, ok, f"max under-estimate {worst_over:.2e}, max tangency error {worst_tight:.2e}, {elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- 2


def test_2_oracle_optimality(report):
    start = time.perf_counter()
    mismatches = []
    grid = (4, 4)
    for seed in range(50):
        t = random_gain_topology(500 + seed, 3 + seed % 4, 2 + seed % 3, 1)
        res = branch_and_bound(build_formulation(t, "microwave", grid).model)
        ref = microwave_oracle(t, grid)
        if not _same(res, ref.cost):
            mismatches.append(("microwave", seed, res.objective, ref.cost))
    for seed in range(20):
        t = random_gain_topology(700 + seed, 2 + seed % 2, 1 + seed % 2, 1, num_channels=2, demand_mbps=(10, 60))
        res = branch_and_bound(build_formulation(t, "sub6", (3, 3)).model)
        ref = sub6_oracle(t, (3, 3))
        if not _same(res, ref.cost):
            mismatches.append(("sub6", seed, res.objective, ref.cost))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 300
    report(2, ok, f"50 microwave + 20 sub6 instances, {len(mismatches)} mismatches, {elapsed:.1f}s")
    assert ok, mismatches


def _same(res, oracle_cost):
    if math.isinf(oracle_cost):
        return res.status == BnBStatus.INFEASIBLE
    return res.status == BnBStatus.OPTIMAL and abs(res.objective - oracle_cost) <= 1e-9


# ---------------------------------------------------------------- 3


def test_3_constraint_soundness(report):
    start = time.perf_counter()
    bad = {}
    counts = {}
    for mode in ("microwave", "sub6", "greedy"):
        bad[mode] = 0
        counts[mode] = 0
        for seed in range(100):
            if mode == "greedy":
                t = random_topology(seed, 20, 8, sdma_order=2)
                plan = greedy_place(t)
            elif mode == "microwave":
                t = random_gain_topology(1000 + seed, 3 + seed % 2, 2 + seed % 2, 1)
                plan = plan_and_repair(t, mode, (4, 4))[0].final_plan
            else:
                t = random_gain_topology(1000 + seed, 3, 2, 1, num_channels=2, demand_mbps=(10, 60))
                plan = plan_and_repair(t, mode, (3, 3))[0].final_plan
            counts[mode] += 1
            bad[mode] += bool(verify_plan(plan, t))
    elapsed = time.perf_counter() - start
    ok = sum(bad.values()) == 0
    detail = ", ".join(f"{m} {bad[m]}/{counts[m]} with violations" for m in bad)
    report(3, ok, f"{detail}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- 4


def test_4_repair_convergence(report):
    start = time.perf_counter()
    used = 0
    failures = []
    families = [("microwave", s, dict(n_en=3, n_an=2)) for s in range(25)]
    families += [("sub6", s, dict(n_en=2, n_an=2, num_channels=2)) for s in range(8)]
    for mode, seed, kw in families:
        n_en, n_an = kw.pop("n_en"), kw.pop("n_an")
        t = random_gain_topology(seed, n_en, n_an, 1, **kw)
        coarse = solve_round(t, mode, (1, 1), SolveOptions())
        if coarse.plan is None or not check_true_capacity(coarse.plan, t):
            continue
        used += 1
        fine = solve_round(t, mode, (32, 32), SolveOptions())
        served_fine = set(t.edge_nodes) - set(fine.plan.infeasible_ens)
        rep, _ = plan_and_repair(t, mode, (1, 1))
        repaired = {i for i, s in rep.statuses.items() if s.value != "Infeasible"}
        leftover = check_true_capacity(rep.final_plan, t)
        if not served_fine <= repaired or leftover or verify_plan(rep.final_plan, t):
            failures.append((mode, seed))
    elapsed = time.perf_counter() - start
    ok = used > 0 and not failures
    report(4, ok, f"{used - len(failures)}/{used} coarse-grid instances repaired, {elapsed:.1f}s")
    assert ok, failures


# ---------------------------------------------------------------- 5


def test_5_greedy_guarantee_and_scaling(report):
    worst_ratio = 0.0
    violations = 0
    checked = 0
    seed = 0
    while checked < 50:
        t = random_topology(seed, 8, 6, 1, cost_range=(1.0, 5.0), area_m=600.0)
        seed += 1
        sets = coverage_sets(t)
        gns = set(t.gateways)
        universe = set().union(*(s.members for s in sets))
        if not universe:
            continue
        plan = greedy_place(t, sets=sets)
        opt = set_cover_optimum(universe, {s.center: s.members for s in sets}, {s.center: s.weight for s in sets}, gns)
        bound = harmonic(len(t.edge_nodes)) * opt
        checked += 1
        if plan.objective > bound + 1e-9:
            violations += 1
        if opt > 0:
            worst_ratio = max(worst_ratio, plan.objective / opt)

    sizes = [(25, 6), (50, 12), (100, 25), (150, 37), (200, 50)]
    ops = []
    for n_en, n_cand in sizes:
        runs = [greedy_place(random_topology(s, n_en, n_cand, 1, area_m=800.0)).stats["operations"] for s in range(3)]
        ops.append(float(np.mean(runs)))
    n = np.array([a * b for a, b in sizes], dtype=float)
    slope, intercept = np.polyfit(np.log(n), np.log(ops), 1)
    pred = np.exp(intercept) * n**slope
    max_dev = float(np.max(np.abs(pred - ops) / ops))
    ok = violations == 0 and slope <= 2.0 and max_dev < 0.5
    report(
        5,
        ok,
        f"{checked} instances, worst greedy/opt {worst_ratio:.3f} (H(8)={harmonic(8):.3f}), "
        f"ops ~ (EN*candidates)^{slope:.2f}, max fit deviation {max_dev:.0%}",
    )
    assert ok


# ---------------------------------------------------------------- 6


def _parallel_links(n_links=4, spacing=40.0, length=120.0):
    nodes = []
    for k in range(n_links):
        nodes.append(Node(k, NodeKind.EDGE, 1e8, position=(0.0, k * spacing, 6.0)))
    for k in range(n_links):
        nodes.append(Node(n_links + k, NodeKind.GATEWAY, position=(length, k * spacing + 15.0, 30.0)))
    return Topology(tuple(nodes), LinkGainTable(), default_band_profiles())


def _independent_margin_db(t, plan, boresight_db, beam_deg, side_db):
    band = t.bands[Band.MICROWAVE]
    c = 299_792_458.0
    fspl_1m = 20 * math.log10(4 * math.pi * band.carrier_hz / c)
    extra = band.rain_attenuation_db + band.oxygen_absorption_db + band.fading_margin_db
    pos = {n.id: np.array(n.position) for n in t.nodes}

    def ant_db(at, towards, other):
        u, v = pos[towards] - pos[at], pos[other] - pos[at]
        ang = math.degrees(math.acos(np.clip(u @ v / np.linalg.norm(u) / np.linalg.norm(v), -1, 1)))
        return boresight_db if ang <= beam_deg / 2 else side_db

    worst = math.inf
    links = sorted(plan.en_link_alloc.items())
    for (a, b), ua in links:
        for (c_, d), va in links:
            if {a, b} & {c_, d}:
                continue
            dist = float(np.linalg.norm(pos[a] - pos[d]))
            loss = fspl_1m + 35.0 * math.log10(dist) + extra
            i_dbm = 10 * math.log10(ua.power_w * 1e3) + ant_db(a, b, d) + ant_db(d, c_, a) - loss
            n_dbm = -174.0 + 10 * math.log10(va.bandwidth_hz)
            worst = min(worst, n_dbm - i_dbm)
    return worst


def test_6_interference_margin(report):
    t = _parallel_links()
    plan = DeploymentPlan(
        "microwave",
        flows={(k, 4 + k): 1e8 for k in range(4)},
        en_link_alloc={(k, 4 + k): LinkAlloc(Band.MICROWAVE, 56e6, 0.0794) for k in range(4)},
    )
    narrow = AntennaPattern(10 ** 3.8, 3.0, 0.0)
    inf_margin = interference_margin(plan, t, narrow)[Band.MICROWAVE]
    side_db = -10.0
    pattern = AntennaPattern(10 ** 3.8, 3.0, 10 ** (side_db / 10))
    got = interference_margin(plan, t, pattern)[Band.MICROWAVE]
    want = _independent_margin_db(t, plan, 38.0, 3.0, side_db)
    ok = inf_margin == math.inf and abs(got - want) <= 0.1
    report(6, ok, f"sidelobe 0 -> {inf_margin}; sidelobe {side_db} dB -> {got:.3f} dB vs recomputed {want:.3f} dB")
    assert ok


# ---------------------------------------------------------------- 7


def test_7_determinism(report, tmp_path):
    scenario = tmp_path / "scenario.json"
    t = random_topology(3, 5, 3, 1, num_channels=2, sdma_order=2)
    write_topology(t, scenario)
    diffs = []
    for mode in ("microwave", "sub6", "greedy"):
        outputs = []
        for run, hash_seed in enumerate(("0", "12345")):
            out = tmp_path / f"{mode}-{run}"
            env = dict(os.environ, PYTHONHASHSEED=hash_seed)
            cmd = [sys.executable, "-m", "backhaul_planner", "plan", str(scenario), "--mode", mode, "--grid", "4x4", "--out", str(out)]
            proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outputs.append(((out / "plan.json").read_bytes(), (out / "plan.dot").read_bytes()))
        if outputs[0] != outputs[1]:
            diffs.append(mode)
    ok = not diffs
    report(7, ok, f"plan.json and plan.dot byte-identical across two processes for 3 modes; differing: {diffs or 'none'}")
    assert ok

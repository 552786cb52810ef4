"""From a coarse relaxation to a plan that respects exact capacity.

A 1x1 tangent grid is a single plane through the origin, so the solver may
promise more throughput than the radios can deliver. The repair loop tightens
the grid, re-optimizes the continuous resources against exact capacity with
the placement frozen, and plans any edge nodes still left on a residual
topology.
"""

from backhaul_planner.repair import SolveOptions, check_true_capacity, plan_and_repair, solve_round
from backhaul_planner.synthetic import random_gain_topology
from backhaul_planner.verify import true_link_capacity, verify_plan

t = random_gain_topology(7, 3, 3, 1)
coarse = solve_round(t, "microwave", (1, 1), SolveOptions())
bad = check_true_capacity(coarse.plan, t)
print(f"1x1 grid: cost {coarse.plan.objective:g}, {len(bad)} link(s) over exact capacity")
for link in sorted(bad):
    f = coarse.plan.flows[link]
    print(f"  {link}: {f / 1e6:.1f} Mbps routed, {true_link_capacity(coarse.plan, t, link) / 1e6:.1f} Mbps available")

for label, opts in (("without refinement", SolveOptions(skip_refinement=True)), ("with refinement", SolveOptions())):
    report, _ = plan_and_repair(t, "microwave", (1, 1), opts=opts)
    plan = report.final_plan
    print(f"\nrepair {label}: cost {plan.objective:g}, ANs {list(plan.selected_ans)}, rounds {report.iterations_used}")
    for r in report.rounds:
        print("  ", {k: v for k, v in r.items() if k != "round"})
    print("   statuses:", {i: s.value for i, s in report.statuses.items()})
    assert not check_true_capacity(plan, t) and verify_plan(plan, t) == []

"""Command line entry point: ``backhaul-planner plan <topology.json> ...``.

Exit codes: 0 success, 2 invalid input, 3 the solver found no incumbent,
1 the final plan failed verification (nothing is written in that case).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .fileio import TopologyFormatError, TopologyValidationError, parse_topology
from .scenario import SCENARIO_MODES, NoIncumbentError, PlanVerificationError, ScenarioConfig, run_scenario

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INVALID = 2
EXIT_NO_INCUMBENT = 3


def _grid(text: str) -> tuple[int, int]:
    try:
        kp, kw = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected <kp>x<kw>, got {text!r}") from None
    if kp < 1 or kw < 1:
        raise argparse.ArgumentTypeError("grid sizes must be >= 1")
    return kp, kw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="backhaul-planner", description="Plan aggregator placement for wireless backhaul.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="repeat for more log output")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plan", help="solve a topology file and write plan artifacts")
    p.add_argument("topology", type=Path)
    p.add_argument("--mode", choices=SCENARIO_MODES, default="microwave")
    p.add_argument("--gap", type=float, default=0.0, help="relative optimality gap target in [0, 1)")
    p.add_argument("--time-limit", type=float, default=1800.0, help="branch-and-bound time limit in seconds")
    p.add_argument("--grid", type=_grid, default=(8, 8), metavar="KPxKW", help="tangent grid, e.g. 8x8")
    p.add_argument("--seed", type=int, default=0, help="seed for gains synthesized from positions")
    p.add_argument("--max-iterations", type=int, default=3, help="repair iteration budget")
    p.add_argument("--skip-refinement", action="store_true", help="go straight to the spare-bandwidth pass")
    p.add_argument("--backend", choices=("simplex", "highs"), default="simplex", help="LP engine inside branch and bound")
    p.add_argument("--non-deterministic", dest="deterministic", action="store_false",
                   help="recorded in the plan; the solver is sequential either way")
    p.add_argument("--out", type=Path, default=Path("plan-out"), help="output directory")
    p.add_argument("--dump-milp", action="store_true", help="also write the first-round MILP as model.lp")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ScenarioConfig(
            mode=args.mode,
            gap_target=args.gap,
            time_limit_s=args.time_limit,
            grid_kp=args.grid[0],
            grid_kw=args.grid[1],
            repair_max_iterations=args.max_iterations,
            deterministic=args.deterministic,
            seed=args.seed,
            skip_refinement=args.skip_refinement,
            backend=args.backend,
        )
        t = parse_topology(args.topology, seed=args.seed)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (TopologyFormatError, TopologyValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    try:
        result = run_scenario(t, cfg, args.out, dump_milp=args.dump_milp)
    except NoIncumbentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NO_INCUMBENT
    except PlanVerificationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFY
    plan = result.plan
    served = len(t.edge_nodes) - len(plan.infeasible_ens)
    print(
        f"{cfg.mode}: cost {plan.objective:g}, {len(plan.selected_ans)} AN(s) {list(plan.selected_ans)}, "
        f"{served}/{len(t.edge_nodes)} EN(s) served, gap {plan.gap:.3g}"
    )
    for name, path in sorted(result.files.items()):
        print(f"  {name}: {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

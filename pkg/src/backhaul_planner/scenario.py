"""Scenario orchestration: solve, repair, verify, then emit artifacts."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Union

from .fileio import dumps, plan_document, render_dot
from .formulations import MODES, build_formulation
from .greedy import greedy_place
from .repair import ENStatus, RepairReport, SolveOptions, plan_and_repair
from .topology import DeploymentPlan, Topology
from .verify import Violation, verify_plan

logger = logging.getLogger(__name__)

SCENARIO_MODES = (*MODES, "greedy")


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str = "microwave"
    gap_target: float = 0.0
    time_limit_s: float = 1800.0
    grid_kp: int = 8
    grid_kw: int = 8
    repair_max_iterations: int = 3
    deterministic: bool = True
    seed: int = 0
    skip_refinement: bool = False
    backend: str = "simplex"

    def __post_init__(self) -> None:
        if self.mode not in SCENARIO_MODES:
            raise ValueError(f"mode must be one of {', '.join(SCENARIO_MODES)}")
        if not 0.0 <= self.gap_target < 1.0:
            raise ValueError("gap_target must lie in [0, 1)")
        if not self.time_limit_s > 0:
            raise ValueError("time_limit_s must be positive")
        if self.grid_kp < 1 or self.grid_kw < 1:
            raise ValueError("tangent grid sizes must be >= 1")
        if self.repair_max_iterations < 1:
            raise ValueError("repair_max_iterations must be >= 1")

    @property
    def grid(self) -> tuple[int, int]:
        return (self.grid_kp, self.grid_kw)

    def solve_options(self) -> SolveOptions:
        return SolveOptions(
            gap_target=self.gap_target,
            time_limit_s=self.time_limit_s,
            backend=self.backend,
            skip_refinement=self.skip_refinement,
        )


class NoIncumbentError(RuntimeError):
    """The solver stopped without any feasible plan; carries its status string."""

    def __init__(self, status: str) -> None:
        self.status = status
        super().__init__(f"solver gave no incumbent (status: {status})")


class PlanVerificationError(RuntimeError):
    def __init__(self, violations: list[Violation]) -> None:
        self.violations = violations
        super().__init__("plan failed verification:\n  " + "\n  ".join(map(str, violations)))


@dataclass
class ScenarioResult:
    plan: DeploymentPlan
    report: RepairReport
    timings: dict
    files: dict[str, Path]


def _greedy_report(plan: DeploymentPlan, t: Topology) -> RepairReport:
    bad = set(plan.infeasible_ens)
    statuses = {i: ENStatus.INFEASIBLE if i in bad else ENStatus.FEASIBLE_AS_IS for i in t.edge_nodes}
    return RepairReport(statuses, 0, plan)


def run_scenario(t: Topology, cfg: ScenarioConfig, out_dir: Optional[Union[str, Path]] = None, *, dump_milp: bool = False) -> ScenarioResult:
    """Plan ``t`` under ``cfg``; with ``out_dir`` write plan.json, stats.json, plan.dot (and model.lp).

    Nothing is written unless the final plan passes ``verify_plan``.
    """
    start = time.perf_counter()
    if cfg.mode == "greedy":
        plan = greedy_place(t)
        report = _greedy_report(plan, t)
    else:
        report, outcome = plan_and_repair(t, cfg.mode, cfg.grid, opts=cfg.solve_options(), max_iterations=cfg.repair_max_iterations)
        if report is None:
            raise NoIncumbentError(outcome.result.status.value)
        plan = report.final_plan
    violations = verify_plan(plan, t)
    if violations:
        raise PlanVerificationError(violations)
    timings = dict(report.timings)
    timings["total_wall_time_s"] = time.perf_counter() - start
    files: dict[str, Path] = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files["plan"] = out / "plan.json"
        files["plan"].write_text(dumps(plan_document(plan, report, config=asdict(cfg))))
        files["stats"] = out / "stats.json"
        files["stats"].write_text(dumps({"timings_s": timings, "solver": plan.stats}))
        files["dot"] = out / "plan.dot"
        files["dot"].write_text(render_dot(plan, t))
        if dump_milp and cfg.mode != "greedy":
            files["milp"] = out / "model.lp"
            build_formulation(t, cfg.mode, cfg.grid).model.write_lp(files["milp"])
    return ScenarioResult(plan, report, timings, files)

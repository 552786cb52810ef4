"""Aggregator placement and resource allocation for multi-band wireless backhaul."""

from .capacity import CapacityFn, TangentGrid, build_tangent_grid, capacity, emit_cuts
from .fileio import export_graph, parse_topology, render_dot, serialize_topology, write_topology
from .formulations import build_formulation, extract_plan
from .greedy import coverage_sets, greedy_place
from .link_budget import AntennaPattern, PathLossModel, interference_margin, synth_gain
from .milp import BnBResult, BnBStatus, MilpModel, branch_and_bound, solve_lp
from .repair import ENStatus, RepairReport, SolveOptions, check_true_capacity, plan_and_repair, repair
from .scenario import ScenarioConfig, run_scenario
from .topology import Band, BandProfile, DeploymentPlan, Node, NodeKind, Topology, validate_topology
from .verify import verify_plan

__version__ = "0.1.0"

__all__ = [
    "AntennaPattern",
    "Band",
    "BandProfile",
    "BnBResult",
    "BnBStatus",
    "CapacityFn",
    "DeploymentPlan",
    "ENStatus",
    "MilpModel",
    "Node",
    "NodeKind",
    "PathLossModel",
    "RepairReport",
    "ScenarioConfig",
    "SolveOptions",
    "TangentGrid",
    "Topology",
    "branch_and_bound",
    "build_formulation",
    "build_tangent_grid",
    "capacity",
    "check_true_capacity",
    "coverage_sets",
    "emit_cuts",
    "export_graph",
    "extract_plan",
    "greedy_place",
    "interference_margin",
    "parse_topology",
    "plan_and_repair",
    "render_dot",
    "repair",
    "run_scenario",
    "serialize_topology",
    "solve_lp",
    "synth_gain",
    "validate_topology",
    "verify_plan",
    "write_topology",
]

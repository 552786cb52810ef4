"""MILP builders for the two edge-band modes and their plan extractors."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..milp.bnb import BnBResult
from ..topology import DeploymentPlan, Topology
from .common import BW_UNIT, FLOW_UNIT, Formulation
from .microwave import MicrowaveFormulation, build_microwave, extract_microwave_plan
from .sub6 import Sub6Formulation, build_sub6, extract_sub6_plan, interference_coefficient

MODES = ("microwave", "sub6")


def build_formulation(t: Topology, mode: str, grid: tuple[int, int] = (8, 8), *, elastic: bool = False) -> Formulation:
    """Build the relaxed MILP for ``mode`` with a ``k_p x k_w`` tangent grid."""
    k_p, k_w = grid
    if mode == "microwave":
        return build_microwave(t, k_p=k_p, k_w=k_w, elastic=elastic)
    if mode == "sub6":
        return build_sub6(t, k_p=k_p, mm_grid=(k_p, k_w), elastic=elastic)
    raise ValueError(f"unknown formulation mode {mode!r}")


def extract_plan(sol: Optional[BnBResult], form: Formulation, x: Optional[np.ndarray] = None) -> DeploymentPlan:
    if isinstance(form, MicrowaveFormulation):
        return extract_microwave_plan(sol, form, x)
    if isinstance(form, Sub6Formulation):
        return extract_sub6_plan(sol, form, x)
    raise TypeError(f"unsupported formulation {type(form).__name__}")


__all__ = [
    "BW_UNIT",
    "FLOW_UNIT",
    "Formulation",
    "MODES",
    "MicrowaveFormulation",
    "Sub6Formulation",
    "build_formulation",
    "build_microwave",
    "build_sub6",
    "extract_microwave_plan",
    "extract_plan",
    "extract_sub6_plan",
    "interference_coefficient",
]

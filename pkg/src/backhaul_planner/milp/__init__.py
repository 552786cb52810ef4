from .bnb import BnBResult, BnBStatus, branch_and_bound
from .model import Constraint, MilpModel, VarKind, VarRef, to_lp_format, warm_fix
from .simplex import LPResult, LPStatus, solve_lp

__all__ = [
    "BnBResult",
    "BnBStatus",
    "Constraint",
    "LPResult",
    "LPStatus",
    "MilpModel",
    "VarKind",
    "VarRef",
    "branch_and_bound",
    "solve_lp",
    "to_lp_format",
    "warm_fix",
]

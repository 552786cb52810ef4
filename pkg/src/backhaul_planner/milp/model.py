from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Hashable, Mapping, Optional, Union

import numpy as np

SENSES = ("<=", ">=", "==")


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


@dataclass(frozen=True)
class VarRef:
    index: int
    name: tuple
    kind: VarKind
    lb: float
    ub: float
    priority: int = 0


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, float]
    sense: str
    rhs: float
    name: tuple = ()

    def activity(self, x) -> float:
        return float(sum(a * x[j] for j, a in self.coeffs.items()))

    def violation(self, x) -> float:
        lhs = self.activity(x)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class LPArrays:
    c: np.ndarray
    A: np.ndarray
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    priority: np.ndarray


class MilpModel:
    """Minimization MILP with named columns and sparse rows.

    Column names are tuples ``(family, *indices)``; they must be unique.
    """

    def __init__(self) -> None:
        self.variables: list[VarRef] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.objective_offset: float = 0.0
        self._by_name: dict[tuple, int] = {}
        self._arrays: Optional[LPArrays] = None

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_var(
        self,
        name: tuple,
        kind: VarKind = VarKind.CONTINUOUS,
        lb: float = 0.0,
        ub: float = math.inf,
        priority: int = 0,
    ) -> int:
        name = tuple(name)
        if name in self._by_name:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind == VarKind.BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ValueError(f"empty bounds for {name!r}: [{lb}, {ub}]")
        idx = len(self.variables)
        self.variables.append(VarRef(idx, name, kind, float(lb), float(ub), priority))
        self._by_name[name] = idx
        self._arrays = None
        return idx

    def add_binary(self, name: tuple, priority: int = 0) -> int:
        return self.add_var(name, VarKind.BINARY, 0.0, 1.0, priority)

    def add_constraint(self, coeffs: Mapping[int, float], sense: str, rhs: float, name: tuple = ()) -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown constraint sense {sense!r}")
        clean = {}
        for j, a in coeffs.items():
            if not 0 <= j < len(self.variables):
                raise ValueError(f"constraint {name!r} references undeclared column {j}")
            if not math.isfinite(a):
                raise ValueError(f"constraint {name!r} has non-finite coefficient")
            if a != 0.0:
                clean[j] = clean.get(j, 0.0) + float(a)
        if not math.isfinite(rhs):
            raise ValueError(f"constraint {name!r} has non-finite rhs")
        self.constraints.append(Constraint(clean, sense, float(rhs), tuple(name)))
        self._arrays = None
        return len(self.constraints) - 1

    def add(self, con: Constraint) -> int:
        return self.add_constraint(con.coeffs, con.sense, con.rhs, con.name)

    def set_objective(self, coeffs: Mapping[int, float], offset: float = 0.0) -> None:
        self.objective = {j: float(a) for j, a in coeffs.items() if a != 0.0}
        self.objective_offset = float(offset)
        self._arrays = None

    def index(self, name: Hashable) -> int:
        return self._by_name[tuple(name)]

    def has(self, name: Hashable) -> bool:
        return tuple(name) in self._by_name

    def set_bounds(self, j: int, lb: float, ub: float) -> None:
        self.variables[j] = replace(self.variables[j], lb=float(lb), ub=float(ub))
        self._arrays = None

    def binaries(self) -> list[int]:
        return [v.index for v in self.variables if v.kind == VarKind.BINARY]

    def copy(self) -> "MilpModel":
        other = MilpModel()
        other.variables = list(self.variables)
        other.constraints = list(self.constraints)
        other.objective = dict(self.objective)
        other.objective_offset = self.objective_offset
        other._by_name = dict(self._by_name)
        return other

    def arrays(self) -> LPArrays:
        if self._arrays is None:
            n, m = self.num_vars, self.num_constraints
            c = np.zeros(n)
            for j, a in self.objective.items():
                c[j] = a
            A = np.zeros((m, n))
            lo = np.full(m, -np.inf)
            hi = np.full(m, np.inf)
            for i, con in enumerate(self.constraints):
                for j, a in con.coeffs.items():
                    A[i, j] = a
                if con.sense in ("<=", "=="):
                    hi[i] = con.rhs
                if con.sense in (">=", "=="):
                    lo[i] = con.rhs
            lb = np.array([v.lb for v in self.variables], dtype=float)
            ub = np.array([v.ub for v in self.variables], dtype=float)
            binary = np.array([v.kind == VarKind.BINARY for v in self.variables], dtype=bool)
            prio = np.array([v.priority for v in self.variables], dtype=int)
            self._arrays = LPArrays(c, A, lo, hi, lb, ub, binary, prio)
        return self._arrays

    def objective_value(self, x) -> float:
        return self.objective_offset + float(sum(a * x[j] for j, a in self.objective.items()))

    def max_violation(self, x) -> float:
        """Largest row or bound violation of ``x`` (absolute)."""
        worst = 0.0
        for con in self.constraints:
            worst = max(worst, con.violation(x))
        for v in self.variables:
            worst = max(worst, v.lb - x[v.index], x[v.index] - v.ub)
        return worst

    def write_lp(self, path: Union[str, Path]) -> None:
        Path(path).write_text(to_lp_format(self))


def warm_fix(m: MilpModel, fixed: Mapping[Union[int, tuple], float]) -> MilpModel:
    """Copy of ``m`` with the given binaries pinned to 0 or 1."""
    out = m.copy()
    for key, value in fixed.items():
        j = key if isinstance(key, (int, np.integer)) else m.index(key)
        v = out.variables[j]
        if v.kind != VarKind.BINARY:
            raise ValueError(f"{v.name!r} is not a binary variable")
        value = float(value)
        if value not in (0.0, 1.0) or not v.lb <= value <= v.ub:
            raise ValueError(f"cannot fix {v.name!r} to {value}: bounds are [{v.lb}, {v.ub}]")
        out.set_bounds(j, value, value)
    return out


def _lp_name(name: tuple) -> str:
    text = "_".join(str(p) for p in name) or "v"
    return "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in text)


def _lp_expr(coeffs: Mapping[int, float], names: list[str]) -> str:
    if not coeffs:
        return "0 " + names[0] if names else "0"
    parts = []
    for j in sorted(coeffs):
        a = coeffs[j]
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {abs(a):.17g} {names[j]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp_format(m: MilpModel) -> str:
    """Render the model in CPLEX LP text format."""
    names = [f"x{v.index}_{_lp_name(v.name)}" for v in m.variables]
    lines = ["\\ generated by backhaul_planner", "Minimize", " obj: " + _lp_expr(m.objective, names)]
    lines.append("Subject To")
    ops = {"<=": "<=", ">=": ">=", "==": "="}
    for i, con in enumerate(m.constraints):
        lines.append(f" c{i}: {_lp_expr(con.coeffs, names)} {ops[con.sense]} {con.rhs:.17g}")
    lines.append("Bounds")
    for v, nm in zip(m.variables, names):
        lo = "-inf" if v.lb == -math.inf else f"{v.lb:.17g}"
        hi = "+inf" if v.ub == math.inf else f"{v.ub:.17g}"
        lines.append(f" {lo} <= {nm} <= {hi}")
    bins = [nm for v, nm in zip(m.variables, names) if v.kind == VarKind.BINARY]
    if bins:
        lines.append("Binary")
        lines.extend(f" {nm}" for nm in bins)
    lines.append("End")
    return "\n".join(lines) + "\n"

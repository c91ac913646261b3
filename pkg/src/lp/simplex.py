"""
Embedded dense tableau simplex.

`LPProblem` is a small builder: named variables with bounds, `<=` and `=`
rows over them, and an optional objective to minimize. `solve` converts it to
standard form (shifted/split variables, slacks, artificials), runs a
two-phase tableau simplex with Dantzig pricing that switches to Bland's rule
after 1000 pivots, and post-checks the returned point.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import LPStalledError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-9
FEASIBILITY_TOLERANCE = 1e-9
POST_CHECK_TOLERANCE = 1e-6
BLAND_AFTER = 1000
ITERATION_FACTOR = 50


@dataclass
class Row:
    coeffs: Dict[int, float]
    rhs: float
    name: str = ""


class LPProblem:
    """Linear program under construction; minimize objective subject to rows and bounds."""

    def __init__(self):
        self.names: List[str] = []
        self.lower: List[float] = []
        self.upper: List[float] = []
        self.le_rows: List[Row] = []
        self.eq_rows: List[Row] = []
        self.objective: Optional[Dict[int, float]] = None

    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def num_constraints(self) -> int:
        return len(self.le_rows) + len(self.eq_rows)

    def add_var(self, name: str, lower: float = 0.0, upper: float = np.inf) -> int:
        if lower > upper:
            raise ValueError(f"variable {name}: lower bound {lower} exceeds upper bound {upper}")
        self.names.append(name)
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        return len(self.names) - 1

    def _check(self, coeffs: Dict[int, float]) -> Dict[int, float]:
        cleaned = {}
        for index, value in coeffs.items():
            if not 0 <= index < self.num_vars:
                raise ValueError(f"row references undeclared variable {index}")
            if value != 0.0:
                cleaned[int(index)] = float(value)
        return cleaned

    def add_le(self, coeffs: Dict[int, float], rhs: float, name: str = "") -> int:
        """Add `coeffs · v <= rhs`; returns the row index among `<=` rows."""
        self.le_rows.append(Row(self._check(coeffs), float(rhs), name))
        return len(self.le_rows) - 1

    def add_ge(self, coeffs: Dict[int, float], rhs: float, name: str = "") -> int:
        return self.add_le({i: -v for i, v in coeffs.items()}, -rhs, name)

    def add_eq(self, coeffs: Dict[int, float], rhs: float, name: str = "") -> int:
        self.eq_rows.append(Row(self._check(coeffs), float(rhs), name))
        return len(self.eq_rows) - 1

    def set_objective(self, coeffs: Optional[Dict[int, float]]):
        self.objective = None if coeffs is None else self._check(coeffs)

    def copy(self) -> "LPProblem":
        other = LPProblem()
        other.names = list(self.names)
        other.lower = list(self.lower)
        other.upper = list(self.upper)
        other.le_rows = [Row(dict(r.coeffs), r.rhs, r.name) for r in self.le_rows]
        other.eq_rows = [Row(dict(r.coeffs), r.rhs, r.name) for r in self.eq_rows]
        other.objective = None if self.objective is None else dict(self.objective)
        return other

    def dense(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        n = self.num_vars
        a_ub = np.zeros((len(self.le_rows), n))
        b_ub = np.zeros(len(self.le_rows))
        for r, row in enumerate(self.le_rows):
            for i, v in row.coeffs.items():
                a_ub[r, i] = v
            b_ub[r] = row.rhs
        a_eq = np.zeros((len(self.eq_rows), n))
        b_eq = np.zeros(len(self.eq_rows))
        for r, row in enumerate(self.eq_rows):
            for i, v in row.coeffs.items():
                a_eq[r, i] = v
            b_eq[r] = row.rhs
        return a_ub, b_ub, a_eq, b_eq

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for i, v in (self.objective or {}).items():
            c[i] = v
        return c

    def violation(self, point: np.ndarray) -> float:
        """Largest constraint or bound violation at `point`."""
        a_ub, b_ub, a_eq, b_eq = self.dense()
        worst = 0.0
        if len(b_ub):
            worst = max(worst, float(np.max(a_ub @ point - b_ub)))
        if len(b_eq):
            worst = max(worst, float(np.max(np.abs(a_eq @ point - b_eq))))
        lower, upper = np.array(self.lower), np.array(self.upper)
        if self.num_vars:
            worst = max(worst, float(np.max(lower - point)), float(np.max(point - upper)))
        return worst

    def to_lp_text(self, title: str = "verification LP") -> str:
        """Render in CPLEX-LP style for debugging dumps."""
        def expr(coeffs: Dict[int, float]) -> str:
            if not coeffs:
                return "0"
            parts = []
            for i, v in sorted(coeffs.items()):
                sign = "-" if v < 0 else "+"
                parts.append(f"{sign} {abs(v)!r} {self.names[i]}")
            text = " ".join(parts)
            return text[2:] if text.startswith("+ ") else text

        lines = [f"\\ {title}", "Minimize", f" obj: {expr(self.objective or {})}", "Subject To"]
        for r, row in enumerate(self.le_rows):
            lines.append(f" {row.name or f'le{r}'}: {expr(row.coeffs)} <= {row.rhs!r}")
        for r, row in enumerate(self.eq_rows):
            lines.append(f" {row.name or f'eq{r}'}: {expr(row.coeffs)} = {row.rhs!r}")
        lines.append("Bounds")
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            lo_text = "-inf" if np.isneginf(lo) else repr(lo)
            hi_text = "+inf" if np.isposinf(hi) else repr(hi)
            lines.append(f" {lo_text} <= {name} <= {hi_text}")
        lines.append("End")
        return "\n".join(lines) + "\n"


class LPStatus(str, Enum):
    INFEASIBLE = "Infeasible"
    OPTIMAL = "Optimal"
    FEASIBLE = "FeasiblePoint"
    UNBOUNDED = "Unbounded"


@dataclass
class LPResult:
    status: LPStatus
    value: Optional[float] = None
    point: Optional[np.ndarray] = field(default=None, repr=False)
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return self.status in (LPStatus.OPTIMAL, LPStatus.FEASIBLE)


# ---------------------------------------------------
# Standard form
# ---------------------------------------------------

@dataclass
class _StandardForm:
    """min c·u  s.t.  A u = b, u >= 0, with the map back to original variables."""
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    offset: np.ndarray     # original = offset + recover @ u[:num_structural]
    recover: np.ndarray
    num_structural: int
    num_slack: int


def _standardize(lp: LPProblem) -> _StandardForm:
    n = lp.num_vars
    a_ub, b_ub, a_eq, b_eq = lp.dense()
    c = lp.objective_vector()
    lower, upper = np.array(lp.lower), np.array(lp.upper)

    # original v = offset + R u, with u >= 0
    columns: List[np.ndarray] = []
    offset = np.zeros(n)
    extra_rows: List[Tuple[int, float]] = []
    for i in range(n):
        unit = np.zeros(n)
        if np.isfinite(lower[i]):
            offset[i] = lower[i]
            unit[i] = 1.0
            columns.append(unit)
            if np.isfinite(upper[i]):
                extra_rows.append((len(columns) - 1, upper[i] - lower[i]))
        elif np.isfinite(upper[i]):
            offset[i] = upper[i]
            unit[i] = -1.0
            columns.append(unit)
        else:
            unit[i] = 1.0
            columns.append(unit)
            columns.append(-unit)
    recover = np.column_stack(columns) if columns else np.zeros((n, 0))
    m_struct = recover.shape[1]

    ub_a = a_ub @ recover
    ub_b = b_ub - a_ub @ offset
    if extra_rows:
        caps = np.zeros((len(extra_rows), m_struct))
        for r, (col, cap) in enumerate(extra_rows):
            caps[r, col] = 1.0
        ub_a = np.vstack([ub_a, caps])
        ub_b = np.concatenate([ub_b, [cap for _, cap in extra_rows]])
    eq_a = a_eq @ recover
    eq_b = b_eq - a_eq @ offset

    num_le = len(ub_b)
    rows = num_le + len(eq_b)
    a = np.zeros((rows, m_struct + num_le))
    a[:num_le, :m_struct] = ub_a
    a[:num_le, m_struct:] = np.eye(num_le)
    a[num_le:, :m_struct] = eq_a
    b = np.concatenate([ub_b, eq_b])
    cost = np.concatenate([c @ recover, np.zeros(num_le)])
    return _StandardForm(a=a, b=b, c=cost, offset=offset, recover=recover,
                         num_structural=m_struct, num_slack=num_le)


# ---------------------------------------------------
# Tableau
# ---------------------------------------------------

class _Tableau:
    def __init__(self, a: np.ndarray, b: np.ndarray, max_pivots: int, slack_start: int, num_slack: int):
        rows, cols = a.shape
        negative = b < 0
        a = a.copy()
        b = b.copy()
        a[negative] *= -1.0
        b[negative] *= -1.0

        self.num_original = cols
        self.table = np.hstack([a, np.eye(rows), b[:, None]])
        self.basis = list(range(cols, cols + rows))
        self.rows = rows
        self.cols = cols + rows
        self.pivots = 0
        self.max_pivots = max_pivots
        self.allowed = np.ones(self.cols, dtype=bool)

        # a <= row with non-negative rhs starts from its own slack
        for r in range(num_slack):
            if not negative[r]:
                self.basis[r] = slack_start + r
                self.allowed[cols + r] = False

    def _price(self, cost: np.ndarray) -> np.ndarray:
        return cost - cost[self.basis] @ self.table[:, :-1]

    def _pivot(self, row: int, col: int):
        table = self.table
        table[row] /= table[row, col]
        factors = table[:, col].copy()
        factors[row] = 0.0
        table -= np.outer(factors, table[row])
        self.basis[row] = col
        self.pivots += 1

    def optimize(self, cost: np.ndarray) -> bool:
        """Run simplex on `cost`; False when unbounded."""
        while True:
            if self.pivots >= self.max_pivots:
                raise LPStalledError(f"simplex hit the iteration cap of {self.max_pivots} pivots")
            reduced = self._price(cost)
            reduced[~self.allowed] = 0.0
            candidates = np.flatnonzero(reduced < -PIVOT_TOLERANCE)
            if len(candidates) == 0:
                return True
            if self.pivots < BLAND_AFTER:
                col = int(candidates[np.argmin(reduced[candidates])])
            else:
                col = int(candidates[0])

            column = self.table[:, col]
            eligible = np.flatnonzero(column > PIVOT_TOLERANCE)
            if len(eligible) == 0:
                return False
            ratios = self.table[eligible, -1] / column[eligible]
            best = ratios.min()
            ties = eligible[ratios <= best + PIVOT_TOLERANCE]
            row = int(min(ties, key=lambda r: self.basis[r]))
            self._pivot(row, col)

    def drive_out_artificials(self):
        """Pivot basic artificials out; drop rows that are redundant."""
        keep = []
        for row in range(self.rows):
            if self.basis[row] < self.num_original:
                keep.append(row)
                continue
            entries = np.flatnonzero(np.abs(self.table[row, :self.num_original]) > PIVOT_TOLERANCE)
            if len(entries):
                self._pivot(row, int(entries[0]))
                keep.append(row)
        if len(keep) != self.rows:
            self.table = self.table[keep]
            self.basis = [self.basis[r] for r in keep]
            self.rows = len(keep)

    def solution(self) -> np.ndarray:
        values = np.zeros(self.cols)
        values[self.basis] = self.table[:, -1]
        return values[:self.num_original]


def solve(lp: LPProblem) -> LPResult:
    """
    Solve `lp`.

    Returns:
        LPResult with status Infeasible, Optimal (objective set),
        FeasiblePoint (no objective) or Unbounded.

    Raises:
        LPStalledError: iteration cap 50 * (vars + constraints) reached, or
            the returned point violates the problem by more than 1e-6.
    """
    form = _standardize(lp)
    rows, cols = form.a.shape
    max_pivots = ITERATION_FACTOR * max(1, cols + rows)

    if rows == 0:
        point = form.offset.copy()
        if lp.objective is not None and np.any(form.c < 0):
            return LPResult(LPStatus.UNBOUNDED)
        return _finish(lp, point, 0)

    tableau = _Tableau(form.a, form.b, max_pivots, form.num_structural, form.num_slack)

    phase_one = np.zeros(tableau.cols)
    phase_one[cols:] = 1.0
    tableau.optimize(phase_one)
    residual = float(tableau.table[:, -1] @ phase_one[tableau.basis])
    scale = max(1.0, float(np.max(np.abs(form.b))))
    if residual > FEASIBILITY_TOLERANCE * scale:
        logger.debug("LP infeasible: phase-one residual %.3g after %d pivots", residual, tableau.pivots)
        return LPResult(LPStatus.INFEASIBLE, pivots=tableau.pivots)

    tableau.drive_out_artificials()
    tableau.allowed[cols:] = False

    if lp.objective is not None:
        cost = np.concatenate([form.c, np.zeros(tableau.cols - cols)])
        if not tableau.optimize(cost):
            return LPResult(LPStatus.UNBOUNDED, pivots=tableau.pivots)

    u = tableau.solution()
    point = form.offset + form.recover @ u[:form.num_structural]
    return _finish(lp, point, tableau.pivots)


def _finish(lp: LPProblem, point: np.ndarray, pivots: int) -> LPResult:
    violation = lp.violation(point)
    if violation > POST_CHECK_TOLERANCE:
        logger.warning("LP point violates constraints by %.3g", violation)
        raise LPStalledError(f"returned point violates constraints by {violation:.3g}")
    if lp.objective is None:
        return LPResult(LPStatus.FEASIBLE, point=point, pivots=pivots)
    value = float(lp.objective_vector() @ point)
    return LPResult(LPStatus.OPTIMAL, value=value, point=point, pivots=pivots)


def solve_dense(
    c: Optional[Sequence[float]],
    a_ub: Optional[np.ndarray] = None,
    b_ub: Optional[Sequence[float]] = None,
    bounds: Optional[Sequence[Tuple[float, float]]] = None,
    a_eq: Optional[np.ndarray] = None,
    b_eq: Optional[Sequence[float]] = None,
) -> LPResult:
    """Matrix-form convenience wrapper around `solve`."""
    n = len(c) if c is not None else (a_ub.shape[1] if a_ub is not None else a_eq.shape[1])
    lp = LPProblem()
    for i in range(n):
        lo, hi = bounds[i] if bounds is not None else (0.0, np.inf)
        lp.add_var(f"v{i}", -np.inf if lo is None else lo, np.inf if hi is None else hi)
    if a_ub is not None:
        for row, rhs in zip(np.atleast_2d(a_ub), b_ub):
            lp.add_le(dict(enumerate(row)), rhs)
    if a_eq is not None:
        for row, rhs in zip(np.atleast_2d(a_eq), b_eq):
            lp.add_eq(dict(enumerate(row)), rhs)
    if c is not None:
        lp.set_objective(dict(enumerate(c)))
    return solve(lp)

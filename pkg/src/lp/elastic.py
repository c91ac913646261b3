"""
Conflict-core extraction by elastic filtering.

Every path constraint g <= 0 is relaxed to g <= s with a non-negative slack
(all rows of one literal share a slack). Minimizing the total slack shows
which constraints need the most relaxation; pinning those slacks back to
zero until the LP turns infeasible yields a subset of the path that is
already infeasible together with the base.
"""
import functools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from src.cdcl.literals import Literal
from src.core.errors import ClauseError, ElasticFilterError, LPStalledError
from src.lp.simplex import LPProblem, LPStatus, solve

logger = logging.getLogger(__name__)

SLACK_TIE_TOLERANCE = 1e-9

PathConstraint = Tuple[Literal, Sequence[Tuple[Dict[int, float], float]]]


class CoreOrigin(str, Enum):
    ELASTIC_FILTER = "ElasticFilter"
    BINARY_ELASTIC = "BinaryElastic"
    FULL_PATH = "FullPath"


@dataclass(frozen=True)
class ConflictCore:
    """Path positions whose constraints are infeasible together with the base."""
    indices: Tuple[int, ...]
    literals: Tuple[Literal, ...]
    origin: CoreOrigin

    def __post_init__(self):
        if not self.indices:
            raise ClauseError("a conflict core cannot be empty")

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class NotInfeasible:
    """The full path is LP-feasible with the base; nothing to learn."""


def full_path_core(path: Sequence[PathConstraint]) -> ConflictCore:
    return ConflictCore(
        indices=tuple(range(len(path))),
        literals=tuple(lit for lit, _ in path),
        origin=CoreOrigin.FULL_PATH,
    )


def _core(path: Sequence[PathConstraint], indices: Sequence[int], origin: CoreOrigin) -> ConflictCore:
    ordered = tuple(sorted(indices))
    return ConflictCore(indices=ordered, literals=tuple(path[i][0] for i in ordered), origin=origin)


def _with_pinned(base: LPProblem, path: Sequence[PathConstraint], chosen: Sequence[int]) -> LPProblem:
    lp = base.copy()
    for i in chosen:
        for coeffs, rhs in path[i][1]:
            lp.add_le(coeffs, rhs, name=f"path{i}")
    return lp


def _is_infeasible(lp: LPProblem) -> bool:
    lp.set_objective(None)
    return solve(lp).status is LPStatus.INFEASIBLE


def _elastic(base: LPProblem, path: Sequence[PathConstraint]) -> Tuple[LPProblem, List[int]]:
    """Copy of base with every path constraint relaxed by its own slack."""
    lp = base.copy()
    slacks = []
    for i, (lit, rows) in enumerate(path):
        s = lp.add_var(f"s{i}_{lit}", 0.0, np.inf)
        slacks.append(s)
        for r, (coeffs, rhs) in enumerate(rows):
            relaxed = dict(coeffs)
            relaxed[s] = relaxed.get(s, 0.0) - 1.0
            lp.add_le(relaxed, rhs, name=f"elastic{i}_{r}")
    return lp, slacks


def _check_base(base: LPProblem):
    probe = base.copy()
    if _is_infeasible(probe):
        raise ElasticFilterError("base problem is infeasible on its own")


def elastic_filter(base: LPProblem, path: Sequence[PathConstraint]) -> ConflictCore:
    """
    Pin the largest slacks round by round until the LP becomes infeasible.

    Each round minimizes the sum of the unpinned slacks and pins every
    slack within 1e-9 of the largest positive one.

    Returns:
        ConflictCore of origin ElasticFilter, or the full path (origin
        FullPath) if an LP stalls.

    Raises:
        ElasticFilterError: base infeasible alone, or base and path
            feasible together.
    """
    if not path:
        raise ElasticFilterError("cannot filter an empty path")
    try:
        _check_base(base)
        lp, slacks = _elastic(base, path)
        pinned: List[int] = []

        while True:
            objective = {s: 1.0 for i, s in enumerate(slacks) if i not in pinned}
            lp.set_objective(objective or None)
            result = solve(lp)
            if result.status is LPStatus.INFEASIBLE:
                logger.debug("elastic filter core %s", [str(path[i][0]) for i in pinned])
                return _core(path, pinned, CoreOrigin.ELASTIC_FILTER)

            values = np.array([result.point[s] for s in slacks])
            free = [i for i in range(len(path)) if i not in pinned]
            largest = max((values[i] for i in free), default=0.0)
            if largest <= SLACK_TIE_TOLERANCE:
                raise ElasticFilterError("path is feasible together with the base")

            group = [i for i in free if values[i] >= largest - SLACK_TIE_TOLERANCE]
            for i in group:
                lp.upper[slacks[i]] = 0.0
            pinned.extend(group)
    except LPStalledError as exc:
        logger.warning("elastic filter stalled (%s); using the full path", exc)
        return full_path_core(path)


def _ranking(values: np.ndarray) -> List[int]:
    """Indices by slack descending; near-ties put the later path position first."""
    def compare(i: int, j: int) -> int:
        if abs(values[i] - values[j]) <= SLACK_TIE_TOLERANCE:
            return j - i
        return -1 if values[i] > values[j] else 1

    return sorted(range(len(values)), key=functools.cmp_to_key(compare))


def elastic_filter_binary(
    base: LPProblem, path: Sequence[PathConstraint]
) -> Union[ConflictCore, NotInfeasible]:
    """
    Binary-search variant.

    All constraints are pinned first; a feasible result means the path is
    not LP-refutable. Otherwise the constraints are ranked by their slack in
    the fully relaxed minimum-slack solution and the shortest infeasible
    prefix of that ranking is found by bisection.

    Returns:
        ConflictCore of origin BinaryElastic, NotInfeasible, or whatever
        `elastic_filter` returns if a later LP stalls.

    Raises:
        ElasticFilterError: base infeasible alone.
        LPStalledError: the all-pinned feasibility check stalled.
    """
    if not path:
        raise ElasticFilterError("cannot filter an empty path")
    _check_base(base)

    if not _is_infeasible(_with_pinned(base, path, range(len(path)))):
        return NotInfeasible()

    try:
        lp, slacks = _elastic(base, path)
        lp.set_objective({s: 1.0 for s in slacks})
        result = solve(lp)
        values = np.array([result.point[s] for s in slacks])
        order = _ranking(values)

        low, high = 1, len(order)
        while low < high:
            mid = (low + high) // 2
            if _is_infeasible(_with_pinned(base, path, order[:mid])):
                high = mid
            else:
                low = mid + 1
        logger.debug("binary elastic core of size %d out of %d", high, len(path))
        return _core(path, order[:high], CoreOrigin.BINARY_ELASTIC)
    except LPStalledError as exc:
        logger.warning("binary elastic filter stalled (%s); falling back to round-based filtering", exc)
        return elastic_filter(base, path)

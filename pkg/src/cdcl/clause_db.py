"""
Clause database with two watched literals, plus the conflict-analysis rules.

Conflicts here come from theory cores, not resolution chains, so the learned
clause is simply the negated core and the backjump target is the second
highest level among its literals.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Union

from src.cdcl.literals import Clause, ClauseOrigin, Literal
from src.cdcl.trail import Trail, propagated
from src.core.errors import ClauseError

logger = logging.getLogger(__name__)


class ClauseState(str, Enum):
    SATISFIED = "Satisfied"
    OPEN = "Open"
    UNIT = "Unit"
    FALSIFIED = "Falsified"


@dataclass(frozen=True)
class AddResult:
    clause_id: int
    state: ClauseState
    literal: Optional[Literal] = None
    duplicate: bool = False


@dataclass(frozen=True)
class Fixpoint:
    pass


@dataclass(frozen=True)
class Conflict:
    clause_id: int


@dataclass(frozen=True)
class Level:
    level: int


@dataclass(frozen=True)
class Refuted:
    pass


PropagationResult = Union[Fixpoint, Conflict]
BackjumpResult = Union[Level, Refuted]


def _watch_order(clause: Clause, trail: Trail) -> List[Literal]:
    """Literals ordered true/unassigned first, then false ones by level, highest first."""
    def key(lit: Literal):
        value = trail.value_of(lit)
        if value is not False:
            return (0, 0)
        return (1, -trail.level_of(lit))

    return sorted(clause.literals, key=key)


def clause_state(clause: Clause, trail: Trail) -> AddResult:
    """State of `clause` under the trail (id left as -1)."""
    free = []
    for lit in clause.literals:
        value = trail.value_of(lit)
        if value is True:
            return AddResult(-1, ClauseState.SATISFIED)
        if value is None:
            free.append(lit)
    if not free:
        return AddResult(-1, ClauseState.FALSIFIED)
    if len(free) == 1:
        return AddResult(-1, ClauseState.UNIT, free[0])
    return AddResult(-1, ClauseState.OPEN)


class ClauseDB:
    """
    Per-worker clause store.

    Clauses of size >= 2 are watched on two literals; unit clauses are kept
    in a separate list and re-checked on every propagation. Newly added
    clauses are scanned once in full by the next `unit_propagate`, which is
    what assigns their unit literal or reports them falsified.
    """

    def __init__(self):
        self._clauses: Dict[int, Clause] = {}
        self._by_key: Dict[frozenset, int] = {}
        self._watched: Dict[int, List[Literal]] = {}
        self._watchers: Dict[Literal, List[int]] = defaultdict(list)
        self._units: List[int] = []
        self._pending: List[int] = []
        self._head = 0

    def __len__(self) -> int:
        return len(self._clauses)

    def __contains__(self, clause: Clause) -> bool:
        return clause.key in self._by_key

    def get(self, clause_id: int) -> Clause:
        return self._clauses[clause_id]

    def clauses(self) -> List[Clause]:
        return list(self._clauses.values())

    def watches(self, clause_id: int) -> List[Literal]:
        return list(self._watched.get(clause_id, []))

    # ---------------------------------------------------
    # Insertion
    # ---------------------------------------------------

    def add(self, clause: Clause, trail: Trail) -> AddResult:
        """
        Store a clause and report its state under the current trail.

        An identical literal set already stored is not added again; the
        existing id is returned with `duplicate=True`.
        """
        state = clause_state(clause, trail)
        existing = self._by_key.get(clause.key)
        if existing is not None:
            return AddResult(existing, state.state, state.literal, duplicate=True)

        clause_id = len(self._clauses) + 1
        self._clauses[clause_id] = clause
        self._by_key[clause.key] = clause_id
        if len(clause) == 1:
            self._units.append(clause_id)
        else:
            self._set_watches(clause_id, _watch_order(clause, trail)[:2])
            self._pending.append(clause_id)
        return AddResult(clause_id, state.state, state.literal)

    def _set_watches(self, clause_id: int, pair: Sequence[Literal]):
        for lit in self._watched.get(clause_id, []):
            self._watchers[lit].remove(clause_id)
        self._watched[clause_id] = list(pair)
        for lit in pair:
            self._watchers[lit].append(clause_id)

    def rewatch(self, clause_id: int, trail: Trail):
        """Move the watches of a clause to its two best literals under the trail."""
        clause = self._clauses[clause_id]
        if len(clause) >= 2:
            self._set_watches(clause_id, _watch_order(clause, trail)[:2])

    def reset_head(self):
        """Rescan the whole trail on the next propagation."""
        self._head = 0

    # ---------------------------------------------------
    # Propagation
    # ---------------------------------------------------

    def _scan(self, clause_id: int, trail: Trail) -> Optional[Conflict]:
        state = clause_state(self._clauses[clause_id], trail)
        if state.state is ClauseState.FALSIFIED:
            return Conflict(clause_id)
        if state.state is ClauseState.UNIT:
            trail.assign(state.literal, propagated(clause_id))
        return None

    def _visit(self, false_lit: Literal, trail: Trail) -> Optional[Conflict]:
        for clause_id in list(self._watchers.get(false_lit, [])):
            pair = self._watched[clause_id]
            other = pair[1] if pair[0] == false_lit else pair[0]
            if trail.value_of(other) is True:
                continue
            replacement = next(
                (lit for lit in self._clauses[clause_id].literals
                 if lit not in pair and trail.value_of(lit) is not False),
                None,
            )
            if replacement is not None:
                self._set_watches(clause_id, [other, replacement])
                continue
            if trail.value_of(other) is None:
                trail.assign(other, propagated(clause_id))
                continue
            return Conflict(clause_id)
        return None

    def unit_propagate(self, trail: Trail) -> PropagationResult:
        """
        Assign implied literals at the current level until a fixpoint or a
        clause whose literals are all false.
        """
        for clause_id in self._units:
            conflict = self._scan(clause_id, trail)
            if conflict is not None:
                return conflict
        pending, self._pending = self._pending, []
        for position, clause_id in enumerate(pending):
            conflict = self._scan(clause_id, trail)
            if conflict is not None:
                self._pending = pending[position + 1:]
                return conflict

        self._head = min(self._head, len(trail))
        while self._head < len(trail):
            conflict = self._visit(trail[self._head].literal.negate(), trail)
            if conflict is not None:
                return conflict
            self._head += 1
        return Fixpoint()


# ---------------------------------------------------
# Conflict analysis
# ---------------------------------------------------

def learn_from_core(
    core: Iterable[Literal],
    trail: Trail,
    origin: ClauseOrigin = ClauseOrigin.ELASTIC_CORE,
) -> Clause:
    """
    Negate a core that the trail makes true.

    Args:
        core: Literals shown infeasible together.
        trail: Current assignment; every core literal must be true on it.
        origin: Tag for the learned clause.

    Returns:
        The disjunction of the negated core literals.

    Raises:
        ClauseError: a core literal is unassigned or false.
    """
    literals = list(core)
    for lit in literals:
        if trail.value_of(lit) is not True:
            raise ClauseError(f"core literal {lit} is not true on the trail")
    return Clause.from_literals([lit.negate() for lit in literals], origin)


def backjump_level(clause: Clause, trail: Trail) -> BackjumpResult:
    """
    Where to resume after `clause` is falsified.

    Second highest level among the clause's literals, 0 for a single
    literal. When the highest level is shared the target is one below it.
    A clause falsified entirely at level 0 refutes the problem.
    """
    levels = []
    for lit in clause.literals:
        if trail.value_of(lit) is not False:
            raise ClauseError(f"clause {clause} is not falsified by the trail")
        levels.append(trail.level_of(lit))
    levels.sort(reverse=True)
    if levels[0] == 0:
        return Refuted()
    if len(levels) == 1:
        return Level(0)
    if levels[0] == levels[1]:
        return Level(levels[0] - 1)
    return Level(levels[1])


def backtrack(trail: Trail, db: ClauseDB, level: int):
    """Rewind the trail to `level` and make the database rescan it."""
    trail.backtrack(level)
    db.reset_head()

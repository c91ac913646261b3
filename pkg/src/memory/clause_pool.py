#clause_pool.py
"""
Shared conflict-clause pool.

Every solver worker publishes the clauses it learns here and fetches the
ones published by others at the top of each loop iteration. Clauses get a
global sequence number on insertion; a worker keeps the highest number it
has seen and asks only for what came after it.

Also hosts the soundness audit: a clause is sound when the problem with the
clause negated is refuted by bounds or by the LP.
"""
import logging
import threading
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Union

from src.bounds.deeppoly import (
    InfeasiblePhases,
    PhaseMap,
    Reachability,
    check_unsafe_by_bounds,
    propagate_bounds,
)
from src.cdcl.literals import Clause, ClauseOrigin
from src.core.errors import LPStalledError
from src.lp.encoding import build_lp
from src.lp.simplex import LPStatus, solve
from src.network.model import Phase
from src.properties.problem import Box, VerificationProblem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Added:
    seq: int


@dataclass(frozen=True)
class Duplicate:
    seq: int


@dataclass(frozen=True)
class Closed:
    """The pool stopped accepting clauses (a verdict was reached)."""


PublishResult = Union[Added, Duplicate, Closed]


@dataclass
class ClausePool:
    """Append-only, sequence-numbered clause store shared between threads."""

    _clauses: List[Clause] = field(default_factory=list)
    _index: Dict[frozenset, int] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _closed: bool = False

    def publish_clause(self, clause: Clause) -> PublishResult:
        """
        Append `clause` with the next sequence number.

        Returns:
            Added(seq) for a new literal set, Duplicate(seq) of the stored
            copy otherwise, Closed() once the pool has been closed.
        """
        with self._lock:
            if self._closed:
                return Closed()
            existing = self._index.get(clause.key)
            if existing is not None:
                return Duplicate(existing)
            seq = len(self._clauses) + 1
            self._clauses.append(clause.with_id(seq))
            self._index[clause.key] = seq
        logger.debug("pool clause %d %s %s", seq, clause.origin.value, clause)
        return Added(seq)

    def fetch_clauses_since(self, seq: int) -> List[Clause]:
        """Every clause with id > seq, in id order."""
        if seq < 0:
            raise ValueError("sequence cursor must be >= 0")
        with self._lock:
            return self._clauses[seq:]

    def close(self):
        with self._lock:
            self._closed = True

    @property
    def closed(self) -> bool:
        with self._lock:
            return self._closed

    @property
    def latest_seq(self) -> int:
        with self._lock:
            return len(self._clauses)

    def __len__(self) -> int:
        return self.latest_seq

    def clauses(self) -> List[Clause]:
        return self.fetch_clauses_since(0)

    def count_by_origin(self) -> Dict[str, int]:
        counts = Counter(clause.origin.value for clause in self.clauses())
        return {origin.value: counts.get(origin.value, 0) for origin in ClauseOrigin}

    def audit_dump(self) -> str:
        """One clause per line: `<seq> <origin> <literals>`."""
        return "".join(
            f"{clause.id} {clause.origin.value} {' '.join(str(lit) for lit in clause)}\n"
            for clause in self.clauses()
        )


# ---------------------------------------------------
# Soundness audit
# ---------------------------------------------------

class AuditVerdict(str, Enum):
    SOUND = "sound"
    UNSOUND = "unsound"
    INCONCLUSIVE = "inconclusive"


def audit_clause(
    problem: VerificationProblem,
    clause: Clause,
    regions: Optional[Mapping[int, Box]] = None,
) -> AuditVerdict:
    """
    Re-check a clause against the problem from scratch.

    The negation of the clause fixes a phase for every neuron literal and,
    for a negated split guard, selects that region's box. The clause is
    sound when bounds under those phases are infeasible or cannot reach the
    unsafe region, or when the LP is infeasible.

    Args:
        problem: The whole (unsplit) problem.
        clause: Clause to audit.
        regions: Box of every input-split region, keyed by region id.

    Returns:
        AuditVerdict; INCONCLUSIVE when the LP stalls.
    """
    network = problem.network
    box = problem.input_box
    for lit in clause.guards():
        if lit.phase is Phase.INACTIVE and regions is not None and lit.neuron.index in regions:
            box = regions[lit.neuron.index]

    negated = [lit.negate() for lit in clause if not lit.is_guard]
    root = propagate_bounds(network, box, PhaseMap.unknown(network))
    if isinstance(root, InfeasiblePhases):
        return AuditVerdict.SOUND
    phases = PhaseMap.from_literals(network, negated)
    bounds = propagate_bounds(network, box, phases, parent=root)
    if isinstance(bounds, InfeasiblePhases):
        return AuditVerdict.SOUND
    if check_unsafe_by_bounds(bounds, problem.unsafe) is Reachability.CANNOT_REACH:
        return AuditVerdict.SOUND

    try:
        result = solve(build_lp(problem.with_box(box), phases, bounds))
    except LPStalledError as exc:
        logger.warning("audit of clause %s inconclusive: %s", clause, exc)
        return AuditVerdict.INCONCLUSIVE
    if result.status is LPStatus.INFEASIBLE:
        return AuditVerdict.SOUND
    logger.error("clause %s (%s) is not implied by the problem", clause, clause.origin.value)
    return AuditVerdict.UNSOUND


def audit_pool(
    problem: VerificationProblem,
    pool: ClausePool,
    regions: Optional[Mapping[int, Box]] = None,
) -> Dict[AuditVerdict, List[Clause]]:
    """Audit every clause in the pool, grouped by verdict."""
    report: Dict[AuditVerdict, List[Clause]] = {verdict: [] for verdict in AuditVerdict}
    for clause in pool.clauses():
        report[audit_clause(problem, clause, regions)].append(clause)
    logger.info(
        "audited %d clauses: %d sound, %d unsound, %d inconclusive",
        len(pool),
        len(report[AuditVerdict.SOUND]),
        len(report[AuditVerdict.UNSOUND]),
        len(report[AuditVerdict.INCONCLUSIVE]),
    )
    return report

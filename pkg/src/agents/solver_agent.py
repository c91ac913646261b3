# src/agents/solver_agent.py
"""
Solver worker: branch-and-bound over ReLU phases with clause learning.

One worker owns one subproblem (an input-split region) and a private
trail and clause database. Every loop iteration looks at one new search
state:

1. fetch new clauses from the shared pool and install them
2. unit-propagate; a conflict is resolved by backjumping
3. compute bounds under the trail's phases; a refutation submits the path,
   learns the negated decisions and backjumps
4. turn bound-decided neurons into clauses and publish them
5. solve the LP; infeasible is handled like step 3
6. run a local counterexample search from the LP point
7. pick a crossing neuron and decide it

Every state becomes one node of the search forest, which is what the
statistics count and what the DOT export draws.
"""
import logging
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

from src.agents.attack_agent import Found, local_counterexample_search
from src.bounds.deeppoly import (
    BoundsMap,
    InfeasiblePhases,
    PhaseMap,
    Reachability,
    check_unsafe_by_bounds,
    derive_phase_clauses,
    propagate_bounds,
)
from src.cdcl.clause_db import (
    ClauseDB,
    ClauseState,
    Conflict,
    Refuted,
    backjump_level,
    backtrack,
    clause_state,
)
from src.cdcl.literals import Clause, ClauseOrigin, Literal, guard
from src.cdcl.trail import Trail, propagated
from src.core.config import SolverConfig
from src.core.errors import LPStalledError
from src.core.verdict import SolverStats
from src.lp.encoding import Layout, build_lp
from src.lp.simplex import LPStatus, solve
from src.memory.clause_pool import Added, ClausePool
from src.memory.path_pool import PathPool
from src.network.model import Phase
from src.properties.problem import Box, Counterexample, VerificationProblem

logger = logging.getLogger(__name__)


# ---------------------------------------------------
# Subproblems
# ---------------------------------------------------

@dataclass(frozen=True)
class Subproblem:
    """An input region to refute, with its split guard (None when unsplit)."""
    id: int
    problem: VerificationProblem
    guard: Optional[Literal] = None


def split_input(problem: VerificationProblem, threshold: int) -> List[Subproblem]:
    """
    Bisect the widest box dimension until 2**threshold regions exist.

    Args:
        problem: Problem to split.
        threshold: Number of bisection rounds; 0 keeps the problem whole.

    Returns:
        Subproblems in region order, each with a distinct id and guard.
    """
    if threshold < 0:
        raise ValueError("split threshold must be >= 0")
    if threshold == 0:
        return [Subproblem(0, problem)]
    boxes = [problem.input_box]
    for _ in range(threshold):
        boxes = [half for box in boxes for half in box.bisect()]
    return [
        Subproblem(region, problem.with_box(box, f"{problem.name}_r{region}"), guard(region))
        for region, box in enumerate(boxes)
    ]


# ---------------------------------------------------
# Search forest
# ---------------------------------------------------

class NodeStatus(str, Enum):
    BRANCHED = "Branched"
    UNSAT_BOUNDS = "UnsatBounds"
    UNSAT_LP = "UnsatLP"
    SAT = "Sat"
    PRUNED = "PrunedByClause"
    STALLED = "Stalled"


UNSAT_STATUSES = (NodeStatus.UNSAT_BOUNDS, NodeStatus.UNSAT_LP)

_NODE_COLORS = {
    NodeStatus.BRANCHED: "white",
    NodeStatus.UNSAT_BOUNDS: "orange",
    NodeStatus.UNSAT_LP: "gold",
    NodeStatus.SAT: "green",
    NodeStatus.PRUNED: "lightblue",
    NodeStatus.STALLED: "gray",
}


@dataclass
class SearchTreeNode:
    id: int
    parent: Optional[int]
    label: str
    status: NodeStatus
    region: int
    learned_core: bool = False


class SearchForest:
    """Thread-safe store of search-tree nodes, one tree per region."""

    def __init__(self):
        self._nodes: List[SearchTreeNode] = []
        self._lock = threading.Lock()

    def add(self, parent: Optional[int], label: str, status: NodeStatus, region: int) -> SearchTreeNode:
        with self._lock:
            node = SearchTreeNode(len(self._nodes), parent, label, status, region)
            self._nodes.append(node)
            return node

    def mark_learned(self, node_id: int):
        with self._lock:
            self._nodes[node_id].learned_core = True

    def nodes(self) -> List[SearchTreeNode]:
        with self._lock:
            return list(self._nodes)

    def __len__(self) -> int:
        with self._lock:
            return len(self._nodes)

    def roots(self) -> List[SearchTreeNode]:
        return [node for node in self.nodes() if node.parent is None]

    def children(self, node_id: int) -> List[SearchTreeNode]:
        return [node for node in self.nodes() if node.parent == node_id]

    def count(self, *statuses: NodeStatus) -> int:
        return sum(1 for node in self.nodes() if node.status in statuses)

    def to_dot(self, title: str = "search") -> str:
        """
        Graphviz rendering: label = literal that created the state, fill
        color by status, red for refutations that produced an elastic core.
        """
        lines = [f'digraph "{title}" {{', "  node [shape=box, style=filled];"]
        for node in self.nodes():
            color = "red" if node.learned_core else _NODE_COLORS[node.status]
            lines.append(
                f'  n{node.id} [label="{node.label}\\n{node.status.value}", fillcolor="{color}"];'
            )
        for node in self.nodes():
            if node.parent is not None:
                lines.append(f"  n{node.parent} -> n{node.id};")
        lines.append("}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------
# Branching
# ---------------------------------------------------

def branch_select(bounds: BoundsMap, trail: Trail, heuristic: str = "widest") -> Literal:
    """
    Choose the next decision literal.

    "widest" maximizes min(-lo, hi) over pre-activation bounds; "earliest"
    takes the first crossing neuron in layer order. Ties go to the lower
    layer, then the lower index. The Active phase is always tried first.

    Raises:
        ValueError: no crossing unassigned neuron, or unknown heuristic.
    """
    candidates = [n for n in bounds.unknown_neurons() if not trail.is_assigned(n)]
    if not candidates:
        raise ValueError("no crossing neuron left to branch on")
    if heuristic == "earliest":
        chosen = candidates[0]
    elif heuristic == "widest":
        chosen, best = candidates[0], None
        for neuron in candidates:
            lo, hi = bounds.pre_bounds(neuron)
            score = min(-lo, hi)
            if best is None or score > best:
                chosen, best = neuron, score
    else:
        raise ValueError(f"unknown branch heuristic {heuristic!r}")
    return Literal(chosen, Phase.ACTIVE)


# ---------------------------------------------------
# Worker
# ---------------------------------------------------

class WorkerStatus(str, Enum):
    REFUTED = "Refuted"
    VIOLATED = "Violated"
    STALLED = "Stalled"
    TIMEOUT = "Timeout"
    CANCELLED = "Cancelled"


@dataclass(frozen=True)
class SubproblemResult:
    subproblem_id: int
    status: WorkerStatus
    counterexample: Optional[Counterexample] = None


PathCallback = Callable[[], None]
CounterexampleCallback = Callable[[Counterexample], bool]


@dataclass
class _Counters:
    states: int = 0
    unsat: int = 0
    fetched: int = 0
    lp_calls: int = 0
    submitted: int = 0
    learned: Counter = field(default_factory=Counter)


class SolverWorker:
    """
    Runs the verification loop on one subproblem.

    Args:
        subproblem: Region to refute.
        clause_pool: Shared learned-clause pool.
        path_pool: Shared queue of refuted paths.
        config: Run configuration.
        forest: Search forest receiving this worker's nodes.
        stop_event: Set when the run is over (verdict reached elsewhere).
        deadline: time.monotonic() value after which the worker gives up.
        name: Worker name used in log messages.
        on_path: Called after each path submission (inline analysis).
        on_counterexample: Called with a validated counterexample; returns
            whether it was the first one of the run.
        lp_store: Optional LP dump store.
    """

    def __init__(
        self,
        subproblem: Subproblem,
        clause_pool: ClausePool,
        path_pool: PathPool,
        config: SolverConfig,
        forest: SearchForest,
        stop_event: threading.Event,
        deadline: float,
        name: str = "solver-0",
        on_path: Optional[PathCallback] = None,
        on_counterexample: Optional[CounterexampleCallback] = None,
        lp_store=None,
    ):
        self.subproblem = subproblem
        self.problem = subproblem.problem
        self.network = subproblem.problem.network
        self.clause_pool = clause_pool
        self.path_pool = path_pool
        self.config = config
        self.forest = forest
        self.stop_event = stop_event
        self.deadline = deadline
        self.name = name
        self.on_path = on_path
        self.on_counterexample = on_counterexample
        self.lp_store = lp_store

        self.trail = Trail()
        self.db = ClauseDB()
        self.layout = Layout.for_network(self.network)
        self.cursor = 0
        self.counters = _Counters()
        self._stack: List[Tuple[int, int]] = []
        self._label = str(subproblem.guard) if subproblem.guard is not None else "root"

    @property
    def learning(self) -> bool:
        return self.config.clause_learning

    def stats(self) -> SolverStats:
        c = self.counters
        return SolverStats(
            states_explored=c.states,
            unsat_paths=c.unsat,
            clauses_learned={origin.value: c.learned.get(origin.value, 0) for origin in ClauseOrigin},
            clauses_fetched=c.fetched,
            lp_calls=c.lp_calls,
            paths_submitted=c.submitted,
        )

    # ---------------------------------------------------
    # Search tree bookkeeping
    # ---------------------------------------------------

    def _node(self, status: NodeStatus) -> SearchTreeNode:
        level = self.trail.current_level
        while self._stack and self._stack[-1][0] > level:
            self._stack.pop()
        parent = self._stack[-1][1] if self._stack else None
        node = self.forest.add(parent, self._label, status, self.subproblem.id)
        self._stack.append((level, node.id))
        self.counters.states += 1
        if status in UNSAT_STATUSES:
            self.counters.unsat += 1
        logger.debug("%s state %d [%s] %s at level %d", self.name, node.id, node.label, status.value, level)
        return node

    def _result(self, status: WorkerStatus, counterexample: Optional[Counterexample] = None) -> SubproblemResult:
        return SubproblemResult(self.subproblem.id, status, counterexample)

    # ---------------------------------------------------
    # Clause handling
    # ---------------------------------------------------

    def _foreign(self, clause: Clause) -> bool:
        """True if the clause is scoped to another input region."""
        mine = self.subproblem.guard
        return any(mine is None or g.neuron != mine.neuron for g in clause.guards())

    def _install(self, clause: Clause):
        if len(clause) == 1 and self.trail.current_level > 0:
            backtrack(self.trail, self.db, 0)
            self._label = str(clause.literals[0])
        return self.db.add(clause, self.trail)

    def _sync(self):
        for clause in self.clause_pool.fetch_clauses_since(self.cursor):
            self.cursor = clause.id
            if self._foreign(clause) or clause in self.db:
                continue
            self._install(clause)
            self.counters.fetched += 1

    def _asserting(self, clause_id: int) -> int:
        """
        Falsified clause to backjump on. A clause with two or more literals
        at its highest level asserts nothing after backjumping, so it is
        replaced by the negated decisions up to that level.
        """
        clause = self.db.get(clause_id)
        levels = sorted((self.trail.level_of(lit) for lit in clause.literals), reverse=True)
        if len(levels) == 1 or levels[0] == 0 or levels[0] != levels[1]:
            return clause_id
        decisions = [lit for lit in self.trail.decisions() if self.trail.level_of(lit) <= levels[0]]
        learned = Clause.from_literals([lit.negate() for lit in decisions], ClauseOrigin.PATH_NEGATION)
        added = self.db.add(learned, self.trail)
        if not added.duplicate:
            self.counters.learned[ClauseOrigin.PATH_NEGATION.value] += 1
            logger.debug("%s: %s has no asserting literal; learned %s", self.name, clause, learned)
        return added.clause_id

    def _handle_conflict(self, clause_id: int) -> bool:
        """Backjump on a falsified clause; False when the subproblem is refuted."""
        clause_id = self._asserting(clause_id)
        clause = self.db.get(clause_id)
        target = backjump_level(clause, self.trail)
        if isinstance(target, Refuted):
            return False
        self.db.rewatch(clause_id, self.trail)
        backtrack(self.trail, self.db, target.level)
        state = clause_state(clause, self.trail)
        if state.state is ClauseState.UNIT:
            self.trail.assign(state.literal, propagated(clause_id))
            self._label = str(state.literal)
        return True

    def _refute(self, node: SearchTreeNode) -> bool:
        """
        Record a refuted state: submit the path for analysis, learn the
        negated decisions and backjump. False when nothing is left to undo.
        """
        decisions = self.trail.decisions()
        if not decisions:
            return False
        if self.learning:
            path = [lit for lit in self.trail.literals() if not lit.is_guard]
            self.path_pool.submit_path(path, self.subproblem.id, node.id)
            self.counters.submitted += 1
            if self.on_path is not None:
                self.on_path()

        clause = Clause.from_literals([lit.negate() for lit in decisions], ClauseOrigin.PATH_NEGATION)
        added = self.db.add(clause, self.trail)
        if not added.duplicate:
            self.counters.learned[ClauseOrigin.PATH_NEGATION.value] += 1
            logger.debug("%s learned %s", self.name, clause)
        return self._handle_conflict(added.clause_id)

    def _learn_phase_clauses(self, bounds: BoundsMap):
        for clause in derive_phase_clauses(bounds, self.trail.literals()):
            if self.db.add(clause, self.trail).duplicate:
                continue
            self.counters.learned[ClauseOrigin.BOUND_IMPLIED.value] += 1
            if isinstance(self.clause_pool.publish_clause(clause), Added):
                logger.debug("%s published %s", self.name, clause)

    # ---------------------------------------------------
    # Theory check
    # ---------------------------------------------------

    def _check_state(self, root) -> Optional[SubproblemResult]:
        """Steps 3 to 7 for the current state; None means keep searching."""
        phases = PhaseMap.from_literals(self.network, self.trail.literals())
        bounds = propagate_bounds(self.network, self.problem.input_box, phases, parent=root)
        if isinstance(bounds, InfeasiblePhases) or (
            check_unsafe_by_bounds(bounds, self.problem.unsafe) is Reachability.CANNOT_REACH
        ):
            node = self._node(NodeStatus.UNSAT_BOUNDS)
            return None if self._refute(node) else self._result(WorkerStatus.REFUTED)

        if self.learning:
            self._learn_phase_clauses(bounds)

        lp = build_lp(self.problem, phases, bounds)
        self.counters.lp_calls += 1
        if self.lp_store is not None:
            self.lp_store.dump(lp, f"{self.name}_r{self.subproblem.id}_s{len(self.forest)}")
        point = None
        try:
            result = solve(lp)
            if result.status is LPStatus.INFEASIBLE:
                node = self._node(NodeStatus.UNSAT_LP)
                return None if self._refute(node) else self._result(WorkerStatus.REFUTED)
            point = result.point
        except LPStalledError as exc:
            logger.warning("%s LP stalled (%s); branching without a candidate point", self.name, exc)

        if point is not None:
            search = local_counterexample_search(self.problem, self.layout.input_point(point), self.config.pgd)
            if isinstance(search, Found):
                self._node(NodeStatus.SAT)
                if self.on_counterexample is not None:
                    self.on_counterexample(search.counterexample)
                return self._result(WorkerStatus.VIOLATED, search.counterexample)

        try:
            literal = branch_select(bounds, self.trail, self.config.branch_heuristic)
        except ValueError:
            self._node(NodeStatus.STALLED)
            logger.warning("%s: exact LP point failed validation; subproblem left open", self.name)
            return self._result(WorkerStatus.STALLED)

        self._node(NodeStatus.BRANCHED)
        self.trail.decide(literal)
        self._label = str(literal)
        return None

    # ---------------------------------------------------
    # Loop
    # ---------------------------------------------------

    def run(self) -> SubproblemResult:
        """Search until the subproblem is refuted, violated, or the run stops."""
        logger.info("%s starting on region %d (%s)", self.name, self.subproblem.id, self.problem.name)
        root = propagate_bounds(self.network, self.problem.input_box, PhaseMap.unknown(self.network))
        if isinstance(root, InfeasiblePhases):
            root = None
        if self.subproblem.guard is not None:
            self.db.add(Clause((self.subproblem.guard,), ClauseOrigin.INPUT_SPLIT), self.trail)

        while True:
            if self.stop_event.is_set():
                return self._result(WorkerStatus.CANCELLED)
            if time.monotonic() > self.deadline:
                logger.info("%s timed out on region %d", self.name, self.subproblem.id)
                return self._result(WorkerStatus.TIMEOUT)

            if self.learning:
                self._sync()
            outcome = self.db.unit_propagate(self.trail)
            if isinstance(outcome, Conflict):
                self._node(NodeStatus.PRUNED)
                if not self._handle_conflict(outcome.clause_id):
                    break
                continue

            result = self._check_state(root)
            if result is not None:
                self._log_result(result)
                return result

        result = self._result(WorkerStatus.REFUTED)
        self._log_result(result)
        return result

    def _log_result(self, result: SubproblemResult):
        logger.info(
            "%s region %d: %s after %d states (%d unsat)",
            self.name, self.subproblem.id, result.status.value,
            self.counters.states, self.counters.unsat,
        )


def solver_loop(
    subproblem: Subproblem,
    clause_pool: ClausePool,
    path_pool: PathPool,
    config: SolverConfig,
    forest: Optional[SearchForest] = None,
    stop_event: Optional[threading.Event] = None,
    deadline: Optional[float] = None,
    **kwargs,
) -> Tuple[SubproblemResult, SolverStats]:
    """Run one worker to completion and return its result and counters."""
    worker = SolverWorker(
        subproblem,
        clause_pool,
        path_pool,
        config,
        forest if forest is not None else SearchForest(),
        stop_event if stop_event is not None else threading.Event(),
        deadline if deadline is not None else time.monotonic() + config.timeout,
        **kwargs,
    )
    result = worker.run()
    return result, worker.stats()


def region_boxes(subproblems: List[Subproblem]) -> Dict[int, Box]:
    """Region id to box, for auditing guarded clauses."""
    return {sub.id: sub.problem.input_box for sub in subproblems}

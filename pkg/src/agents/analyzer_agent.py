# src/agents/analyzer_agent.py
"""
Conflict analyzer: turns refuted search paths into short learned clauses.

An analyzer repeatedly takes the newest path from the path pool, extracts a
conflict core by elastic filtering against a path-independent base LP of
the path's region, and publishes the negated core to the clause pool. The
clause is scoped with the region's split guard so it stays sound for the
other workers.

Analyzers run either as threads (`analyzer_loop`) or inline, right after a
solver submits a path (deterministic mode).
"""
import logging
import threading
from collections import Counter
from typing import Dict, List, Optional, Tuple, Union

from src.agents.solver_agent import SearchForest, Subproblem
from src.bounds.deeppoly import BoundsMap, InfeasiblePhases, PhaseMap, propagate_bounds
from src.cdcl.literals import Clause, ClauseOrigin
from src.core.errors import ElasticFilterError, LPStalledError
from src.lp.elastic import ConflictCore, NotInfeasible, elastic_filter, elastic_filter_binary
from src.lp.encoding import Layout, build_elastic_base, path_constraints
from src.lp.simplex import LPProblem
from src.memory.clause_pool import Added, ClausePool
from src.memory.path_pool import Empty, PathPool, UnsatPath

logger = logging.getLogger(__name__)

POLL_INTERVAL = 0.05


class ConflictAnalyzer:
    """
    Elastic-filtering analysis of UnsatPaths.

    Args:
        subproblems: Every region of the run, by id.
        clause_pool: Where learned clauses go.
        elastic_base: "relaxed" or "boxonly" base LP.
        forest: Optional search forest; refutations that yield a core are
            marked on it.
        name: Name used in log messages.
        lp_store: Optional LP dump store.
    """

    def __init__(
        self,
        subproblems: List[Subproblem],
        clause_pool: ClausePool,
        elastic_base: str = "relaxed",
        forest: Optional[SearchForest] = None,
        name: str = "analyzer-0",
        lp_store=None,
    ):
        self.subproblems: Dict[int, Subproblem] = {sub.id: sub for sub in subproblems}
        self.clause_pool = clause_pool
        self.elastic_base = elastic_base
        self.forest = forest
        self.name = name
        self.lp_store = lp_store
        self.cores = Counter()
        self.published = 0
        self.not_infeasible = 0
        self.dropped = 0
        self._roots: Dict[int, Union[BoundsMap, InfeasiblePhases]] = {}
        self._bases: Dict[int, LPProblem] = {}
        self._lock = threading.Lock()

    def _root_bounds(self, region: int) -> Union[BoundsMap, InfeasiblePhases]:
        with self._lock:
            if region not in self._roots:
                problem = self.subproblems[region].problem
                network = problem.network
                self._roots[region] = propagate_bounds(network, problem.input_box, PhaseMap.unknown(network))
            return self._roots[region]

    def _base(self, region: int, root: BoundsMap, path) -> LPProblem:
        problem = self.subproblems[region].problem
        if self.elastic_base != "relaxed":
            return build_elastic_base(problem, root, path, mode=self.elastic_base)
        with self._lock:
            if region not in self._bases:
                self._bases[region] = build_elastic_base(problem, root, mode="relaxed")
            return self._bases[region]

    def extract_core(self, path: UnsatPath) -> Optional[ConflictCore]:
        """
        Conflict core of a path, or None when the path is not LP-refutable
        against the base or the analysis fails.
        """
        literals = [lit for lit in path.literals if not lit.is_guard]
        if not literals:
            return None
        root = self._root_bounds(path.subproblem_id)
        if isinstance(root, InfeasiblePhases):
            return None
        base = self._base(path.subproblem_id, root, literals)
        if self.lp_store is not None:
            self.lp_store.dump(base, f"{self.name}_base_r{path.subproblem_id}_t{path.timestamp}")
        constraints = path_constraints(Layout.for_network(root.network), literals)

        try:
            try:
                result = elastic_filter_binary(base, constraints)
            except LPStalledError as exc:
                logger.warning("%s: binary filtering stalled (%s); retrying round-based", self.name, exc)
                result = elastic_filter(base, constraints)
        except ElasticFilterError as exc:
            logger.warning("%s dropped path %d: %s", self.name, path.timestamp, exc)
            self.dropped += 1
            return None
        except LPStalledError as exc:
            logger.warning("%s dropped path %d: %s", self.name, path.timestamp, exc)
            self.dropped += 1
            return None

        if isinstance(result, NotInfeasible):
            self.not_infeasible += 1
            logger.debug("%s: path %d is not LP-refutable against the base", self.name, path.timestamp)
            return None
        self.cores[result.origin.value] += 1
        return result

    def clause_for(self, path: UnsatPath, core: ConflictCore) -> Clause:
        """Negated core, scoped with the region's guard."""
        negated = [lit.negate() for lit in core.literals]
        region_guard = self.subproblems[path.subproblem_id].guard
        if region_guard is not None:
            negated.append(region_guard.negate())
        return Clause.from_literals(negated, ClauseOrigin.ELASTIC_CORE)

    def process(self, path: UnsatPath, stop_event: Optional[threading.Event] = None) -> Optional[Clause]:
        """Analyze one path and publish its clause; returns the clause if it was added."""
        core = self.extract_core(path)
        if core is None:
            return None
        if stop_event is not None and stop_event.is_set():
            return None
        clause = self.clause_for(path, core)
        if not isinstance(self.clause_pool.publish_clause(clause), Added):
            return None
        self.published += 1
        logger.debug(
            "%s learned %s from a path of %d literals (%s)",
            self.name, clause, len(path), core.origin.value,
        )
        if self.forest is not None and path.node_id is not None:
            self.forest.mark_learned(path.node_id)
        return clause

    def process_latest(self, path_pool: PathPool) -> Optional[Clause]:
        """Inline mode: analyze the newest pending path, if any."""
        path = path_pool.take_latest_path()
        if isinstance(path, Empty):
            return None
        return self.process(path)

    def summary(self) -> Tuple[int, Dict[str, int]]:
        return self.published, dict(self.cores)


def analyzer_loop(
    path_pool: PathPool,
    clause_pool: ClausePool,
    analyzer: ConflictAnalyzer,
    stop_event: threading.Event,
    poll_interval: float = POLL_INTERVAL,
):
    """
    Analyze paths until `stop_event` is set.

    Waits on the path pool with a short timeout so shutdown is noticed
    promptly; a path taken after shutdown is discarded unpublished.
    """
    logger.info("%s started", analyzer.name)
    while not stop_event.is_set():
        path = path_pool.wait_for_path(timeout=poll_interval)
        if isinstance(path, Empty) or stop_event.is_set():
            continue
        try:
            analyzer.process(path, stop_event)
        except Exception:
            logger.exception("%s failed on path %d", analyzer.name, path.timestamp)
            analyzer.dropped += 1
    logger.info(
        "%s stopped: %d clauses published, %d not refutable, %d dropped",
        analyzer.name, analyzer.published, analyzer.not_infeasible, analyzer.dropped,
    )

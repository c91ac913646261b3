# src/agents/orchestrator_agent.py
"""
Central verification orchestrator.

Coordinates the solver and analyzer workers for one verification problem
and turns their outcomes into a single verdict.

Workflow:
- split the input box into regions (subproblems) up to the split threshold
- start m analyzer threads reading refuted paths from the path pool
- start n solver threads pulling subproblems from a shared work queue
- the first validated counterexample wins; it stops every worker and
  closes both pools
- the property holds when every subproblem has been refuted

Deterministic mode runs a single solver on the calling thread and analyzes
each refuted path inline, right after it is submitted.
"""
import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from src.agents.analyzer_agent import ConflictAnalyzer, analyzer_loop
from src.agents.solver_agent import (
    SearchForest,
    Subproblem,
    SubproblemResult,
    SolverWorker,
    WorkerStatus,
    region_boxes,
    split_input,
)
from src.cdcl.literals import ClauseOrigin
from src.core.config import SolverConfig
from src.core.verdict import Holds, SolverStats, Unknown, UnknownReason, Verdict, Violated, verdict_label
from src.database.artifact_store import LPDumpStore
from src.memory.clause_pool import ClausePool
from src.memory.path_pool import PathPool
from src.properties.problem import Counterexample, VerificationProblem

logger = logging.getLogger(__name__)


# ---------------------------------------------------
# Shared verdict
# ---------------------------------------------------

class VerdictCell:
    """First validated counterexample wins and stops the run."""

    def __init__(self, stop_event: threading.Event, clause_pool: ClausePool, path_pool: PathPool):
        self._lock = threading.Lock()
        self._stop_event = stop_event
        self._clause_pool = clause_pool
        self._path_pool = path_pool
        self.counterexample: Optional[Counterexample] = None

    def offer(self, counterexample: Counterexample) -> bool:
        with self._lock:
            if self.counterexample is not None:
                return False
            self.counterexample = counterexample
        self._stop_event.set()
        self._clause_pool.close()
        self._path_pool.close()
        logger.info("counterexample found at x=%s", counterexample.x.tolist())
        return True


@dataclass
class VerificationReport:
    """Everything a run produced."""
    verdict: Verdict
    stats: SolverStats
    forest: SearchForest
    clause_pool: ClausePool
    subproblems: List[Subproblem]
    results: List[SubproblemResult] = field(default_factory=list)

    @property
    def label(self) -> str:
        return verdict_label(self.verdict)

    def stats_payload(self) -> Dict[str, Any]:
        """SolverStats fields plus the verdict and per-origin pool counts."""
        payload: Dict[str, Any] = {"verdict": self.label}
        payload.update(self.stats.model_dump())
        payload["pool_clauses_by_origin"] = self.clause_pool.count_by_origin()
        payload["subproblems"] = {str(r.subproblem_id): r.status.value for r in self.results}
        if isinstance(self.verdict, Violated):
            cex = self.verdict.counterexample
            payload["counterexample"] = {"x": cex.x.tolist(), "y": cex.y.tolist()}
        return payload


# ---------------------------------------------------
# Orchestrator
# ---------------------------------------------------

class VerificationOrchestrator:
    """
    Runs one problem under one configuration.

    Args:
        config: Run configuration; deterministic mode forces one solver.
    """

    def __init__(self, config: SolverConfig):
        self.config = config.effective()

    def _aggregate(self, cell: VerdictCell, results: List[SubproblemResult], expected: int) -> Verdict:
        if cell.counterexample is not None:
            return Violated(cell.counterexample)
        statuses = [r.status for r in results]
        if len(statuses) == expected and all(s is WorkerStatus.REFUTED for s in statuses):
            return Holds()
        if WorkerStatus.STALLED in statuses and WorkerStatus.TIMEOUT not in statuses:
            return Unknown(UnknownReason.STALLED)
        return Unknown(UnknownReason.TIMEOUT)

    def run(self, problem: VerificationProblem) -> VerificationReport:
        config = self.config
        started = time.monotonic()
        deadline = started + config.timeout
        subproblems = split_input(problem, config.input_split_threshold)
        logger.info(
            "verifying %s: %d region(s), %d solver(s), %d analyzer(s), learning %s",
            problem.name, len(subproblems), config.n_solvers, config.m_analyzers,
            "on" if config.clause_learning else "off",
        )

        clause_pool = ClausePool()
        path_pool = PathPool(config.path_pool_capacity)
        forest = SearchForest()
        stop_event = threading.Event()
        cell = VerdictCell(stop_event, clause_pool, path_pool)
        lp_store = LPDumpStore(config.dump_lp_dir) if config.dump_lp_dir is not None else None

        analyzers = [
            ConflictAnalyzer(subproblems, clause_pool, config.elastic_base, forest, f"analyzer-{i}", lp_store)
            for i in range(config.m_analyzers if config.clause_learning else 0)
        ]
        on_path = None
        if config.deterministic and analyzers:
            def on_path():
                analyzers[0].process_latest(path_pool)

        work: "queue.Queue[Subproblem]" = queue.Queue()
        for sub in subproblems:
            work.put(sub)
        results: List[SubproblemResult] = []
        worker_stats: List[SolverStats] = []
        record_lock = threading.Lock()

        def solve_queue(index: int):
            while not stop_event.is_set():
                try:
                    sub = work.get(block=False)
                except queue.Empty:
                    return
                worker = SolverWorker(
                    sub, clause_pool, path_pool, config, forest, stop_event, deadline,
                    name=f"solver-{index}", on_path=on_path, on_counterexample=cell.offer,
                    lp_store=lp_store,
                )
                try:
                    result = worker.run()
                except Exception:
                    logger.exception("solver-%d failed on region %d", index, sub.id)
                    result = SubproblemResult(sub.id, WorkerStatus.STALLED)
                with record_lock:
                    results.append(result)
                    worker_stats.append(worker.stats())

        analyzer_stop = threading.Event()
        analyzer_threads = []
        if not config.deterministic:
            for analyzer in analyzers:
                thread = threading.Thread(
                    target=analyzer_loop,
                    args=(path_pool, clause_pool, analyzer, analyzer_stop),
                    name=analyzer.name,
                    daemon=True,
                )
                thread.start()
                analyzer_threads.append(thread)

        if config.n_solvers <= 1:
            solve_queue(0)
        else:
            solvers = [
                threading.Thread(target=solve_queue, args=(i,), name=f"solver-{i}", daemon=True)
                for i in range(config.n_solvers)
            ]
            for thread in solvers:
                thread.start()
            for thread in solvers:
                thread.join()

        analyzer_stop.set()
        path_pool.close()
        for thread in analyzer_threads:
            thread.join()
        clause_pool.close()

        results.sort(key=lambda r: r.subproblem_id)
        verdict = self._aggregate(cell, results, len(subproblems))
        stats = SolverStats()
        for item in worker_stats:
            stats = stats.merge(item)
        learned = dict(stats.clauses_learned)
        learned[ClauseOrigin.ELASTIC_CORE.value] = sum(a.published for a in analyzers)
        stats = stats.model_copy(update={
            "clauses_learned": learned,
            "wall_time": time.monotonic() - started,
        })
        logger.info(
            "%s: %s after %d states (%d unsat paths, %d pool clauses) in %.3fs",
            problem.name, verdict_label(verdict), stats.states_explored,
            stats.unsat_paths, len(clause_pool), stats.wall_time,
        )
        return VerificationReport(verdict, stats, forest, clause_pool, subproblems, results)


def verify(problem: VerificationProblem, config: Optional[SolverConfig] = None) -> Tuple[Verdict, SolverStats, SearchForest]:
    """
    Decide whether the problem's unsafe region is reachable.

    Returns:
        (verdict, summed statistics, search forest).
    """
    report = VerificationOrchestrator(config or SolverConfig.from_settings()).run(problem)
    return report.verdict, report.stats, report.forest


def verify_report(problem: VerificationProblem, config: Optional[SolverConfig] = None) -> VerificationReport:
    return VerificationOrchestrator(config or SolverConfig.from_settings()).run(problem)


def audit_regions(report: VerificationReport):
    """Region boxes of a finished run, for `audit_pool`."""
    return region_boxes(report.subproblems)

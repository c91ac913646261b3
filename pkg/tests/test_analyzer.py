import threading
import time

from src.agents.analyzer_agent import ConflictAnalyzer, analyzer_loop
from src.agents.solver_agent import NodeStatus, SearchForest, Subproblem
from src.cdcl.literals import active, guard
from src.memory.clause_pool import ClausePool
from src.memory.path_pool import PathPool, UnsatPath
from src.network.generators import conflict_gadget

# gadget hidden layer: 0 is the idle neuron, 1 = ReLU(x), 2 = ReLU(-x)
IDLE, POS, NEG = active(0, 0), active(0, 1), active(0, 2)


def _analyzer(problem, pool, **kwargs):
    return ConflictAnalyzer([Subproblem(0, problem)], pool, **kwargs)


def test_core_is_shorter_than_the_path():
    pool = ClausePool()
    analyzer = _analyzer(conflict_gadget(1), pool)
    clause = analyzer.process(UnsatPath((IDLE, POS, NEG), timestamp=1, subproblem_id=0))
    assert clause is not None
    assert set(clause.literals) == {POS.negate(), NEG.negate()}
    assert len(pool) == 1 and analyzer.published == 1
    assert sum(analyzer.cores.values()) == 1


def test_boxonly_base_finds_the_same_core():
    pool = ClausePool()
    analyzer = _analyzer(conflict_gadget(1), pool, elastic_base="boxonly")
    clause = analyzer.process(UnsatPath((IDLE, POS, NEG), timestamp=1, subproblem_id=0))
    assert set(clause.literals) == {POS.negate(), NEG.negate()}


def test_feasible_path_leaves_pool_unchanged():
    pool = ClausePool()
    analyzer = _analyzer(conflict_gadget(1), pool)
    assert analyzer.process(UnsatPath((POS,), timestamp=1, subproblem_id=0)) is None
    assert len(pool) == 0
    assert analyzer.not_infeasible == 1


def test_guard_only_path_is_skipped():
    pool = ClausePool()
    analyzer = _analyzer(conflict_gadget(1), pool)
    assert analyzer.process(UnsatPath((guard(0),), timestamp=1, subproblem_id=0)) is None


def test_clause_is_scoped_to_its_region():
    problem = conflict_gadget(1)
    subproblems = [Subproblem(0, problem, guard(0)), Subproblem(1, problem, guard(1))]
    pool = ClausePool()
    analyzer = ConflictAnalyzer(subproblems, pool)
    clause = analyzer.process(UnsatPath((POS, NEG), timestamp=1, subproblem_id=1))
    assert clause is not None
    assert guard(1).negate() in clause.literals


def test_marks_the_refuted_node():
    forest = SearchForest()
    node = forest.add(None, "root", NodeStatus.UNSAT_LP, 0)
    analyzer = _analyzer(conflict_gadget(1), ClausePool(), forest=forest)
    analyzer.process(UnsatPath((POS, NEG), timestamp=1, subproblem_id=0, node_id=node.id))
    assert forest.nodes()[0].learned_core
    assert 'fillcolor="red"' in forest.to_dot()


def test_inline_mode_takes_newest_path():
    pool, paths = ClausePool(), PathPool()
    analyzer = _analyzer(conflict_gadget(1), pool)
    assert analyzer.process_latest(paths) is None
    paths.submit_path((POS,), 0)
    paths.submit_path((IDLE, POS, NEG), 0)
    assert analyzer.process_latest(paths) is not None
    assert len(paths) == 1


def test_loop_publishes_then_stops():
    pool, paths = ClausePool(), PathPool()
    analyzer = _analyzer(conflict_gadget(1), pool)
    stop = threading.Event()
    thread = threading.Thread(target=analyzer_loop, args=(paths, pool, analyzer, stop), kwargs={"poll_interval": 0.01})
    thread.start()
    paths.submit_path((IDLE, POS, NEG), 0)
    deadline = time.monotonic() + 10
    while len(pool) == 0 and time.monotonic() < deadline:
        time.sleep(0.01)
    stop.set()
    thread.join(timeout=5)
    assert not thread.is_alive()
    assert len(pool) == 1


def test_shutdown_with_pending_paths_publishes_nothing():
    pool, paths = ClausePool(), PathPool()
    analyzer = _analyzer(conflict_gadget(1), pool)
    for _ in range(3):
        paths.submit_path((IDLE, POS, NEG), 0)
    stop = threading.Event()
    stop.set()
    thread = threading.Thread(target=analyzer_loop, args=(paths, pool, analyzer, stop))
    thread.start()
    thread.join(timeout=5)
    assert not thread.is_alive()
    assert len(pool) == 0 and len(paths) == 3

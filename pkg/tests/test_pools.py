import threading

import pytest

from src.cdcl.literals import Clause, ClauseOrigin, active, inactive
from src.memory import Added, ClausePool, Closed, Duplicate, Empty, PathPool


def _clause(*literals):
    return Clause(literals, ClauseOrigin.ELASTIC_CORE)


a, b = active(0, 0), active(0, 1)


def test_first_submission_gets_timestamp_one():
    pool = PathPool()
    assert pool.submit_path([a]) == 1
    assert pool.submit_path([a, b]) == 2


def test_full_pool_evicts_oldest():
    pool = PathPool(capacity=3)
    for _ in range(4):
        pool.submit_path([a])
    assert pool.timestamps() == (2, 3, 4)
    assert pool.evicted == 1


def test_take_returns_newest():
    pool = PathPool()
    pool.submit_path([a], subproblem_id=3, node_id=7)
    pool.submit_path([b])
    newest = pool.take_latest_path()
    assert newest.timestamp == 2 and newest.literals == (b,)
    older = pool.take_latest_path()
    assert (older.subproblem_id, older.node_id) == (3, 7)
    assert pool.take_latest_path() == Empty()


def test_path_pool_argument_checks():
    with pytest.raises(ValueError):
        PathPool(capacity=0)
    with pytest.raises(ValueError):
        PathPool().submit_path([])


def test_wait_returns_after_close():
    pool = PathPool()
    pool.close()
    assert pool.wait_for_path(timeout=5.0) == Empty()


def test_concurrent_submissions_get_dense_timestamps():
    pool = PathPool(capacity=10_000)
    stamps, lock = [], threading.Lock()

    def submit():
        for i in range(200):
            stamp = pool.submit_path([active(1, i)])
            with lock:
                stamps.append(stamp)

    threads = [threading.Thread(target=submit) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(stamps) == list(range(1, 801))


def test_concurrent_take_sees_each_path_once():
    pool = PathPool(capacity=10_000)
    taken, lock = [], threading.Lock()
    done = threading.Event()

    def consume():
        while True:
            path = pool.wait_for_path(timeout=0.01)
            if isinstance(path, Empty):
                if done.is_set() and len(pool) == 0:
                    return
                continue
            with lock:
                taken.append(path.timestamp)

    consumers = [threading.Thread(target=consume) for _ in range(3)]
    for t in consumers:
        t.start()
    submitted = [pool.submit_path([inactive(0, i % 5)]) for i in range(500)]
    done.set()
    for t in consumers:
        t.join(timeout=10)
    assert sorted(taken) == submitted


def test_publish_twice_is_duplicate():
    pool = ClausePool()
    assert pool.publish_clause(_clause(-a)) == Added(1)
    assert pool.publish_clause(_clause(-a)) == Duplicate(1)
    assert len(pool) == 1


def test_duplicate_by_set_equality():
    pool = ClausePool()
    pool.publish_clause(_clause(a, -b))
    assert pool.publish_clause(Clause((-b, a), ClauseOrigin.PATH_NEGATION)) == Duplicate(1)


def test_published_clause_carries_its_id():
    pool = ClausePool()
    pool.publish_clause(_clause(a))
    pool.publish_clause(_clause(b))
    assert [c.id for c in pool.clauses()] == [1, 2]
    assert pool.audit_dump() == "1 ElasticCore L0_0+\n2 ElasticCore L0_1+\n"


def test_fetch_since():
    pool = ClausePool()
    for i in range(3):
        pool.publish_clause(_clause(active(0, i)))
    assert [c.id for c in pool.fetch_clauses_since(1)] == [2, 3]
    assert pool.fetch_clauses_since(pool.latest_seq) == []
    with pytest.raises(ValueError):
        pool.fetch_clauses_since(-1)


def test_closed_pool_rejects():
    pool = ClausePool()
    pool.close()
    assert pool.publish_clause(_clause(a)) == Closed()
    assert pool.closed


def test_count_by_origin_lists_every_origin():
    pool = ClausePool()
    pool.publish_clause(_clause(a))
    pool.publish_clause(Clause((b,), ClauseOrigin.BOUND_IMPLIED))
    counts = pool.count_by_origin()
    assert counts["ElasticCore"] == 1 and counts["BoundImplied"] == 1
    assert counts["PathNegation"] == 0 and counts["InputSplit"] == 0


def test_concurrent_publish_and_fetch():
    pool = ClausePool()
    seen = []
    stop = threading.Event()

    def publish(offset):
        for i in range(150):
            pool.publish_clause(_clause(active(offset, i)))

    def fetch():
        cursor = 0
        while True:
            final = stop.is_set()
            for clause in pool.fetch_clauses_since(cursor):
                seen.append(clause.id)
                cursor = clause.id
            if final:
                return

    reader = threading.Thread(target=fetch)
    reader.start()
    writers = [threading.Thread(target=publish, args=(k,)) for k in range(4)]
    for t in writers:
        t.start()
    for t in writers:
        t.join()
    stop.set()
    reader.join(timeout=10)
    assert seen == list(range(1, 601))
    assert sorted(c.id for c in pool.clauses()) == list(range(1, 601))


PRODUCERS = CONSUMERS = 8
PER_PRODUCER = 6_250


def _run(producers, consumers):
    threads = [threading.Thread(target=fn) for fn in producers + consumers]
    for t in threads:
        t.start()
    return threads


@pytest.mark.slow
def test_path_pool_stress_loses_and_repeats_nothing():
    pool = PathPool(capacity=PRODUCERS * PER_PRODUCER)
    submitted = [[] for _ in range(PRODUCERS)]
    taken = [[] for _ in range(CONSUMERS)]
    done = threading.Event()

    def producer(p):
        def run():
            for i in range(PER_PRODUCER):
                submitted[p].append(pool.submit_path([active(p, i)], subproblem_id=p, node_id=i))
        return run

    def consumer(c):
        def run():
            while True:
                path = pool.wait_for_path(timeout=0.01)
                if isinstance(path, Empty):
                    if done.is_set() and len(pool) == 0:
                        return
                    continue
                taken[c].append(path)
        return run

    threads = _run([producer(p) for p in range(PRODUCERS)], [consumer(c) for c in range(CONSUMERS)])
    for t in threads[:PRODUCERS]:
        t.join()
    done.set()
    for t in threads[PRODUCERS:]:
        t.join(timeout=60)

    assert pool.evicted == 0
    for stamps in submitted:
        assert stamps == sorted(stamps)
    paths = [path for batch in taken for path in batch]
    assert sorted(p.timestamp for p in paths) == list(range(1, PRODUCERS * PER_PRODUCER + 1))
    for path in paths:
        assert path.literals == (active(path.subproblem_id, path.node_id),)
        assert submitted[path.subproblem_id][path.node_id] == path.timestamp


@pytest.mark.slow
def test_clause_pool_stress_keeps_one_ordered_history():
    pool = ClausePool()
    outcomes = [[] for _ in range(PRODUCERS)]
    seen = [[] for _ in range(CONSUMERS)]
    stop = threading.Event()

    def producer(p):
        # producers 2k and 2k + 1 publish the same clauses
        def run():
            for i in range(PER_PRODUCER):
                outcomes[p].append((i, pool.publish_clause(_clause(active(p // 2, i)))))
        return run

    def consumer(c):
        def run():
            cursor = 0
            while True:
                final = stop.is_set()
                for clause in pool.fetch_clauses_since(cursor):
                    seen[c].append(clause)
                    cursor = clause.id
                if final:
                    return
        return run

    threads = _run([producer(p) for p in range(PRODUCERS)], [consumer(c) for c in range(CONSUMERS)])
    for t in threads[:PRODUCERS]:
        t.join()
    stop.set()
    for t in threads[PRODUCERS:]:
        t.join(timeout=60)

    unique = PRODUCERS // 2 * PER_PRODUCER
    assert len(pool) == unique
    by_id = {clause.id: clause for clause in pool.clauses()}
    added = [r for results in outcomes for _, r in results if isinstance(r, Added)]
    duplicates = [r for results in outcomes for _, r in results if isinstance(r, Duplicate)]
    assert len(added) == len(duplicates) == unique
    assert sorted(r.seq for r in added) == list(range(1, unique + 1))
    for p, results in enumerate(outcomes):
        for i, result in results:
            assert by_id[result.seq] == _clause(active(p // 2, i))
    for history in seen:
        assert [clause.id for clause in history] == list(range(1, unique + 1))

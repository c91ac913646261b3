import numpy as np
import pytest

from src.cdcl.literals import active
from src.core.errors import ElasticFilterError
from src.lp.elastic import CoreOrigin, NotInfeasible, elastic_filter, elastic_filter_binary, full_path_core
from src.lp.simplex import LPProblem
from tests.oracles import minimal_infeasible_subsets, scipy_feasible, with_rows


def _base():
    lp = LPProblem()
    x = lp.add_var("x", -np.inf, np.inf)
    lp.add_le({x: 1.0}, 0.0)
    return lp


A, B = active(0, 0), active(0, 1)


@pytest.mark.parametrize("variant", [elastic_filter, elastic_filter_binary])
def test_tightest_constraint_is_the_core(variant):
    path = [(A, [({0: -1.0}, -2.0)]), (B, [({0: -1.0}, -1.0)])]
    core = variant(_base(), path)
    assert core.literals == (A,)
    assert core.indices == (0,)


def test_core_origins():
    path = [(A, [({0: -1.0}, -2.0)])]
    assert elastic_filter(_base(), path).origin is CoreOrigin.ELASTIC_FILTER
    assert elastic_filter_binary(_base(), path).origin is CoreOrigin.BINARY_ELASTIC
    assert full_path_core(path).origin is CoreOrigin.FULL_PATH


def test_feasible_path():
    path = [(A, [({0: -1.0}, 1.0)])]
    assert isinstance(elastic_filter_binary(_base(), path), NotInfeasible)
    with pytest.raises(ElasticFilterError, match="feasible together"):
        elastic_filter(_base(), path)


def test_infeasible_base_is_an_error():
    base = _base()
    base.add_le({0: -1.0}, -1.0)
    path = [(A, [({0: -1.0}, -2.0)])]
    for variant in (elastic_filter, elastic_filter_binary):
        with pytest.raises(ElasticFilterError, match="infeasible on its own"):
            variant(base, path)


def test_empty_path_is_an_error():
    with pytest.raises(ElasticFilterError):
        elastic_filter(_base(), [])


def test_pair_needed_together():
    # x >= 1 and y >= 1 only clash through x + y <= 1
    base = LPProblem()
    x = base.add_var("x", -5.0, 5.0)
    y = base.add_var("y", -5.0, 5.0)
    base.add_le({x: 1.0, y: 1.0}, 1.0)
    path = [
        (active(0, 0), [({x: -1.0}, -1.0)]),
        (active(0, 1), [({x: 1.0}, 4.0)]),
        (active(0, 2), [({y: -1.0}, -1.0)]),
    ]
    assert set(elastic_filter(base, path).indices) == {0, 2}
    assert {0, 2} <= set(elastic_filter_binary(base, path).indices)


def _random_instance(rng, n=3, size=5):
    base = LPProblem()
    for i in range(n):
        base.add_var(f"v{i}", -1.0, 1.0)
    center = rng.uniform(-0.5, 0.5, size=n)
    for _ in range(3):
        a = rng.normal(size=n)
        base.add_le(dict(enumerate(a)), float(a @ center) + rng.uniform(0.0, 0.5))
    path = []
    for i in range(size):
        a = rng.normal(size=n)
        path.append((active(0, i), [(dict(enumerate(a)), float(a @ center) - rng.uniform(-0.3, 0.6))]))
    return base, path


def _check_random_instances(rng, count):
    outcomes = {"feasible": 0, "infeasible": 0}
    for _ in range(count):
        base, path = _random_instance(rng, n=int(rng.integers(2, 9)), size=int(rng.integers(1, 7)))
        rows = [row for _, group in path for row in group]
        if scipy_feasible(with_rows(base, rows)):
            assert isinstance(elastic_filter_binary(base, path), NotInfeasible)
            with pytest.raises(ElasticFilterError):
                elastic_filter(base, path)
            outcomes["feasible"] += 1
            continue
        smallest = len(minimal_infeasible_subsets(base, path)[0])
        for variant in (elastic_filter, elastic_filter_binary):
            core = variant(base, path)
            assert not isinstance(core, NotInfeasible)
            assert not scipy_feasible(with_rows(base, [row for i in core.indices for row in path[i][1]]))
            assert smallest <= len(core) <= len(path)
            assert set(core.literals) <= {lit for lit, _ in path}
        outcomes["infeasible"] += 1
    return outcomes


def test_random_cores_are_infeasible_and_near_minimal(rng):
    outcomes = _check_random_instances(rng, 30)
    assert outcomes["infeasible"] > 0


@pytest.mark.slow
def test_two_hundred_random_path_systems(rng):
    outcomes = _check_random_instances(rng, 200)
    assert outcomes["feasible"] > 0 and outcomes["infeasible"] > 0

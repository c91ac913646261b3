import numpy as np
import pytest

from src.agents.orchestrator_agent import audit_regions, verify, verify_report
from src.core.config import SolverConfig
from src.core.verdict import Holds, Unknown, UnknownReason, Violated
from src.memory.clause_pool import AuditVerdict, audit_pool
from src.network.generators import random_suite
from src.network.model import Network
from src.properties.problem import Box, LinearConstraint, Relation, Valid, VerificationProblem, check_counterexample
from tests.oracles import pattern_witness


def _identity_problem(relation, bound):
    net = Network.from_arrays([[[1.0]], [[1.0]]], [[0.0], [0.0]])
    return VerificationProblem(
        net, Box(np.array([0.0]), np.array([1.0])), (LinearConstraint([1.0], relation, bound),)
    )


def test_bounds_refute_the_root(deterministic_config):
    verdict, stats, forest = verify(_identity_problem(Relation.GE, 5.0), deterministic_config)
    assert isinstance(verdict, Holds)
    assert stats.states_explored == 1
    assert stats.unsat_paths == 1
    assert len(forest) == 1


def test_center_counterexample_found_at_root(deterministic_config):
    verdict, stats, _ = verify(_identity_problem(Relation.GE, -1.0), deterministic_config)
    assert isinstance(verdict, Violated)
    assert stats.states_explored == 1
    assert verdict.counterexample.y[0] >= -1.0


def test_depth_one_holds(depth_one, deterministic_config):
    verdict, stats, _ = verify(depth_one, deterministic_config)
    assert isinstance(verdict, Holds)
    assert (stats.states_explored, stats.unsat_paths) == (3, 2)


def test_elastic_clauses_are_counted(gadget, deterministic_config):
    report = verify_report(gadget(1), deterministic_config)
    assert report.stats.clauses_learned["ElasticCore"] == report.clause_pool.count_by_origin()["ElasticCore"]
    assert report.stats.clauses_learned["ElasticCore"] > 0


def test_deterministic_runs_repeat(small_problem, deterministic_config):
    config = deterministic_config.model_copy(update={"input_split_threshold": 2})
    first = verify_report(small_problem, config)
    second = verify_report(small_problem, config)
    assert first.label == second.label
    assert first.stats.model_dump(exclude={"wall_time"}) == second.stats.model_dump(exclude={"wall_time"})
    assert first.forest.to_dot() == second.forest.to_dot()


def test_deterministic_mode_forces_one_solver():
    config = SolverConfig(n_solvers=4, deterministic=True)
    assert config.effective().n_solvers == 1


def test_timeout_verdict(small_problem):
    config = SolverConfig(n_solvers=1, input_split_threshold=0, timeout=1e-9)
    verdict, _, _ = verify(small_problem, config)
    assert verdict == Unknown(UnknownReason.TIMEOUT)


def test_stats_payload(depth_one, deterministic_config):
    payload = verify_report(depth_one, deterministic_config).stats_payload()
    assert payload["verdict"] == "HOLDS"
    assert payload["states_explored"] == 3
    assert set(payload["pool_clauses_by_origin"]) == {"PathNegation", "BoundImplied", "ElasticCore", "InputSplit"}
    assert payload["subproblems"] == {"0": "Refuted"}


def test_lp_dumps_are_written(depth_one, deterministic_config, tmp_path):
    config = deterministic_config.model_copy(update={"dump_lp_dir": tmp_path / "lps"})
    verify(depth_one, config)
    dumps = sorted((tmp_path / "lps").glob("*.lp"))
    assert dumps
    assert dumps[0].read_text().startswith("\\ ")


def _check_against_oracle(problem, verdict):
    witness = pattern_witness(problem)
    if witness is None:
        assert isinstance(verdict, Holds), problem.name
    else:
        assert isinstance(verdict, Violated), problem.name
        assert isinstance(check_counterexample(problem, verdict.counterexample.x), Valid)


def test_verdicts_match_pattern_oracle(deterministic_config):
    for problem in random_suite(7, 3):
        verdict, _, _ = verify(problem, deterministic_config)
        _check_against_oracle(problem, verdict)


@pytest.mark.slow
@pytest.mark.parametrize("heuristic", ["widest", "earliest"])
def test_oracle_suite(deterministic_config, heuristic):
    config = deterministic_config.model_copy(update={"branch_heuristic": heuristic, "input_split_threshold": 1})
    for problem in random_suite(0, 40):
        verdict, _, _ = verify(problem, config)
        _check_against_oracle(problem, verdict)


def test_parallel_run_agrees_with_deterministic(small_problem, deterministic_config):
    parallel = SolverConfig(n_solvers=4, m_analyzers=2, input_split_threshold=2, timeout=120)
    expected, _, _ = verify(small_problem, deterministic_config)
    verdict, stats, _ = verify(small_problem, parallel)
    assert type(verdict) is type(expected)
    assert stats.unsat_paths <= stats.states_explored


@pytest.mark.slow
def test_parallel_pool_audit_is_clean(gadget):
    config = SolverConfig(n_solvers=4, m_analyzers=2, input_split_threshold=2, timeout=300)
    problems = [gadget(k) for k in (1, 2, 3)] + random_suite(0, 40)
    for problem in problems:
        report = verify_report(problem, config)
        verdicts = audit_pool(problem, report.clause_pool, audit_regions(report))
        assert verdicts[AuditVerdict.UNSOUND] == [], problem.name


def test_audit_of_a_deterministic_run(gadget, deterministic_config):
    problem = gadget(2)
    report = verify_report(problem, deterministic_config.model_copy(update={"input_split_threshold": 1}))
    verdicts = audit_pool(problem, report.clause_pool, audit_regions(report))
    assert verdicts[AuditVerdict.UNSOUND] == []
    assert sum(len(v) for v in verdicts.values()) == len(report.clause_pool)

import pytest
from pydantic import ValidationError

from src.core.config import PGDConfig, SolverConfig
from src.core.settings import get_settings, reset_settings


def test_defaults():
    config = SolverConfig.from_settings()
    assert (config.n_solvers, config.m_analyzers, config.input_split_threshold) == (2, 1, 2)
    assert config.timeout == 1800.0
    assert config.clause_learning and not config.deterministic


def test_environment_feeds_defaults(monkeypatch):
    monkeypatch.setenv("CDCLV_N_SOLVERS", "6")
    monkeypatch.setenv("CDCLV_TIMEOUT", "30")
    monkeypatch.setenv("CDCLV_DUMP_LP_DIR", "")
    reset_settings()
    config = SolverConfig.from_settings()
    assert config.n_solvers == 6 and config.timeout == 30.0
    assert config.dump_lp_dir is None


def test_settings_are_cached(monkeypatch):
    first = get_settings()
    monkeypatch.setenv("CDCLV_SEED", "9")
    assert get_settings() is first
    reset_settings()
    assert get_settings().seed == 9


def test_overrides_skip_none():
    config = SolverConfig.from_settings(n_solvers=None, m_analyzers=3, branch_heuristic="earliest")
    assert config.n_solvers == 2 and config.m_analyzers == 3
    assert config.branch_heuristic == "earliest"


@pytest.mark.parametrize(
    "field, value",
    [("n_solvers", 0), ("m_analyzers", -1), ("timeout", 0), ("branch_heuristic", "random"), ("elastic_base", "full")],
)
def test_invalid_values_rejected(field, value):
    with pytest.raises(ValidationError):
        SolverConfig(**{field: value})


def test_invalid_environment_rejected(monkeypatch):
    monkeypatch.setenv("CDCLV_N_SOLVERS", "zero")
    reset_settings()
    with pytest.raises(ValidationError):
        get_settings()


def test_ablated_turns_learning_off():
    config = SolverConfig(m_analyzers=2)
    ablated = config.ablated()
    assert not ablated.clause_learning and ablated.m_analyzers == 2
    assert config.clause_learning


def test_pgd_bounds():
    with pytest.raises(ValidationError):
        PGDConfig(restarts=0)
    with pytest.raises(ValidationError):
        PGDConfig(step_size=0)

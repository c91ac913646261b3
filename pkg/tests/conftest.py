import os

import numpy as np
import pytest

from src.core.config import SolverConfig
from src.core.settings import reset_settings
from src.network.generators import conflict_gadget, depth_one_problem, random_problem
from src.network.nnet import write_nnet
from src.properties.parser import write_property


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Keep CDCLV_* variables of the calling shell out of every test."""
    for key in list(os.environ):
        if key.startswith("CDCLV_"):
            monkeypatch.delenv(key, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def deterministic_config():
    return SolverConfig(
        n_solvers=1,
        m_analyzers=1,
        input_split_threshold=0,
        deterministic=True,
        timeout=120.0,
        branch_heuristic="earliest",
    )


@pytest.fixture
def depth_one():
    return depth_one_problem()


@pytest.fixture
def gadget():
    return conflict_gadget


@pytest.fixture
def small_problem(rng):
    return random_problem(rng, sizes=(2, 4, 4, 2))


@pytest.fixture
def write_task(tmp_path):
    """Write a problem as an NNet file plus a property file; returns both paths."""

    def write(problem, stem=None):
        stem = stem or problem.name
        net = write_nnet(problem.network, tmp_path / f"{stem}.nnet")
        prop = write_property(problem, tmp_path / f"{stem}.prop")
        return net, prop

    return write

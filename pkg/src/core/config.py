#config.py
"""
Validated run configuration for a verification call.

`SolverConfig` takes its defaults from the environment-backed `Settings`;
command-line flags override individual fields. Field constraints reject an
invalid configuration before any worker starts.
"""
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.core.settings import Settings, get_settings

BranchHeuristic = Literal["widest", "earliest"]
ElasticBase = Literal["relaxed", "boxonly"]


class PGDConfig(BaseModel):
    """
    Projected sign-gradient ascent parameters.

    `step_size` is a fraction of each box dimension's width.
    """
    model_config = ConfigDict(frozen=True)

    steps: int = Field(default=50, ge=0)
    step_size: float = Field(default=0.05, gt=0)
    restarts: int = Field(default=5, ge=1)


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_solvers: int = Field(default=2, ge=1)
    m_analyzers: int = Field(default=1, ge=0)
    input_split_threshold: int = Field(default=2, ge=0)
    timeout: float = Field(default=1800.0, gt=0)
    seed: int = 0
    deterministic: bool = False
    pgd: PGDConfig = Field(default_factory=PGDConfig)
    branch_heuristic: BranchHeuristic = "widest"
    elastic_base: ElasticBase = "relaxed"
    clause_learning: bool = True
    path_pool_capacity: int = Field(default=64, ge=1)
    dump_lp_dir: Optional[Path] = None

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides) -> "SolverConfig":
        """
        Build a config from `Settings`, then apply keyword overrides.

        Overrides set to None are ignored so CLI flags can be passed through
        unconditionally.
        """
        settings = settings or get_settings()
        values = {
            "n_solvers": settings.n_solvers,
            "m_analyzers": settings.m_analyzers,
            "input_split_threshold": settings.split_threshold,
            "timeout": settings.timeout,
            "seed": settings.seed,
            "path_pool_capacity": settings.path_pool_capacity,
            "dump_lp_dir": settings.dump_lp_dir,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def effective(self) -> "SolverConfig":
        """Deterministic runs use one solver with inline analysis."""
        if self.deterministic and self.n_solvers != 1:
            return self.model_copy(update={"n_solvers": 1})
        return self

    def ablated(self) -> "SolverConfig":
        return self.model_copy(update={"clause_learning": False})

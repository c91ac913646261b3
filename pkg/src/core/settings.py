#settings.py
"""
Centralized runtime settings used across the verifier.

Values come from the process environment, optionally seeded from a `.env`
file, so every entry point (CLI, tests, batch runs) shares one validated
settings object instead of re-reading variables ad hoc.
"""
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()

_settings = None


class Settings(BaseModel):
    """
    Environment-backed defaults for solver and CLI configuration.
    """
    log_level: str = "INFO"
    n_solvers: int = Field(default=2, ge=1)
    m_analyzers: int = Field(default=1, ge=0)
    split_threshold: int = Field(default=2, ge=0)
    timeout: float = Field(default=1800.0, gt=0)
    seed: int = 0
    path_pool_capacity: int = Field(default=64, ge=1)
    dump_lp_dir: Optional[Path] = None

    @classmethod
    def from_env(cls) -> "Settings":
        """
        Build settings from `CDCLV_*` environment variables.

        Unset variables fall back to the model defaults.
        """
        env = {
            "log_level": os.getenv("CDCLV_LOG_LEVEL"),
            "n_solvers": os.getenv("CDCLV_N_SOLVERS"),
            "m_analyzers": os.getenv("CDCLV_M_ANALYZERS"),
            "split_threshold": os.getenv("CDCLV_SPLIT_THRESHOLD"),
            "timeout": os.getenv("CDCLV_TIMEOUT"),
            "seed": os.getenv("CDCLV_SEED"),
            "path_pool_capacity": os.getenv("CDCLV_PATH_POOL_CAPACITY"),
            "dump_lp_dir": os.getenv("CDCLV_DUMP_LP_DIR"),
        }
        return cls(**{k: v for k, v in env.items() if v not in (None, "")})


def get_settings() -> Settings:
    """
    Return the shared settings instance.

    The first call reads the environment. Later calls reuse it.

    Returns:
        Settings instance.
    """
    global _settings

    if _settings is None:
        _settings = Settings.from_env()

    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment."""
    global _settings
    _settings = None

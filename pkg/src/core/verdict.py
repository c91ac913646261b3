"""
Verification outcomes and run statistics.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Union

from pydantic import BaseModel, Field, model_validator

from src.properties.problem import Counterexample


class UnknownReason(str, Enum):
    TIMEOUT = "Timeout"
    STALLED = "Stalled"


@dataclass(frozen=True)
class Holds:
    pass


@dataclass(frozen=True)
class Violated:
    counterexample: Counterexample


@dataclass(frozen=True)
class Unknown:
    reason: UnknownReason


Verdict = Union[Holds, Violated, Unknown]


def verdict_label(verdict: Verdict) -> str:
    """HOLDS, VIOLATED, TIMEOUT or STALLED."""
    if isinstance(verdict, Holds):
        return "HOLDS"
    if isinstance(verdict, Violated):
        return "VIOLATED"
    return verdict.reason.value.upper()


class SolverStats(BaseModel):
    """Counters summed over every worker of a run."""

    states_explored: int = Field(default=0, ge=0)
    unsat_paths: int = Field(default=0, ge=0)
    clauses_learned: Dict[str, int] = Field(default_factory=dict)
    clauses_fetched: int = Field(default=0, ge=0)
    lp_calls: int = Field(default=0, ge=0)
    paths_submitted: int = Field(default=0, ge=0)
    wall_time: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _unsat_within_states(self):
        if self.unsat_paths > self.states_explored:
            raise ValueError("unsat_paths cannot exceed states_explored")
        return self

    @property
    def total_learned(self) -> int:
        return sum(self.clauses_learned.values())

    def merge(self, other: "SolverStats") -> "SolverStats":
        learned = dict(self.clauses_learned)
        for origin, count in other.clauses_learned.items():
            learned[origin] = learned.get(origin, 0) + count
        return SolverStats(
            states_explored=self.states_explored + other.states_explored,
            unsat_paths=self.unsat_paths + other.unsat_paths,
            clauses_learned=learned,
            clauses_fetched=self.clauses_fetched + other.clauses_fetched,
            lp_calls=self.lp_calls + other.lp_calls,
            paths_submitted=self.paths_submitted + other.paths_submitted,
            wall_time=max(self.wall_time, other.wall_time),
        )

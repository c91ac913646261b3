"""
Activation literals and clauses.

A literal fixes the phase of one hidden neuron (or, for split guards, states
that the search is inside a given input region). A clause is a disjunction
of literals; the set of literals is what identifies it.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import FrozenSet, Iterable, Optional, Tuple

from src.core.errors import ClauseError
from src.network.model import GUARD_LAYER, NeuronId, Phase


class Literal(tuple):
    """(neuron, phase) with phase Active or Inactive."""

    __slots__ = ()

    def __new__(cls, neuron: NeuronId, phase: Phase):
        phase = Phase(phase)
        if phase is Phase.UNKNOWN:
            raise ClauseError("a literal needs a definite phase")
        return super().__new__(cls, (NeuronId(*neuron), phase))

    @property
    def neuron(self) -> NeuronId:
        return self[0]

    @property
    def phase(self) -> Phase:
        return self[1]

    @property
    def is_guard(self) -> bool:
        return self.neuron.is_guard

    def negate(self) -> "Literal":
        return Literal(self.neuron, self.phase.opposite())

    def __neg__(self) -> "Literal":
        return self.negate()

    def __repr__(self) -> str:
        return f"Literal({self})"

    def __str__(self) -> str:
        return f"{self.neuron}{'+' if self.phase is Phase.ACTIVE else '-'}"


def active(layer: int, index: int) -> Literal:
    return Literal(NeuronId(layer, index), Phase.ACTIVE)


def inactive(layer: int, index: int) -> Literal:
    return Literal(NeuronId(layer, index), Phase.INACTIVE)


def guard(region: int) -> Literal:
    """Literal that holds inside input region `region`."""
    return Literal(NeuronId(GUARD_LAYER, region), Phase.ACTIVE)


class ClauseOrigin(str, Enum):
    PATH_NEGATION = "PathNegation"
    BOUND_IMPLIED = "BoundImplied"
    ELASTIC_CORE = "ElasticCore"
    INPUT_SPLIT = "InputSplit"


@dataclass(frozen=True)
class Clause:
    """
    Disjunction of literals.

    `id` is the pool sequence number once published, otherwise None.
    Equality and hashing use the literal set only.
    """
    literals: Tuple[Literal, ...] = field(compare=False)
    origin: ClauseOrigin = field(compare=False)
    id: Optional[int] = field(default=None, compare=False)
    key: FrozenSet[Literal] = field(init=False, repr=False, compare=True)

    def __post_init__(self):
        literals = tuple(Literal(*lit) for lit in self.literals)
        if not literals:
            raise ClauseError("a clause needs at least one literal")
        key = frozenset(literals)
        if len(key) != len(literals):
            raise ClauseError(f"duplicate literal in clause {_render(literals)}")
        neurons = {lit.neuron for lit in literals}
        if len(neurons) != len(literals):
            raise ClauseError(f"complementary literals in clause {_render(literals)}")
        object.__setattr__(self, "literals", literals)
        object.__setattr__(self, "origin", ClauseOrigin(self.origin))
        object.__setattr__(self, "key", key)

    @classmethod
    def from_literals(cls, literals: Iterable[Literal], origin: ClauseOrigin) -> "Clause":
        """Build a clause, dropping repeated literals and keeping first-seen order."""
        seen = []
        for lit in literals:
            if lit not in seen:
                seen.append(lit)
        return cls(tuple(seen), origin)

    def with_id(self, clause_id: int) -> "Clause":
        return replace(self, id=clause_id)

    def guards(self) -> Tuple[Literal, ...]:
        return tuple(lit for lit in self.literals if lit.is_guard)

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self):
        return iter(self.literals)

    def __str__(self) -> str:
        return _render(self.literals)


def _render(literals) -> str:
    return "{" + ", ".join(str(lit) for lit in literals) + "}"

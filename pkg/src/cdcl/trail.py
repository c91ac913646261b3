"""
Leveled assignment stack of activation literals.

Level 0 holds facts (input-split guards, unit clauses); every decision opens
a new level and everything propagated after it lives on that level until the
solver backtracks past it.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional

from src.cdcl.literals import Literal
from src.core.errors import TrailError
from src.network.model import NeuronId, Phase


class ReasonKind(str, Enum):
    DECISION = "Decision"
    PROPAGATED = "Propagated"
    THEORY_IMPLIED = "TheoryImplied"


@dataclass(frozen=True)
class Reason:
    kind: ReasonKind
    clause_id: Optional[int] = None

    def __str__(self) -> str:
        if self.kind is ReasonKind.PROPAGATED:
            return f"Propagated({self.clause_id})"
        return self.kind.value


DECISION = Reason(ReasonKind.DECISION)
THEORY_IMPLIED = Reason(ReasonKind.THEORY_IMPLIED)


def propagated(clause_id: Optional[int]) -> Reason:
    return Reason(ReasonKind.PROPAGATED, clause_id)


@dataclass(frozen=True)
class TrailEntry:
    literal: Literal
    level: int
    reason: Reason


class Trail:
    """Assignment stack with per-neuron lookup."""

    def __init__(self):
        self._entries: List[TrailEntry] = []
        self._index: Dict[NeuronId, int] = {}
        self._level_starts: List[int] = []

    # ---------------------------------------------------
    # Queries
    # ---------------------------------------------------

    @property
    def current_level(self) -> int:
        return len(self._level_starts)

    @property
    def entries(self) -> List[TrailEntry]:
        return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[TrailEntry]:
        return iter(self._entries)

    def __getitem__(self, position: int) -> TrailEntry:
        return self._entries[position]

    def is_assigned(self, neuron: NeuronId) -> bool:
        return neuron in self._index

    def phase_of(self, neuron: NeuronId) -> Phase:
        position = self._index.get(neuron)
        return Phase.UNKNOWN if position is None else self._entries[position].literal.phase

    def value_of(self, literal: Literal) -> Optional[bool]:
        """True/False if the literal's neuron is assigned, None otherwise."""
        phase = self.phase_of(literal.neuron)
        if phase is Phase.UNKNOWN:
            return None
        return phase is literal.phase

    def level_of(self, literal: Literal) -> int:
        position = self._index.get(literal.neuron)
        if position is None:
            raise TrailError(f"{literal.neuron} is not assigned")
        return self._entries[position].level

    def literals(self) -> List[Literal]:
        return [entry.literal for entry in self._entries]

    def decisions(self) -> List[Literal]:
        """Decision literals in level order."""
        return [self._entries[start].literal for start in self._level_starts]

    def last(self) -> Optional[TrailEntry]:
        return self._entries[-1] if self._entries else None

    # ---------------------------------------------------
    # Updates
    # ---------------------------------------------------

    def _push(self, literal: Literal, reason: Reason):
        if literal.neuron in self._index:
            raise TrailError(f"{literal.neuron} is already assigned")
        self._index[literal.neuron] = len(self._entries)
        self._entries.append(TrailEntry(literal, self.current_level, reason))

    def decide(self, literal: Literal):
        """Open a new decision level with `literal`."""
        if literal.neuron in self._index:
            raise TrailError(f"cannot decide {literal}: {literal.neuron} is already assigned")
        self._level_starts.append(len(self._entries))
        self._push(literal, DECISION)

    def assign(self, literal: Literal, reason: Reason):
        """Append an implied literal at the current level."""
        if reason.kind is ReasonKind.DECISION:
            raise TrailError("use decide() for decisions")
        self._push(literal, reason)

    def backtrack(self, level: int):
        """Drop every entry above `level`."""
        if level < 0 or level >= self.current_level:
            raise TrailError(f"cannot backtrack to level {level} from level {self.current_level}")
        cut = self._level_starts[level]
        for entry in self._entries[cut:]:
            del self._index[entry.literal.neuron]
        del self._entries[cut:]
        del self._level_starts[level:]

    def check_invariants(self):
        """Raise TrailError if the stack is inconsistent."""
        seen = set()
        previous = 0
        for position, entry in enumerate(self._entries):
            if entry.literal.neuron in seen:
                raise TrailError(f"{entry.literal.neuron} assigned twice")
            seen.add(entry.literal.neuron)
            if entry.level < previous:
                raise TrailError("levels decrease along the trail")
            previous = entry.level
            is_start = entry.level > 0 and self._level_starts[entry.level - 1] == position
            if (entry.reason.kind is ReasonKind.DECISION) != is_start:
                raise TrailError(f"decision placement broken at position {position}")

    def __str__(self) -> str:
        return " ".join(f"{e.literal}@{e.level}" for e in self._entries)

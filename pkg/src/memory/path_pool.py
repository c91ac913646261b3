#path_pool.py
"""
Bounded queue of refuted search paths waiting for conflict analysis.

Analyzers only care about the newest path, so `take_latest_path` pops from
the young end and a full pool drops its oldest entry.
"""
import logging
import threading
from collections import deque
from dataclasses import dataclass
from typing import Deque, Optional, Sequence, Tuple, Union

from src.cdcl.literals import Literal

logger = logging.getLogger(__name__)

DEFAULT_CAPACITY = 64


@dataclass(frozen=True)
class UnsatPath:
    literals: Tuple[Literal, ...]
    timestamp: int
    subproblem_id: int
    node_id: Optional[int] = None

    def __len__(self) -> int:
        return len(self.literals)


@dataclass(frozen=True)
class Empty:
    pass


class PathPool:
    """Thread-safe LIFO of UnsatPath with oldest-first eviction."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("path pool capacity must be >= 1")
        self.capacity = capacity
        self._paths: Deque[UnsatPath] = deque()
        self._next_timestamp = 1
        self._condition = threading.Condition()
        self._closed = False
        self.evicted = 0

    def submit_path(
        self,
        literals: Sequence[Literal],
        subproblem_id: int = 0,
        node_id: Optional[int] = None,
    ) -> int:
        """Store a path and return its timestamp."""
        if not literals:
            raise ValueError("cannot submit an empty path")
        with self._condition:
            timestamp = self._next_timestamp
            self._next_timestamp += 1
            self._paths.append(UnsatPath(tuple(literals), timestamp, subproblem_id, node_id))
            if len(self._paths) > self.capacity:
                self._paths.popleft()
                self.evicted += 1
            self._condition.notify()
        return timestamp

    def take_latest_path(self) -> Union[UnsatPath, Empty]:
        with self._condition:
            return self._paths.pop() if self._paths else Empty()

    def wait_for_path(self, timeout: Optional[float] = None) -> Union[UnsatPath, Empty]:
        """Like take_latest_path, but sleep up to `timeout` seconds for a submission."""
        with self._condition:
            self._condition.wait_for(lambda: self._paths or self._closed, timeout=timeout)
            return self._paths.pop() if self._paths else Empty()

    def close(self):
        """Wake every waiter; later waits return immediately."""
        with self._condition:
            self._closed = True
            self._condition.notify_all()

    def clear(self) -> int:
        with self._condition:
            dropped = len(self._paths)
            self._paths.clear()
            return dropped

    def timestamps(self) -> Tuple[int, ...]:
        with self._condition:
            return tuple(path.timestamp for path in self._paths)

    def __len__(self) -> int:
        with self._condition:
            return len(self._paths)

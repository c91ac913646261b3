"""
File artifacts written next to a verification run.

Stores:
- stats JSON (SolverStats fields, verdict, per-origin clause counts)
- search forest as Graphviz DOT
- clause-pool audit dump
- LP dumps, one CPLEX-LP-style file per solved LP
"""
import json
import logging
import threading
from pathlib import Path
from typing import Any, Dict, Union

from src.lp.simplex import LPProblem

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_stats_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    """Write the stats payload with sorted keys so repeated runs diff cleanly."""
    path = _prepare(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("stats written to %s", path)
    return path


def write_dot(path: PathLike, forest, title: str = "search") -> Path:
    path = _prepare(path)
    path.write_text(forest.to_dot(title), encoding="utf-8")
    logger.info("search forest (%d nodes) written to %s", len(forest), path)
    return path


def write_audit(path: PathLike, clause_pool) -> Path:
    path = _prepare(path)
    path.write_text(clause_pool.audit_dump(), encoding="utf-8")
    return path


class LPDumpStore:
    """
    Numbered LP dumps under one directory.

    File names are `<counter>_<tag>.lp`; the counter is shared between
    threads so names never collide.
    """

    def __init__(self, directory: PathLike):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._counter = 0
        self._lock = threading.Lock()

    def dump(self, lp: LPProblem, tag: str) -> Path:
        with self._lock:
            self._counter += 1
            number = self._counter
        path = self.directory / f"{number:06d}_{tag}.lp"
        path.write_text(lp.to_lp_text(title=tag), encoding="utf-8")
        return path

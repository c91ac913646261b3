"""
Tabular results of verification runs.

One RunRecord per task, persisted as CSV with pandas. The column order is
fixed so that two deterministic batch runs produce byte-identical files.
"""
import logging
from pathlib import Path
from typing import Iterable, List, Literal, Optional, Union

import pandas as pd
from pydantic import BaseModel, Field, field_validator

from src.core.verdict import SolverStats

logger = logging.getLogger(__name__)

COLUMNS = [
    "net", "property", "verdict", "time_s", "states", "unsat_paths",
    "clauses_learned", "clauses_fetched", "lp_calls", "note", "states_ablated",
]

# columns a results file must carry; `note` and `states_ablated` default to blank
REQUIRED_COLUMNS = COLUMNS[:9]

VerdictLabel = Literal["HOLDS", "VIOLATED", "TIMEOUT", "STALLED", "ERROR"]


class RunRecord(BaseModel):
    """One results row."""
    net: str
    property: str
    verdict: VerdictLabel
    time_s: float = Field(default=0.0, ge=0)
    states: int = Field(default=0, ge=0)
    unsat_paths: int = Field(default=0, ge=0)
    clauses_learned: int = Field(default=0, ge=0)
    clauses_fetched: int = Field(default=0, ge=0)
    lp_calls: int = Field(default=0, ge=0)
    note: str = ""
    states_ablated: Optional[int] = None

    @field_validator("states_ablated", mode="before")
    @classmethod
    def _blank_is_none(cls, value):
        return None if value in ("", None) else value

    @classmethod
    def from_stats(
        cls,
        net: Union[str, Path],
        prop: Union[str, Path],
        verdict: str,
        stats: SolverStats,
        time_s: float,
        note: str = "",
        states_ablated: Optional[int] = None,
    ) -> "RunRecord":
        return cls(
            net=str(net),
            property=str(prop),
            verdict=verdict,
            time_s=time_s,
            states=stats.states_explored,
            unsat_paths=stats.unsat_paths,
            clauses_learned=stats.total_learned,
            clauses_fetched=stats.clauses_fetched,
            lp_calls=stats.lp_calls,
            note=note,
            states_ablated=states_ablated,
        )

    @classmethod
    def error(cls, net: Union[str, Path], prop: Union[str, Path], message: str) -> "RunRecord":
        return cls(net=str(net), property=str(prop), verdict="ERROR", note=message)


class ResultsStore:
    """
    Collects RunRecords and writes them as CSV.

    Args:
        path: Target CSV file.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._records: List[RunRecord] = []

    def append(self, record: RunRecord):
        self._records.append(record)
        logger.info("%s | %s -> %s", record.net, record.property, record.verdict)

    def records(self) -> List[RunRecord]:
        return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def to_frame(self) -> pd.DataFrame:
        return records_to_frame(self._records)

    def save(self) -> Path:
        """Write every record collected so far."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        frame = self.to_frame()
        frame.to_csv(self.path, index=False, lineterminator="\n")
        logger.info("%d result rows written to %s", len(frame), self.path)
        return self.path

    @staticmethod
    def load(path: Union[str, Path]) -> List[RunRecord]:
        """
        Parse a results CSV back into records.

        Files without the `note` or `states_ablated` column load with blank
        values there; columns this module does not know are ignored.
        """
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f"results file {path} lacks columns {missing}")
        for column in COLUMNS:
            if column not in frame.columns:
                frame[column] = ""
        return [RunRecord.model_validate(row) for row in frame[COLUMNS].to_dict(orient="records")]


def records_to_frame(records: Iterable[RunRecord]) -> pd.DataFrame:
    rows = [record.model_dump() for record in records]
    frame = pd.DataFrame(rows, columns=COLUMNS)
    frame["states_ablated"] = frame["states_ablated"].astype("Int64")
    return frame

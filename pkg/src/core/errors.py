"""
Exception hierarchy for the verifier.

Infeasibility, refutation and rejected candidates are ordinary results and
never surface as exceptions; these classes cover malformed input, broken
contracts and numerical trouble.
"""
from typing import Optional


class VerifierError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(VerifierError, ValueError):
    """A vector or matrix does not match the network it is used with."""


class _LineError(VerifierError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)


class NNetFormatError(_LineError):
    """The NNet text could not be parsed."""


class PropertyParseError(_LineError):
    """The property text violates the constraint grammar."""


class LPStalledError(VerifierError):
    """
    The simplex engine hit its iteration cap or produced a point that fails
    the post-check. Callers treat the LP as undecided.
    """

    def __init__(self, message: str, path_infeasible: bool = False):
        super().__init__(message)
        self.path_infeasible = path_infeasible


class ElasticFilterError(VerifierError):
    """Elastic filtering was called outside its contract."""


class TrailError(VerifierError):
    """Illegal assignment or backtrack on a trail."""


class ClauseError(VerifierError):
    """A clause or core violates its structural invariants."""

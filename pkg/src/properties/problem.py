"""
Verification problem: a network, an input box and an unsafe output region.

The unsafe region is the negation of the property being checked. A problem
holds when no input in the box reaches it; a `Counterexample` witnesses the
opposite and is only ever produced through `check_counterexample`.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import DimensionMismatchError
from src.network.model import ActivationPattern, Network

logger = logging.getLogger(__name__)

# Unsafe constraints count as satisfied down to this slack.
SLACK_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned input region [lower, upper]."""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DimensionMismatchError(
                f"box bounds have shapes {lower.shape} and {upper.shape}"
            )
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower > upper):
            bad = int(np.argmax(lower > upper))
            raise ValueError(f"box lower bound exceeds upper bound in dimension {bad}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def center(self) -> np.ndarray:
        return (self.lower + self.upper) / 2.0

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clamp(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=np.float64), self.lower, self.upper)

    def bisect(self, dim: Optional[int] = None) -> Tuple["Box", "Box"]:
        """Split along `dim`, or along the widest dimension (lowest index on ties)."""
        if dim is None:
            dim = int(np.argmax(self.widths))
        mid = (self.lower[dim] + self.upper[dim]) / 2.0
        left_upper = self.upper.copy()
        left_upper[dim] = mid
        right_lower = self.lower.copy()
        right_lower[dim] = mid
        return Box(self.lower.copy(), left_upper), Box(right_lower, self.upper.copy())

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.dim))

    def __repr__(self) -> str:
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class Relation(str, Enum):
    LE = "<="
    GE = ">="


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    """`coeffs · v  (<= | >=)  bound` over the network outputs."""
    coeffs: np.ndarray
    relation: Relation
    bound: float

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 1:
            raise DimensionMismatchError("constraint coefficients must be a vector")
        if not np.any(coeffs != 0.0):
            raise ValueError("constraint needs at least one nonzero coefficient")
        if not (np.all(np.isfinite(coeffs)) and np.isfinite(self.bound)):
            raise ValueError("constraint values must be finite")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "relation", Relation(self.relation))
        object.__setattr__(self, "bound", float(self.bound))

    def slack(self, values) -> float:
        """Non-negative iff `values` satisfies the constraint."""
        lhs = float(self.coeffs @ np.asarray(values, dtype=np.float64))
        if self.relation is Relation.LE:
            return self.bound - lhs
        return lhs - self.bound

    def as_upper_form(self) -> Tuple[np.ndarray, float]:
        """Return (a, b) with the constraint equivalent to a · v <= b."""
        if self.relation is Relation.LE:
            return self.coeffs.copy(), self.bound
        return -self.coeffs, -self.bound

    def __str__(self) -> str:
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0.0:
                continue
            sign = "-" if c < 0 else "+"
            magnitude = abs(c)
            term = f"y{i}" if magnitude == 1.0 else f"{magnitude!r}*y{i}"
            terms.append((sign, term))
        text = ("-" if terms[0][0] == "-" else "") + terms[0][1]
        for sign, term in terms[1:]:
            text += f" {sign} {term}"
        return f"{text} {self.relation.value} {self.bound!r}"


@dataclass(frozen=True, eq=False)
class VerificationProblem:
    """Network, input box and the conjunction of unsafe output constraints."""
    network: Network
    input_box: Box
    unsafe: Tuple[LinearConstraint, ...]
    name: str = field(default="problem")

    def __post_init__(self):
        object.__setattr__(self, "unsafe", tuple(self.unsafe))
        if self.input_box.dim != self.network.input_dim:
            raise DimensionMismatchError(
                f"input box has {self.input_box.dim} dimensions, network expects "
                f"{self.network.input_dim}"
            )
        for constraint in self.unsafe:
            if len(constraint.coeffs) != self.network.output_dim:
                raise DimensionMismatchError(
                    f"unsafe constraint over {len(constraint.coeffs)} outputs, network has "
                    f"{self.network.output_dim}"
                )

    def with_box(self, box: Box, name: Optional[str] = None) -> "VerificationProblem":
        return VerificationProblem(
            network=self.network, input_box=box, unsafe=self.unsafe, name=name or self.name
        )

    def min_slack(self, y) -> float:
        """Smallest unsafe slack at output y; +inf when there are no constraints."""
        if not self.unsafe:
            return float("inf")
        return min(c.slack(y) for c in self.unsafe)

    def unsafe_matrix(self) -> Tuple[np.ndarray, np.ndarray]:
        """Stack the unsafe region as A y <= b."""
        rows, rhs = [], []
        for constraint in self.unsafe:
            a, b = constraint.as_upper_form()
            rows.append(a)
            rhs.append(b)
        if not rows:
            return np.zeros((0, self.network.output_dim)), np.zeros(0)
        return np.vstack(rows), np.array(rhs)


@dataclass(frozen=True, eq=False)
class Counterexample:
    x: np.ndarray
    y: np.ndarray
    pattern: ActivationPattern


@dataclass(frozen=True)
class Valid:
    counterexample: Counterexample


@dataclass(frozen=True)
class Rejected:
    reason: str


def check_counterexample(problem: VerificationProblem, x) -> Union[Valid, Rejected]:
    """
    Validate a candidate input against the problem.

    The box test is exact; unsafe constraints accept slack down to -1e-9.

    Returns:
        Valid with the counterexample, or Rejected("box") / Rejected("unsafe").
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.network.input_dim,):
        raise DimensionMismatchError(
            f"candidate has shape {x.shape}, network expects ({problem.network.input_dim},)"
        )
    if not problem.input_box.contains(x):
        return Rejected("box")

    y, pattern = problem.network.evaluate_with_pattern(x)
    if problem.min_slack(y) < -SLACK_TOLERANCE:
        return Rejected("unsafe")
    return Valid(Counterexample(x=x.copy(), y=y, pattern=pattern))


def make_robustness_problems(
    network: Network,
    x0: Sequence[float],
    eps: float,
    true_label: int,
) -> List[VerificationProblem]:
    """
    Targeted misclassification problems around `x0`.

    One problem per target class t != true_label, over the L-inf ball of
    radius eps clamped to [0, 1], with unsafe region y_t - y_true >= 0.

    Raises:
        ValueError: if eps <= 0 or the label is out of range.
    """
    if not eps > 0:
        raise ValueError(f"robustness radius must be positive, got {eps}")
    if not 0 <= true_label < network.output_dim:
        raise ValueError(
            f"label {true_label} out of range for {network.output_dim} outputs"
        )
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (network.input_dim,):
        raise DimensionMismatchError(
            f"x0 has shape {x0.shape}, network expects ({network.input_dim},)"
        )

    box = Box(np.clip(x0 - eps, 0.0, 1.0), np.clip(x0 + eps, 0.0, 1.0))
    problems = []
    for target in range(network.output_dim):
        if target == true_label:
            continue
        coeffs = np.zeros(network.output_dim)
        coeffs[target] = 1.0
        coeffs[true_label] = -1.0
        problems.append(VerificationProblem(
            network=network,
            input_box=box,
            unsafe=(LinearConstraint(coeffs, Relation.GE, 0.0),),
            name=f"robust_eps{eps:g}_label{true_label}_target{target}",
        ))
    logger.debug("built %d robustness problems at eps=%g", len(problems), eps)
    return problems

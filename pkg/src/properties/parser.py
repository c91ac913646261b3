"""
Property file parser.

One linear constraint per line:

    <term> (+|-) <term> ... (<=|>=) <const>

where a term is an optional coefficient followed by `*` and a variable
(`x0..x{n-1}` for inputs, `y0..y{m-1}` for outputs). `#` starts a comment.

Single-variable input constraints tighten the input box. Output constraints
form the unsafe region. Anything else is rejected: multi-variable input
constraints, constraints mixing inputs and outputs.
"""
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.core.errors import PropertyParseError
from src.network.model import Network
from src.network.nnet import read_nnet
from src.properties.problem import Box, LinearConstraint, Relation, VerificationProblem

logger = logging.getLogger(__name__)

_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM = re.compile(
    rf"\s*(?P<sign>[+-])?\s*(?:(?P<coeff>{_NUMBER})\s*\*\s*)?(?P<var>[xy])(?P<index>\d+)\s*"
)
_CONSTANT = re.compile(rf"\s*(?P<value>[+-]?\s*{_NUMBER})\s*$")
_RELATION = re.compile(r"<=|>=")


@dataclass
class ParsedProperty:
    """Box tightenings and unsafe output constraints read from a property file."""
    input_lower: Dict[int, float] = field(default_factory=dict)
    input_upper: Dict[int, float] = field(default_factory=dict)
    unsafe: List[LinearConstraint] = field(default_factory=list)

    def tighten_lower(self, index: int, value: float):
        self.input_lower[index] = max(value, self.input_lower.get(index, -np.inf))

    def tighten_upper(self, index: int, value: float):
        self.input_upper[index] = min(value, self.input_upper.get(index, np.inf))


def _parse_terms(text: str, line: int) -> List[Tuple[str, int, float]]:
    terms = []
    pos = 0
    while pos < len(text):
        match = _TERM.match(text, pos)
        if match is None or match.end() == pos:
            raise PropertyParseError(f"cannot parse term near {text[pos:].strip()!r}", line)
        if terms and match.group("sign") is None:
            raise PropertyParseError("terms must be joined by + or -", line)
        sign = -1.0 if match.group("sign") == "-" else 1.0
        coeff = float(match.group("coeff")) if match.group("coeff") else 1.0
        terms.append((match.group("var"), int(match.group("index")), sign * coeff))
        pos = match.end()
    if not terms:
        raise PropertyParseError("constraint has no terms", line)
    return terms


def _parse_line(text: str, line: int) -> Tuple[List[Tuple[str, int, float]], Relation, float]:
    relations = _RELATION.findall(text)
    if len(relations) != 1:
        raise PropertyParseError("expected exactly one of <= or >=", line)
    lhs, rhs = _RELATION.split(text)
    constant = _CONSTANT.match(rhs)
    if constant is None:
        raise PropertyParseError(f"right-hand side {rhs.strip()!r} is not a number", line)
    bound = float(constant.group("value").replace(" ", ""))
    return _parse_terms(lhs, line), Relation(relations[0]), bound


def parse_property(text: str, input_dim: int, output_dim: int) -> ParsedProperty:
    """
    Parse property text for a network with the given dimensions.

    Args:
        text: Property file contents.
        input_dim: Number of network inputs (valid `x` indices).
        output_dim: Number of network outputs (valid `y` indices).

    Returns:
        ParsedProperty with box tightenings and unsafe constraints.

    Raises:
        PropertyParseError: on a syntax error, an unknown variable, a
            zero constraint, a mixed or multi-variable input constraint, or
            inconsistent input bounds.
    """
    parsed = ParsedProperty()

    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue

        terms, relation, bound = _parse_line(content, number)
        kinds = {var for var, _, _ in terms}
        if len(kinds) > 1:
            raise PropertyParseError("constraint mixes input and output variables", number)

        kind = kinds.pop()
        limit = input_dim if kind == "x" else output_dim
        coeffs = np.zeros(limit)
        for var, index, value in terms:
            if index >= limit:
                raise PropertyParseError(f"unknown variable {var}{index}", number)
            coeffs[index] += value
        if not (np.all(np.isfinite(coeffs)) and np.isfinite(bound)):
            raise PropertyParseError("constraint value out of range", number)
        if not np.any(coeffs != 0.0):
            raise PropertyParseError("constraint has no nonzero coefficient", number)

        if kind == "y":
            parsed.unsafe.append(LinearConstraint(coeffs, relation, bound))
            continue

        nonzero = np.flatnonzero(coeffs)
        if len(nonzero) != 1:
            raise PropertyParseError("input constraints must involve a single variable", number)
        index = int(nonzero[0])
        value = bound / coeffs[index]
        if not np.isfinite(value):
            raise PropertyParseError("input bound out of range", number)
        upper_side = (relation is Relation.LE) == (coeffs[index] > 0)
        if upper_side:
            parsed.tighten_upper(index, value)
        else:
            parsed.tighten_lower(index, value)

        lower = parsed.input_lower.get(index, -np.inf)
        upper = parsed.input_upper.get(index, np.inf)
        if lower > upper:
            raise PropertyParseError(
                f"inconsistent bounds for x{index}: {lower!r} > {upper!r}", number
            )

    return parsed


def build_problem(network: Network, parsed: ParsedProperty, name: str = "problem") -> VerificationProblem:
    """
    Merge parsed tightenings over the network's default box.

    Raises:
        PropertyParseError: if merged bounds cross or there is no output
            constraint.
    """
    if not parsed.unsafe:
        raise PropertyParseError("property has no output constraint")

    lower, upper = network.default_box()
    lower, upper = lower.copy(), upper.copy()
    for index, value in parsed.input_lower.items():
        lower[index] = value
    for index, value in parsed.input_upper.items():
        upper[index] = value

    crossed = np.flatnonzero(lower > upper)
    if len(crossed):
        i = int(crossed[0])
        raise PropertyParseError(f"inconsistent bounds for x{i}: {lower[i]!r} > {upper[i]!r}")

    return VerificationProblem(
        network=network, input_box=Box(lower, upper), unsafe=tuple(parsed.unsafe), name=name
    )


def load_problem(
    net_path: Union[str, Path],
    property_path: Union[str, Path],
    apply_normalization: bool = False,
    name: Optional[str] = None,
) -> VerificationProblem:
    """Read an NNet file and a property file into a problem."""
    network = read_nnet(net_path, apply_normalization=apply_normalization)
    parsed = parse_property(Path(property_path).read_text(), network.input_dim, network.output_dim)
    problem = build_problem(network, parsed, name=name or Path(property_path).stem)
    logger.info("loaded problem %s: box %s, %d unsafe constraints",
                problem.name, problem.input_box, len(problem.unsafe))
    return problem


def format_property(problem: VerificationProblem, comment: Optional[str] = None) -> str:
    """
    Render a problem's box and unsafe constraints in the property grammar.

    Floats are written with repr so `parse_property` reads back the same
    values.
    """
    lines = [f"# {comment}"] if comment else []
    for i, (lo, hi) in enumerate(zip(problem.input_box.lower, problem.input_box.upper)):
        lines.append(f"x{i} >= {float(lo)!r}")
        lines.append(f"x{i} <= {float(hi)!r}")
    lines.extend(str(constraint) for constraint in problem.unsafe)
    return "\n".join(lines) + "\n"


def write_property(problem: VerificationProblem, path: Union[str, Path], comment: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_property(problem, comment), encoding="utf-8")
    return path

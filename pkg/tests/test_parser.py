import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core.errors import PropertyParseError
from src.network.generators import random_problem
from src.network.model import Network
from src.properties.parser import build_problem, format_property, parse_property
from src.properties.problem import Relation


def test_box_and_output_constraint():
    parsed = parse_property("x0 >= 0.1\nx0 <= 0.2\ny0 - y1 <= 0", 1, 2)
    assert parsed.input_lower == {0: 0.1}
    assert parsed.input_upper == {0: 0.2}
    (constraint,) = parsed.unsafe
    assert np.array_equal(constraint.coeffs, [1.0, -1.0])
    assert constraint.relation is Relation.LE and constraint.bound == 0.0


def test_acas_style_atom():
    (constraint,) = parse_property("y3 <= -3.9911", 5, 5).unsafe
    assert np.array_equal(constraint.coeffs, [0, 0, 0, 1, 0])
    assert constraint.bound == -3.9911


def test_coefficients_comments_and_scaled_input_bounds():
    parsed = parse_property("# header\n2*x1 <= 1  # half\n-x0 <= 3\n0.5*y0 + 2e-1*y1 >= -1\n", 2, 2)
    assert parsed.input_upper == {1: 0.5}
    assert parsed.input_lower == {0: -3.0}
    assert np.allclose(parsed.unsafe[0].coeffs, [0.5, 0.2])


@pytest.mark.parametrize(
    "text, message",
    [
        ("x0 >= 0.5\nx0 <= 0.1", "inconsistent bounds"),
        ("y7 <= 1", "unknown variable"),
        ("z0 <= 1", "cannot parse"),
        ("x0 + y0 <= 1", "mixes input and output"),
        ("x0 + x1 <= 1", "single variable"),
        ("y0 - y0 <= 1", "nonzero"),
        ("y0 <= 1 <= 2", "exactly one"),
        ("y0 y1 <= 1", "joined by"),
        ("y0 <= abc", "not a number"),
    ],
)
def test_invalid_lines(text, message):
    with pytest.raises(PropertyParseError, match=message):
        parse_property(text, 2, 2)


def test_error_carries_line_number():
    with pytest.raises(PropertyParseError) as info:
        parse_property("y0 <= 1\n\ny9 >= 0", 2, 2)
    assert info.value.line == 3


def test_build_problem_uses_network_box_for_unspecified_dims():
    net = Network.from_arrays([np.eye(2)], [np.zeros(2)])
    problem = build_problem(net, parse_property("x1 >= 0.25\ny0 >= 0.5", 2, 2))
    assert np.array_equal(problem.input_box.lower, [0.0, 0.25])
    assert np.array_equal(problem.input_box.upper, [1.0, 1.0])


def test_build_problem_needs_output_constraint():
    net = Network.from_arrays([np.eye(2)], [np.zeros(2)])
    with pytest.raises(PropertyParseError, match="no output constraint"):
        build_problem(net, parse_property("x0 <= 0.5", 2, 2))


def test_build_problem_rejects_bounds_crossing_the_network_box():
    net = Network.from_arrays([np.eye(2)], [np.zeros(2)])
    with pytest.raises(PropertyParseError, match="inconsistent bounds"):
        build_problem(net, parse_property("x0 >= 2\ny0 >= 0", 2, 2))


def test_formatted_property_reads_back(rng):
    problem = random_problem(rng)
    parsed = parse_property(format_property(problem, comment="fixture"), 2, 2)
    rebuilt = build_problem(problem.network, parsed)
    assert np.array_equal(rebuilt.input_box.lower, problem.input_box.lower)
    assert np.array_equal(rebuilt.input_box.upper, problem.input_box.upper)
    assert np.array_equal(rebuilt.unsafe[0].coeffs, problem.unsafe[0].coeffs)
    assert rebuilt.unsafe[0].bound == problem.unsafe[0].bound


_coeff = st.floats(min_value=0.0, max_value=1e6, allow_nan=False).map(lambda v: f"{v!r}")
_number = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).map(lambda v: f"{v!r}")
_term = st.tuples(st.sampled_from(["+", "-"]), _coeff, st.sampled_from(["y0", "y1", "y2"]))


@st.composite
def valid_lines(draw):
    terms = draw(st.lists(_term, min_size=1, max_size=4))
    lhs = " ".join(f"{sign} {coeff}*{var}" for sign, coeff, var in terms)
    return f"{lhs} {draw(st.sampled_from(['<=', '>=']))} {draw(_number)}"


@settings(max_examples=200, deadline=None)
@given(st.lists(valid_lines(), min_size=1, max_size=5))
def test_grammar_inputs_never_crash(lines):
    try:
        parsed = parse_property("\n".join(lines), 1, 3)
    except PropertyParseError:
        return
    assert len(parsed.unsafe) == len(lines)


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="xy0123456789.+-*<=> e#\n", max_size=60))
def test_arbitrary_text_parses_or_raises_parse_error(text):
    try:
        parsed = parse_property(text, 2, 2)
    except PropertyParseError:
        return
    for constraint in parsed.unsafe:
        assert np.all(np.isfinite(constraint.coeffs))

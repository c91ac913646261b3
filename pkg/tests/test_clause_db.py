import pytest
from hypothesis import given, settings, strategies as st

from src.cdcl.clause_db import (
    ClauseDB,
    ClauseState,
    Conflict,
    Fixpoint,
    Level,
    Refuted,
    backjump_level,
    backtrack,
    clause_state,
    learn_from_core,
)
from src.cdcl.literals import Clause, ClauseOrigin, Literal, active, guard
from src.cdcl.trail import ReasonKind, Trail, propagated
from src.core.errors import ClauseError
from src.network.model import NeuronId, Phase
from tests.oracles import naive_propagate

a, b, c = active(0, 0), active(0, 1), active(0, 2)


def clause(*literals, origin=ClauseOrigin.ELASTIC_CORE):
    return Clause(literals, origin)


def test_clause_identity_is_the_literal_set():
    assert clause(a, -b) == clause(-b, a)
    assert hash(clause(a, -b)) == hash(clause(-b, a, origin=ClauseOrigin.PATH_NEGATION))
    with pytest.raises(ClauseError):
        clause(a, -a)
    with pytest.raises(ClauseError):
        clause()
    with pytest.raises(ClauseError):
        Literal(NeuronId(0, 0), Phase.UNKNOWN)


def test_rendering():
    assert str(clause(a, -b, guard(3).negate())) == "{L0_0+, L0_1-, S3-}"


def test_implication_propagates():
    trail, db = Trail(), ClauseDB()
    trail.decide(a)
    db.add(clause(-a, b), trail)
    assert db.unit_propagate(trail) == Fixpoint()
    assert trail.value_of(b) is True
    assert trail.level_of(b) == 1
    assert trail[-1].reason == propagated(1)


def test_opposite_units_conflict():
    trail, db = Trail(), ClauseDB()
    db.add(clause(-a), trail)
    db.add(clause(a), trail)
    assert db.unit_propagate(trail) == Conflict(2)
    assert trail.literals() == [-a]


def test_case_study_chain_refutes():
    trail, db = Trail(), ClauseDB()
    for lits in [(-a,), (a, -b), (a, c), (b, -c)]:
        db.add(clause(*lits), trail)
    outcome = db.unit_propagate(trail)
    assert isinstance(outcome, Conflict)
    assert isinstance(backjump_level(db.get(outcome.clause_id), trail), Refuted)


def test_learning_negates_the_core():
    trail = Trail()
    trail.decide(-a)
    trail.decide(b)
    learned = learn_from_core([-a, b], trail)
    assert learned == clause(a, -b)
    assert learned.origin is ClauseOrigin.ELASTIC_CORE
    with pytest.raises(ClauseError):
        learn_from_core([c], trail)


def test_duplicates_keep_first_id():
    trail, db = Trail(), ClauseDB()
    first = db.add(clause(a, b), trail)
    again = db.add(clause(b, a), trail)
    assert again.duplicate and again.clause_id == first.clause_id
    assert len(db) == 1 and clause(a, b) in db


def test_clause_state_cases():
    trail = Trail()
    trail.decide(a)
    assert clause_state(clause(a, b), trail).state is ClauseState.SATISFIED
    assert clause_state(clause(-a, b, c), trail).state is ClauseState.OPEN
    unit = clause_state(clause(-a, b), trail)
    assert (unit.state, unit.literal) == (ClauseState.UNIT, b)
    assert clause_state(clause(-a), trail).state is ClauseState.FALSIFIED


def test_backjump_single_literal_goes_to_root():
    trail = Trail()
    trail.decide(a)
    assert backjump_level(clause(-a), trail) == Level(0)


def test_backjump_to_second_highest_level():
    trail = Trail()
    trail.decide(-a)
    trail.decide(c)
    trail.decide(b)
    assert backjump_level(clause(a, -b), trail) == Level(1)


def test_backjump_shared_top_level():
    trail = Trail()
    trail.decide(a)
    trail.assign(b, propagated(1))
    assert backjump_level(clause(-a, -b), trail) == Level(0)


def test_backjump_needs_falsified_clause():
    trail = Trail()
    trail.decide(a)
    with pytest.raises(ClauseError):
        backjump_level(clause(-a, b), trail)


def test_learned_clause_becomes_unit_after_backjump():
    trail, db = Trail(), ClauseDB()
    trail.decide(-a)
    trail.decide(c)
    trail.decide(b)
    learned = db.add(clause(a, -b), trail)
    assert learned.state is ClauseState.FALSIFIED
    target = backjump_level(db.get(learned.clause_id), trail)
    backtrack(trail, db, target.level)
    db.rewatch(learned.clause_id, trail)
    assert db.unit_propagate(trail) == Fixpoint()
    assert trail.value_of(-b) is True
    assert trail[-1].reason.kind is ReasonKind.PROPAGATED


NEURONS = [NeuronId(0, i) for i in range(12)]


@st.composite
def clause_sets(draw):
    clauses = []
    for _ in range(draw(st.integers(1, 20))):
        neurons = draw(st.lists(st.sampled_from(NEURONS), min_size=1, max_size=3, unique=True))
        phases = draw(st.lists(st.sampled_from([Phase.ACTIVE, Phase.INACTIVE]),
                               min_size=len(neurons), max_size=len(neurons)))
        clauses.append(Clause.from_literals([Literal(n, p) for n, p in zip(neurons, phases)],
                                            ClauseOrigin.PATH_NEGATION))
    decisions = draw(st.lists(st.tuples(st.sampled_from(NEURONS), st.booleans()), max_size=12))
    return clauses, decisions


def _assignment(trail):
    return {lit.neuron: lit.phase for lit in trail.literals()}


@settings(max_examples=1000, deadline=None)
@given(clause_sets())
def test_watched_propagation_matches_naive_closure(instance):
    clauses, decisions = instance
    trail, db = Trail(), ClauseDB()
    for cl in clauses:
        db.add(cl, trail)

    expected, conflict = naive_propagate(clauses, {})
    outcome = db.unit_propagate(trail)
    assert isinstance(outcome, Conflict) == conflict
    if conflict:
        return
    assert _assignment(trail) == expected

    for neuron, on in decisions:
        if trail.is_assigned(neuron):
            continue
        lit = Literal(neuron, Phase.ACTIVE if on else Phase.INACTIVE)
        trail.decide(lit)
        start = _assignment(trail)
        expected, conflict = naive_propagate(clauses, dict(start))
        outcome = db.unit_propagate(trail)
        assert isinstance(outcome, Conflict) == conflict
        if conflict:
            return
        assert _assignment(trail) == expected
        trail.check_invariants()

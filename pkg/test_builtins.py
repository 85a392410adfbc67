#!/usr/bin/env python3
"""
Tests for the builtin predicates: every truth function must agree with the
rules that define the same gadget in plain Datalog
"""

import itertools

import pytest

from conftest import naive_evaluate, naive_relations
from ontoquery.builtins import BUILTINS, make_builtin
from ontoquery.errors import EvaluationError
from ontoquery.evaluator import evaluate
from ontoquery.model import Atom, Database, DatalogProgram, NumericExtension, Rule, Term
from ontoquery.rewriter import gate_rules, guard_rules
from ontoquery.solver import BuiltinConstraint, SearchState

SMALL_DB = Database([Atom.of("E", "a")])
SMALL = NumericExtension(1, ["a"])
MEDIUM_DB = Database([Atom.of("E", "a"), Atom.of("E", "b")])
MEDIUM = NumericExtension(3, ["a", "b"])


def _defined(rules, db, n):
    return naive_relations(DatalogProgram(tuple(rules), numeric_size=n), db, n)


@pytest.mark.parametrize("name", ["IfEq", "NotB", "OrB", "TrueB"])
def test_gates_match_their_rules(name):
    relation = _defined(gate_rules(), MEDIUM_DB, 3)[name]
    arity = len(next(iter(relation)))
    builtin = make_builtin(name, arity, MEDIUM)
    for values in itertools.product(sorted(MEDIUM.dnum, key=str), repeat=arity):
        assert builtin.holds(values) == (values in relation), values


@pytest.mark.parametrize("arity", [4, 6, 8])
def test_guarded_equalities_match_their_rules(arity):
    (name,) = {rule.head.predicate for rule in guard_rules(arity)}
    relation = _defined(guard_rules(arity), SMALL_DB, 1)[name]
    builtin = make_builtin(name, arity, SMALL)
    for values in itertools.product(sorted(SMALL.dnum, key=str), repeat=arity):
        assert builtin.holds(values) == (values in relation), values


@pytest.mark.parametrize("name", ["Lt", "Succ", "Neq"])
def test_numeric_builtins_match_the_extension(name):
    builtin = make_builtin(name, 2, MEDIUM)
    relation = MEDIUM.relation(name)
    for values in itertools.product(sorted(MEDIUM.dnum, key=str), repeat=2):
        assert builtin.holds(values) == (values in relation), values


@pytest.mark.parametrize(
    "body, arity",
    [
        ("IfEq", 3),
        ("NotB", 2),
        ("OrB", 3),
        ("Lt", 2),
        ("Succ", 2),
        ("Neq", 2),
        ("IfThen", 4),
        ("IfThen2", 6),
    ],
)
def test_search_finds_exactly_the_true_tuples(body, arity):
    xs = tuple(f"X{p}" for p in range(1, arity + 1))
    goal = Rule(
        Atom.of("goal", *xs),
        tuple(Atom.of("DNum", x) for x in xs) + (Atom.of(body, *xs),),
    )
    helpers = gate_rules() + guard_rules(4) + guard_rules(6)
    program = DatalogProgram(tuple(helpers) + (goal,), goal_arity=arity, numeric_size=1)
    assert evaluate(program, SMALL_DB) == naive_evaluate(program, SMALL_DB)


def test_constants_inside_gadgets():
    program = DatalogProgram(
        (Rule(Atom.of("goal", "X"), (Atom.of("DNum", "X"), Atom.of("IfEq", "X", "a", 1))),),
        goal_arity=1,
        numeric_size=2,
    )
    assert evaluate(program, MEDIUM_DB) == {("a",)}


def test_vector_gadgets():
    ext = NumericExtension(3, ["a"])
    if_eq = make_builtin("IfEqV", 5, ext)
    assert if_eq.width == 2
    assert if_eq.holds((0, 1, 0, 1, 1))
    assert if_eq.holds((0, 1, 1, 0, 0))
    assert not if_eq.holds((0, 1, 1, 0, 1))
    assert if_eq.holds(("a", "a", "a", "a", 1))
    assert not if_eq.holds(("a", 0, "a", 0, 1))
    less = make_builtin("LtV", 4, ext)
    assert less.holds((0, 1, 1, 0))
    assert not less.holds((1, 1, 0, 0))
    assert not less.holds(("a", "a", 1, 1))
    different = make_builtin("NeqV", 4, ext)
    assert different.holds((0, 0, "a", "a"))
    assert not different.holds((1, 0, 1, 0))


def _vector_state(domains, name, arity):
    state = SearchState({var: frozenset(values) for var, values in domains.items()})
    args = tuple(Term.var(var) for var in domains)
    state.add_constraints([BuiltinConstraint(make_builtin(name, arity, MEDIUM), args)])
    state.propagate()
    return state.domains


def test_vector_gadgets_narrow_whole_vectors():
    bits = frozenset((0, 1, "a"))
    less = _vector_state({"X1": bits, "X2": bits, "Y1": {0}, "Y2": {1}}, "LtV", 4)
    assert less["X1"] == {0} and less["X2"] == {0}
    equal = _vector_state({"X1": {1}, "X2": {0}, "Y1": bits, "Y2": bits, "F": {1}}, "IfEqV", 5)
    assert equal["Y1"] == {1} and equal["Y2"] == {0}
    apart = _vector_state({"X1": {1}, "X2": {0}, "Y1": {0}, "Y2": {1}, "F": bits}, "IfEqV", 5)
    assert apart["F"] == {0}


def test_builtin_construction_errors():
    with pytest.raises(EvaluationError):
        make_builtin("Nope", 2, SMALL)
    with pytest.raises(EvaluationError):
        make_builtin("Lt", 3, SMALL)
    with pytest.raises(EvaluationError):
        make_builtin("IfEqV", 4, SMALL)
    assert set(BUILTINS) >= {"Lt", "Succ", "Neq", "IfEq", "NotB", "OrB", "TrueB", "IfThen"}


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))

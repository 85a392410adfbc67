#!/usr/bin/env python3
"""
Tests for the nonrecursive Datalog evaluator
"""

import random

import pytest

from conftest import BASE, naive_evaluate
from ontoquery.errors import EvaluationError, RecursionDetected, ResourceLimitExceeded, UnknownPredicate
from ontoquery.evaluator import evaluate, stratify
from ontoquery.model import Atom, Database, DatalogProgram, Rule, Term
from ontoquery.solver import EqualConstraint, Relation, SearchState, Solver, TableConstraint
from ontoquery.parser import parse_facts, parse_program

FACTS = "E(a, b). E(b, a). E(c, d)."

CYCLES = """
%@ goal goal/1
%@ edb E/2
%@ numeric 2
P(X, Z) :- E(X, Y), E(Y, Z).
goal(X) :- P(X, X).
"""


@pytest.fixture
def edges():
    return parse_facts(FACTS)


def test_two_level_program(edges):
    program = parse_program(CYCLES)
    assert evaluate(program, edges) == {("a",), ("b",)}
    assert evaluate(program, edges) == naive_evaluate(program, edges)


def test_virtual_predicates_give_the_same_answers(edges):
    program = parse_program(CYCLES)
    assert evaluate(program, edges, materialize_limit=0) == {("a",), ("b",)}


def test_union_of_rules(edges):
    program = parse_program(
        "%@ goal goal/1\n%@ edb E/2\n"
        "P(X) :- E(X, d).\n"
        "P(Y) :- E(a, Y).\n"
        "goal(X) :- P(X), E(X, Y).\n"
    )
    assert evaluate(program, edges) == {("b",), ("c",)}
    assert evaluate(program, edges) == naive_evaluate(program, edges)


def test_numbers_depend_on_n(edges):
    program = parse_program("%@ goal goal/0\n%@ numeric 2\ngoal :- Num(X), Succ(X, Y), Lt(Y, 3).\n")
    assert evaluate(program, edges) is False
    assert evaluate(program, edges, n=3) is True


def test_facts_with_numbers(edges):
    program = parse_program(
        "%@ goal goal/1\n%@ numeric 3\n"
        "Level(a, 0).\nLevel(b, 2).\n"
        "goal(X) :- Level(X, Y), Lt(0, Y).\n"
    )
    assert evaluate(program, edges) == {("b",)}


def test_program_defined_dnum(edges):
    program = parse_program("%@ goal goal/1\n%@ edb E/2\nDNum(X) :- E(X, Y).\ngoal(X) :- DNum(X).\n")
    assert evaluate(program, edges) == {("a",), ("b",), ("c",)}
    assert evaluate(program, edges) == naive_evaluate(program, edges)


def test_empty_results(edges):
    program = parse_program("%@ goal goal/1\n%@ edb E/2\ngoal(X) :- E(X, X).\n")
    assert evaluate(program, edges) == set()
    boolean = parse_program("%@ goal goal/0\n%@ edb E/2\ngoal :- E(X, X).\n")
    assert evaluate(boolean, edges) is False


def test_trace_returns_the_proving_assignment(edges):
    program = parse_program("%@ goal goal/0\n%@ edb E/2\ngoal :- E(X, Y), E(Y, X).\n")
    result, witness = evaluate(program, edges, trace=True)
    assert result is True
    assert (witness["X"], witness["Y"]) in {("a", "b"), ("b", "a")}
    never = parse_program("%@ goal goal/0\n%@ edb E/2\ngoal :- E(X, X).\n")
    assert evaluate(never, edges, trace=True) == (False, None)


def test_fixed_values(edges):
    program = parse_program("%@ goal goal/0\n%@ edb E/2\ngoal :- E(X, Y), E(Y, X).\n")
    assert evaluate(program, edges, fixed={"X": "a"}) is True
    assert evaluate(program, edges, fixed={"X": "c"}) is False
    assert evaluate(program, edges, fixed={"Unused": "c"}) is True


def test_recursion_is_rejected(edges):
    program = parse_program("%@ goal goal/0\n%@ edb E/2\nP(X) :- E(X, Y), P(Y).\ngoal :- P(X).\n")
    with pytest.raises(RecursionDetected) as excinfo:
        evaluate(program, edges)
    assert excinfo.value.cycle


def test_unknown_predicates(edges):
    program = parse_program("%@ goal goal/0\ngoal :- Missing(X).\n")
    with pytest.raises(UnknownPredicate) as excinfo:
        evaluate(program, edges)
    assert excinfo.value.predicate == "Missing"


def test_extension_relations_cannot_be_redefined(edges):
    program = DatalogProgram(
        (
            Rule(Atom.of("Lt", "X", "Y"), (Atom.of("E", "X", "Y"),)),
            Rule(Atom("goal"), (Atom.of("Lt", "X", "Y"),)),
        ),
        edb=frozenset({"E"}),
    )
    with pytest.raises(EvaluationError):
        evaluate(program, edges)


def test_stratify_orders_dependencies():
    program = parse_program(CYCLES)
    assert stratify(program) == ["P", "goal"]


def test_timeout_stops_the_search(edges):
    program = parse_program("%@ goal goal/0\n%@ edb E/2\ngoal :- E(X, Y), E(Y, X).\n")
    with pytest.raises(ResourceLimitExceeded):
        evaluate(program, edges, timeout=-1.0)
    assert evaluate(program, edges, timeout=30.0) is True


def test_timeout_is_checked_while_propagating():
    x = Term.var("X")
    state = SearchState({"X": frozenset(range(10))}, frozenset(), Solver(timeout=-1.0))
    state.add_constraints(EqualConstraint((x, x)) for _ in range(100))
    with pytest.raises(ResourceLimitExceeded):
        state.propagate()



def test_table_selection_uses_every_bound_position():
    relation = Relation("T", [(1, 0, 2), (1, 1, 0), (0, 2, 2)])
    assert relation.select(((0, 1), (2, 2))) == [(1, 0, 2)]
    assert relation.select(((0, 0), (2, 0))) == []
    assert len(relation.select(())) == 3
    state = SearchState({"X": frozenset({1}), "Y": frozenset(range(3)), "Z": frozenset({2})})
    constraint = TableConstraint(relation, (Term.var("X"), Term.var("Y"), Term.var("Z")))
    assert constraint.propagate(state) is True
    assert state.domains["Y"] == {0}


# --- random programs against the naive evaluator ---

CONSTANTS = ("a", "b", "c")
FILTERS = ("Lt", "Neq", "Succ")


def _random_rule(rng, head_name, head_arity, available, arities):
    pool = ["X1", "X2", "X3"]
    body = []
    for _ in range(rng.randint(1, 3)):
        name = rng.choice(available)
        args = []
        for _ in range(arities[name]):
            if rng.random() < 0.15:
                args.append(Term.const(rng.choice(CONSTANTS)))
            else:
                args.append(Term.var(rng.choice(pool)))
        body.append(Atom(name, tuple(args)))
    names = sorted({name for atom in body for name in atom.variables()})
    if not names:
        body.append(Atom("F", (Term.var("X1"),)))
        names = ["X1"]
    if rng.random() < 0.3:
        left, right = rng.sample(names + ["X4"], 2)
        body.append(Atom(rng.choice(FILTERS), (Term.var(left), Term.var(right))))
    if rng.random() < 0.2:
        body.append(Atom("Num", (Term.var(rng.choice(names)),)))
    head = Atom(head_name, tuple(Term.var(rng.choice(names)) for _ in range(head_arity)))
    return Rule(head, tuple(body))


def _random_program(seed):
    """A nonrecursive program of at most eight predicates over E/2 and F/1, with its facts."""
    rng = random.Random(seed)
    facts = [Atom.of("E", rng.choice(CONSTANTS), rng.choice(CONSTANTS)) for _ in range(rng.randint(1, 6))]
    facts += [Atom.of("F", rng.choice(CONSTANTS)) for _ in range(rng.randint(1, 3))]
    arities = {"E": 2, "F": 1}
    available = ["E", "F"]
    rules = []
    for index in range(1, rng.randint(1, 5) + 1):
        name = f"P{index}"
        arities[name] = rng.randint(1, 2)
        rules += [_random_rule(rng, name, arities[name], available, arities) for _ in range(rng.randint(1, 2))]
        available.append(name)
    goal_arity = rng.randint(0, 1)
    rules += [_random_rule(rng, "goal", goal_arity, available, arities) for _ in range(rng.randint(1, 2))]
    program = DatalogProgram(tuple(rules), "goal", frozenset({"E", "F"}), goal_arity, numeric_size=2)
    return program, Database(facts)


@pytest.mark.parametrize("seed", range(200))
def test_random_programs_match_naive_evaluation(seed):
    program, db = _random_program(seed)
    assert len(set(program.arities()) - set(BASE)) <= 8
    expected = naive_evaluate(program, db)
    assert evaluate(program, db) == expected
    assert evaluate(program, db, materialize_limit=0) == expected


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))

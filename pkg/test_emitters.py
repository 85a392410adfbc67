#!/usr/bin/env python3
"""
Tests for the SQL and first-order emitters
"""

import random

import pytest

from conftest import fo_holds, fo_structure
from ontoquery.emitters import FoExists, decode_sql_value, execute_sql, sql_statements, to_fo, to_fo_formula, to_sql
from ontoquery.evaluator import evaluate
from ontoquery.harness import PROFILES, gen_instance
from ontoquery.model import RewriteParams, disjuncts_of
from ontoquery.normalizer import to_normal_form, uniformize
from ontoquery.parser import parse_facts, parse_program, parse_query, parse_tgds
from ontoquery.rewriter import build_program

FACTS = "E(a, b). E(b, a). E(c, d)."

CYCLES = """
%@ goal goal/1
%@ edb E/2
%@ numeric 2
P(X, Z) :- E(X, Y), E(Y, Z).
goal(X) :- P(X, X).
"""

COUNTING = "%@ goal goal/0\n%@ numeric 2\ngoal :- Num(X), Succ(X, Y), Lt(Y, 3).\n"

CONSTANT_HEADS = "%@ goal goal/1\n%@ edb E/2\nP(a).\nP(X) :- E(X, a).\ngoal(X) :- P(X).\n"


@pytest.fixture
def edges():
    return parse_facts(FACTS)


@pytest.mark.parametrize("text", [CYCLES, CONSTANT_HEADS])
def test_sql_matches_the_evaluator(edges, text):
    program = parse_program(text)
    assert execute_sql(program, edges) == evaluate(program, edges)


def test_sql_numbers(edges):
    program = parse_program(COUNTING)
    assert execute_sql(program, edges) is False
    assert execute_sql(program, edges, n=3) is True


def test_sql_neq_ranges_over_the_domain(edges):
    program = parse_program("%@ goal goal/1\n%@ edb E/2\ngoal(X) :- E(X, Y), Neq(X, c).\n")
    assert execute_sql(program, edges) == {("a",), ("b",)}


def test_keywords_are_renamed(edges):
    program = parse_program("%@ goal goal/1\n%@ edb E/2\nSelect(X) :- E(X, Y).\ngoal(X) :- Select(X).\n")
    statements, renamed = sql_statements(program, db=edges)
    assert renamed == [("Select", "Select_r")]
    assert any(statement.startswith("CREATE VIEW Select_r AS") for statement in statements)
    assert execute_sql(program, edges) == {("a",), ("b",), ("c",)}


def test_sql_script_layout():
    program = parse_program(CYCLES)
    text = to_sql(program)
    lines = text.splitlines()
    assert lines[0] == "-- goal goal/1, numbers 0..2"
    assert "CREATE TABLE E (c1 VARCHAR, c2 VARCHAR);" in lines
    assert "INSERT INTO Num VALUES ('#1'), ('#2');" in lines
    assert lines[-1] == "SELECT DISTINCT * FROM goal ORDER BY c1;"


def test_decoding_sql_values():
    assert decode_sql_value("#12") == 12
    assert decode_sql_value("a") == "a"
    assert decode_sql_value("#x") == "#x"


@pytest.mark.slow
def test_sql_runs_a_rewritten_program():
    normal, _ = to_normal_form(parse_tgds("A(X) -> exists Y: R(X, Y)."))
    db = parse_facts("A(a).")
    for query, expected in (("? :- R(X, Y), A(X).", True), ("? :- R(X, Y), A(Y).", False)):
        u = uniformize(normal, parse_query(query))
        program = build_program(u, RewriteParams(3, "reduced"))
        assert execute_sql(program, u.pad(db)) is expected


@pytest.mark.parametrize("text", [CYCLES, CONSTANT_HEADS])
def test_formula_agrees_with_the_evaluator(edges, text):
    program = parse_program(text)
    free, formula = to_fo(program)
    assert free == ("G1",)
    relations, domain = fo_structure(edges, program.numeric_size)
    expected = evaluate(program, edges)
    for value in domain:
        assert fo_holds(formula, relations, domain, {"G1": value}) == ((value,) in expected), value


def test_boolean_formula(edges):
    program = parse_program(COUNTING)
    free, formula = to_fo(program)
    assert free == ()
    assert not fo_holds(formula, *fo_structure(edges, 2), {})
    assert fo_holds(formula, *fo_structure(edges, 3), {})


def test_formula_text():
    text = to_fo_formula(parse_program(CONSTANT_HEADS))
    assert text.startswith("goal(G1) <-> ")
    assert "a = G1" in text
    assert text.endswith("\n")


# --- rewritten suite instances ---

def _suite_program(seed, variant):
    instance = gen_instance(seed, PROFILES["linear"])
    normal, _ = to_normal_form(instance.sigma)
    u = uniformize(normal, instance.query)
    steps = max(u.ell, max(len(cq.atoms) for cq in disjuncts_of(u.query_u)))
    return build_program(u, RewriteParams(steps, variant)), u.pad(instance.db)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_sql_agrees_on_rewritten_programs(seed):
    program, db = _suite_program(seed, "reduced")
    assert execute_sql(program, db) == evaluate(program, db)


def _matrix_holds(formula, relations, domain, env):
    body = formula.body if isinstance(formula, FoExists) else formula
    return fo_holds(body, relations, domain, env)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_formula_agrees_on_rewritten_programs(seed):
    program, db = _suite_program(seed, "wide")
    (rule,) = program.rules_for(program.goal)
    _, formula = to_fo(program)
    relations, domain = fo_structure(db, program.numeric_size)
    names = rule.variables()
    values = sorted(domain, key=str)
    rng = random.Random(seed)
    assignments = [{name: rng.choice(values) for name in names} for _ in range(3)]
    holds, witness = evaluate(program, db, trace=True)
    if holds:
        found = {name: witness[name] for name in names}
        assignments.append(found)
        for _ in range(3):
            changed = dict(found)
            changed[rng.choice(names)] = rng.choice(values)
            assignments.append(changed)
    # the goal rule's variables are the formula's V1..Vn in order of first use
    for assignment in assignments:
        env = {f"V{index}": assignment[name] for index, name in enumerate(names, start=1)}
        assert _matrix_holds(formula, relations, domain, env) == evaluate(program, db, fixed=assignment)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))

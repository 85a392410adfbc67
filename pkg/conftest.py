"""
Shared fixtures: the running example, a naive Datalog evaluator and an FO
model checker used as references by the test modules.
"""

import itertools
from pathlib import Path
from typing import Dict, Mapping, Set

import pytest

from ontoquery.emitters import FoAnd, FoAtom, FoEqual, FoExists, FoFalse, FoOr, FoTrue
from ontoquery.evaluator import stratify
from ontoquery.model import Database, DatalogProgram, NumericExtension
from ontoquery.normalizer import to_normal_form, uniformize
from ontoquery.parser import parse_facts, parse_query, parse_tgds

SAMPLES = Path(__file__).parent / "samples"

FIG1_TGDS = """
R1(X, Y) -> exists Z: R4(X, Y, Z).
R2(Y, Z) -> exists X: R4(X, Y, Z).
R3(X, Z) -> exists Y: R4(X, Y, Z).
R4(X1, Y1, Z1), R4(X2, Y2, Z2) -> R5(X1, Z2).
"""
FIG1_QUERY = "? :- R5(X, Y), R3(Y, X)."
FIG1_FACTS = "R1(a, b). R1(c, d). R2(e, g). R3(g, a). R3(g, h)."

# i r f x1 x2 x3 s c1 c2 for the six-step witness
FIG1_ROWS = [
    [1, 1, 0, "a", "b", "a", 0, 0, 0],
    [2, 4, 1, "a", "b", 2, 1, 1, 1],
    [3, 2, 0, "e", "g", "e", 0, 0, 0],
    [4, 4, 1, 4, "e", "g", 2, 3, 3],
    [5, 5, 1, "a", "g", "a", 4, 2, 4],
    [6, 3, 0, "g", "a", "g", 0, 0, 0],
]


@pytest.fixture
def fig1_sigma():
    return parse_tgds(FIG1_TGDS)


@pytest.fixture
def fig1_query():
    return parse_query(FIG1_QUERY)


@pytest.fixture
def fig1_db():
    return parse_facts(FIG1_FACTS)


@pytest.fixture
def fig1_problem(fig1_sigma, fig1_query):
    normal, _ = to_normal_form(fig1_sigma)
    return uniformize(normal, fig1_query)


# --- naive reference evaluation ---

BASE = ("Num", "DNum", "Succ", "Lt", "Neq", "Zero", "One")


def _match_body(body, relations, binding):
    if not body:
        yield dict(binding)
        return
    atom, rest = body[0], body[1:]
    for row in relations.get(atom.predicate, ()):
        if len(row) != atom.arity:
            continue
        extended = dict(binding)
        ok = True
        for arg, value in zip(atom.args, row):
            if arg.is_variable:
                if extended.setdefault(arg.value, value) != value:
                    ok = False
                    break
            elif arg.value != value:
                ok = False
                break
        if ok:
            yield from _match_body(rest, relations, extended)


def naive_relations(program: DatalogProgram, db: Database, n=None) -> Dict[str, Set[tuple]]:
    """Every relation of the program, computed rule by rule with nested loops."""
    ext = NumericExtension(n or program.numeric_size, db.domain)
    defined = set(program.idb())
    relations: Dict[str, Set[tuple]] = {}
    for name in BASE:
        if name not in defined:
            relations[name] = set(ext.relation(name))
    for name in db.schema:
        relations[name] = set(db.relation(name))
    for name in stratify(program):
        rows = set()
        for rule in program.rules_for(name):
            for binding in _match_body(rule.body, relations, {}):
                rows.add(tuple(binding[arg.value] if arg.is_variable else arg.value for arg in rule.head.args))
        relations[name] = rows
    return relations


def naive_evaluate(program: DatalogProgram, db: Database, n=None):
    rows = naive_relations(program, db, n).get(program.goal, set())
    if program.goal_arity == 0:
        return bool(rows)
    return rows


# --- FO model checking ---

def fo_holds(formula, relations: Mapping[str, Set[tuple]], domain, env: Mapping[str, object]) -> bool:
    def value(term):
        return env[term.value] if term.is_variable else term.value

    if isinstance(formula, FoTrue):
        return True
    if isinstance(formula, FoFalse):
        return False
    if isinstance(formula, FoAtom):
        return tuple(value(arg) for arg in formula.atom.args) in relations.get(formula.atom.predicate, set())
    if isinstance(formula, FoEqual):
        return value(formula.left) == value(formula.right)
    if isinstance(formula, FoAnd):
        return all(fo_holds(part, relations, domain, env) for part in formula.parts)
    if isinstance(formula, FoOr):
        return any(fo_holds(part, relations, domain, env) for part in formula.parts)
    if isinstance(formula, FoExists):
        for values in itertools.product(sorted(domain, key=str), repeat=len(formula.variables)):
            inner = dict(env)
            inner.update(zip(formula.variables, values))
            if fo_holds(formula.body, relations, domain, inner):
                return True
        return False
    raise TypeError(type(formula).__name__)


def fo_structure(db: Database, n: int):
    """Base relations and domain an inlined formula is checked against."""
    ext = NumericExtension(n, db.domain)
    relations = {name: set(ext.relation(name)) for name in BASE}
    for name in db.schema:
        relations[name] = set(db.relation(name))
    return relations, ext.dnum

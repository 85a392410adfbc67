#!/usr/bin/env python3
"""
Tests for the DL-Lite frontend
"""

import random

import pytest

from conftest import SAMPLES
from ontoquery.chase import certain_answers_oracle, entails
from ontoquery.dllite import (
    ConceptDisjointness,
    ConceptIncl,
    ExistRestrLeft,
    ExistRestrLeftInv,
    ExistRestrRight,
    ExistRestrRightInv,
    RoleIncl,
    RoleInclInv,
    check_consistency,
    compile_tbox,
    is_linear,
    negative_constraint_query,
    parse_tbox,
)
from ontoquery.errors import ParseError, UnsupportedAxiom
from ontoquery.harness import Instance, verify
from ontoquery.model import ConjunctiveQuery, RewriteParams, UnionQuery
from ontoquery.parser import parse_facts, parse_query


def test_axiom_forms():
    axioms = parse_tbox(
        "role R, S.\n"
        "A sub B.\n"
        "A sub exists R.\n"
        "A sub exists inv(R).\n"
        "exists R sub B.\n"
        "exists inv(R) sub B.\n"
        "R sub S.\n"
        "R sub inv(S).\n"
        "inv(R) sub S.\n"
        "inv(R) sub inv(S).\n"
        "A sub not B.\n"
    )
    assert axioms == [
        ConceptIncl("A", "B"),
        ExistRestrRight("A", "R"),
        ExistRestrRightInv("A", "R"),
        ExistRestrLeft("R", "B"),
        ExistRestrLeftInv("R", "B"),
        RoleIncl("R", "S"),
        RoleInclInv("R", "S"),
        RoleInclInv("R", "S"),
        RoleIncl("R", "S"),
        ConceptDisjointness("A", "B"),
    ]


def test_roles_are_inferred_from_exists():
    axioms = parse_tbox("A sub exists R.\nexists inv(S) sub B.\nR sub S.\n")
    assert axioms[2] == RoleIncl("R", "S")
    with pytest.raises(UnsupportedAxiom):
        parse_tbox("A sub exists R.\nR sub B.\n")


def test_compiled_dependencies():
    sigma = compile_tbox(parse_tbox((SAMPLES / "university.dlt").read_text()))
    assert [str(tgd) for tgd in sigma] == [
        "Professor(X) -> exists Y: teaches(X,Y).",
        "teaches(X,Y) -> Course(Y).",
        "teaches(X,Y) -> taughtBy(Y,X).",
        "Professor(X) -> Person(X).",
    ]
    assert is_linear(sigma)


def test_university_example():
    axioms = parse_tbox((SAMPLES / "university.dlt").read_text())
    db = parse_facts((SAMPLES / "university.facts").read_text())
    query = parse_query((SAMPLES / "university.cq").read_text())
    assert entails(db, compile_tbox(axioms), query, 3).holds
    answers = certain_answers_oracle(db, compile_tbox(axioms), parse_query("ans(X) :- taughtBy(X, Y)."), 3)
    assert answers == {("logic",)}
    assert check_consistency(db, axioms, 3)
    clashing = parse_facts("Professor(ada). teaches(alan, logic). Professor(logic).")
    assert not check_consistency(clashing, axioms, 3)


def test_negative_constraint_queries():
    assert negative_constraint_query(parse_tbox("A sub B.")) is None
    single = negative_constraint_query(parse_tbox("A sub not B."))
    assert isinstance(single, ConjunctiveQuery) and str(single) == "? :- A(X), B(X)."
    union = negative_constraint_query(parse_tbox("A sub not B.\nB sub not C."))
    assert isinstance(union, UnionQuery) and len(union.disjuncts) == 2


def test_unsupported_forms():
    with pytest.raises(UnsupportedAxiom):
        parse_tbox("exists R sub exists S.")
    with pytest.raises(UnsupportedAxiom):
        parse_tbox("role R.\nR sub not S.")
    with pytest.raises(UnsupportedAxiom):
        parse_tbox("role R.\nR sub A.\nA sub B.")


def test_roles_cannot_stand_in_for_concepts():
    with pytest.raises(UnsupportedAxiom):
        parse_tbox("A sub exists R.\nR sub not B.")
    with pytest.raises(UnsupportedAxiom):
        parse_tbox("A sub exists R.\nexists S sub R.")


def test_malformed_axioms():
    with pytest.raises(ParseError) as excinfo:
        parse_tbox("A sub B.\nA sub sub B.")
    assert excinfo.value.span.line == 2
    with pytest.raises(ParseError):
        parse_tbox("A sub B")


# --- random TBoxes against a direct saturation ---

CONCEPTS = ("A", "B", "C")
ROLES = ("R", "S")
INDIVIDUALS = ("i1", "i2", "i3")


def _random_axiom(rng):
    a, b = rng.choice(CONCEPTS), rng.choice(CONCEPTS)
    r, s = rng.choice(ROLES), rng.choice(ROLES)
    return rng.choice(
        [
            f"{a} sub {b}.",
            f"{a} sub exists {r}.",
            f"{a} sub exists inv({r}).",
            f"exists {r} sub {a}.",
            f"exists inv({r}) sub {a}.",
            f"{r} sub {s}.",
            f"{r} sub inv({s}).",
            f"inv({r}) sub {s}.",
        ]
    )


def _random_facts(rng):
    facts = []
    for _ in range(3):
        if rng.random() < 0.5:
            facts.append(f"{rng.choice(CONCEPTS)}({rng.choice(INDIVIDUALS)}).")
        else:
            facts.append(f"{rng.choice(ROLES)}({rng.choice(INDIVIDUALS)}, {rng.choice(INDIVIDUALS)}).")
    return " ".join(facts)


def _saturate(axioms, db):
    """Concept memberships of named individuals from concepts and the role directions they take part in."""
    concepts = {x: set() for x in INDIVIDUALS}
    roles = {x: set() for x in INDIVIDUALS}
    for fact in db.facts:
        values = [arg.value for arg in fact.args]
        if fact.predicate in CONCEPTS:
            concepts[values[0]].add(fact.predicate)
        else:
            roles[values[0]].add((fact.predicate, False))
            roles[values[1]].add((fact.predicate, True))
    changed = True
    while changed:
        changed = False
        for x in INDIVIDUALS:
            before = (len(concepts[x]), len(roles[x]))
            for axiom in axioms:
                if isinstance(axiom, ConceptIncl) and axiom.sub in concepts[x]:
                    concepts[x].add(axiom.sup)
                elif isinstance(axiom, ExistRestrRight) and axiom.concept in concepts[x]:
                    roles[x].add((axiom.role, False))
                elif isinstance(axiom, ExistRestrRightInv) and axiom.concept in concepts[x]:
                    roles[x].add((axiom.role, True))
                elif isinstance(axiom, ExistRestrLeft) and (axiom.role, False) in roles[x]:
                    concepts[x].add(axiom.concept)
                elif isinstance(axiom, ExistRestrLeftInv) and (axiom.role, True) in roles[x]:
                    concepts[x].add(axiom.concept)
                elif isinstance(axiom, RoleIncl):
                    roles[x] |= {(axiom.sup, inverse) for role, inverse in set(roles[x]) if role == axiom.sub}
                elif isinstance(axiom, RoleInclInv):
                    roles[x] |= {(axiom.sup, not inverse) for role, inverse in set(roles[x]) if role == axiom.sub}
            changed = changed or before != (len(concepts[x]), len(roles[x]))
    return concepts


def _random_tbox(seed):
    rng = random.Random(seed)
    text = "role R, S.\n" + "\n".join(_random_axiom(rng) for _ in range(4))
    return text, parse_tbox(text), parse_facts(_random_facts(rng))


@pytest.mark.parametrize("seed", range(50))
def test_random_tboxes_compile_to_linear_binary_rules(seed):
    _, axioms, _ = _random_tbox(seed)
    sigma = compile_tbox(axioms)
    assert len(sigma) == 4
    assert is_linear(sigma)
    assert max(atom.arity for tgd in sigma for atom in tgd.body + tgd.head) <= 2


@pytest.mark.parametrize("seed", range(50))
def test_random_tboxes_match_saturation(seed):
    text, axioms, db = _random_tbox(seed)
    sigma = compile_tbox(axioms)
    expected = _saturate(axioms, db)
    for concept in CONCEPTS:
        query = parse_query(f"ans(X) :- {concept}(X).")
        answers = certain_answers_oracle(db, sigma, query, 12)
        assert answers == {(x,) for x in INDIVIDUALS if concept in expected[x]}, (text, concept)


# --- rewritten programs against the chase ---

def test_existential_successor_reaches_a_concept():
    axioms = parse_tbox("A sub exists R.\nexists inv(R) sub B.\n")
    instance = Instance(0, tuple(compile_tbox(axioms)), parse_facts("A(a)."), parse_query("? :- B(X)."))
    report = verify(instance, RewriteParams(2), ("wide", "reduced"))
    assert report.oracle == "true"
    assert report.answers == {"wide": "true", "reduced": "true"}
    assert report.agree, report.failures
    missing = Instance(1, instance.sigma, parse_facts("B(a)."), parse_query("? :- A(X)."))
    assert verify(missing, RewriteParams(2), ("reduced",)).answers == {"reduced": "false"}


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_rewritten_tboxes_agree_with_the_chase(seed):
    text, axioms, db = _random_tbox(seed)
    sigma = compile_tbox(axioms)
    (head,) = sigma[-1].head
    query = parse_query(f"? :- {head.predicate}(X, Y)." if head.arity == 2 else f"? :- {head.predicate}(X).")
    report = verify(Instance(seed, tuple(sigma), db, query), RewriteParams(2), ("reduced",))
    assert report.oracle in ("true", "false"), text
    assert report.agree, (text, report.failures)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))

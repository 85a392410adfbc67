#!/usr/bin/env python3
"""
Tests for the core logical types
"""

import pytest

from ontoquery.errors import RewriteError, ValidationError
from ontoquery.model import (
    Atom,
    ConjunctiveQuery,
    Database,
    DatalogProgram,
    NumericExtension,
    RewriteParams,
    Rule,
    Term,
    Tgd,
    UnionQuery,
    Variant,
    alpha_equivalent,
    canonicalize,
    signature,
)


def test_terms_validate_their_shape():
    assert Term.var("X1").is_variable
    assert Term.const("a").is_constant
    assert Term.num(0).is_number
    with pytest.raises(ValidationError):
        Term.var("x")
    with pytest.raises(ValidationError):
        Term.num(-1)
    with pytest.raises(ValidationError):
        Term.const("12")
    assert Term.const("12", fresh_copy=True).value == "12"


def test_atom_shorthand_and_printing():
    atom = Atom.of("R", "X", "a", 3)
    assert atom.args == (Term.var("X"), Term.const("a"), Term.num(3))
    assert str(atom) == "R(X,a,3)"
    assert str(Atom("goal")) == "goal"
    assert str(Atom.of("R", "new york")) == 'R("new york")'


def test_tgd_rejects_unsafe_heads_and_constants():
    with pytest.raises(ValidationError):
        Tgd((Atom.of("A", "X"),), (Atom.of("B", "Y"),))
    with pytest.raises(ValidationError):
        Tgd((Atom.of("A", "a"),), (Atom.of("B", "a"),))
    with pytest.raises(ValidationError):
        Tgd((Atom.of("A", "X"),), (Atom.of("B", "X"),), ("X",))


def test_tgd_shape_predicates():
    linear = Tgd((Atom.of("A", "X"),), (Atom.of("R", "X", "Y"),), ("Y",))
    assert linear.is_linear and linear.is_normal_form
    assert linear.frontier() == ["X"]
    wide = Tgd(
        (Atom.of("A", "X"), Atom.of("B", "X")),
        (Atom.of("R", "X", "Y"), Atom.of("S", "Y", "Z")),
        ("Y", "Z"),
    )
    assert not wide.is_linear and not wide.is_normal_form
    assert wide.size() == 4


def test_query_output_variables_must_occur():
    with pytest.raises(ValidationError):
        ConjunctiveQuery((Atom.of("R", "X"),), ("Y",))
    cq = ConjunctiveQuery((Atom.of("R", "X", "Y"),), ("X",), "ans")
    assert cq.arity == 1 and not cq.is_boolean
    assert str(cq) == "ans(X) :- R(X,Y)."


def test_union_disjuncts_share_arity():
    with pytest.raises(ValidationError):
        UnionQuery((
            ConjunctiveQuery((Atom.of("R", "X"),), ("X",)),
            ConjunctiveQuery((Atom.of("R", "X"),)),
        ))


def test_database_schema_and_domain():
    db = Database([Atom.of("R", "a", "b"), Atom.of("S", "c")])
    assert db.schema == {"R": 2, "S": 1}
    assert db.domain == {"a", "b", "c"}
    assert db.relation("R") == {("a", "b")}
    assert db.relation("missing") == frozenset()
    with pytest.raises(ValidationError):
        Database([Atom.of("R", "a"), Atom.of("R", "a", "b")])
    with pytest.raises(ValidationError):
        Database([Atom.of("R", "X")])


def test_numeric_extension_relations():
    ext = NumericExtension(3, ["a"])
    assert ext.num == {1, 2, 3}
    assert ext.dnum == {0, 1, 2, 3, "a"}
    assert (2, 3) in ext.relation("Succ")
    assert (0, 3) in ext.relation("Lt") and (3, 3) not in ext.relation("Lt")
    assert len(ext.relation("Neq")) == 5 * 4
    with pytest.raises(ValidationError):
        NumericExtension(0)


def test_rules_must_be_safe():
    with pytest.raises(ValidationError):
        Rule(Atom.of("P", "X"), (Atom.of("Q", "Y"),))
    assert str(Rule(Atom.of("P", 0))) == "P(0)."


def test_program_dependency_graph():
    program = DatalogProgram(
        (
            Rule(Atom.of("P", "X"), (Atom.of("E", "X"),)),
            Rule(Atom("goal"), (Atom.of("P", "X"),)),
        ),
        edb=frozenset({"E"}),
    )
    assert program.idb() == ["P", "goal"]
    assert program.is_nonrecursive()
    assert program.max_arity() == 1
    assert program.atom_count() == 4
    recursive = program.with_rules(program.rules + (Rule(Atom.of("P", "X"), (Atom.of("P", "X"),)),))
    assert not recursive.is_nonrecursive()


def test_goal_arity_must_match_its_uses():
    with pytest.raises(ValidationError):
        DatalogProgram((Rule(Atom.of("goal", "X"), (Atom.of("E", "X"),)),), goal_arity=0)


def test_rewrite_params():
    params = RewriteParams(6, "reduced")
    assert params.variant is Variant.REDUCED
    assert params.with_variant("bitvec").variant is Variant.BITVEC
    params.check_bound(4, 2)
    with pytest.raises(RewriteError):
        params.check_bound(7, 2)
    with pytest.raises(RewriteError):
        RewriteParams(0)
    with pytest.raises(ValidationError):
        Variant.parse("narrow")


def test_signature_detects_conflicts():
    tgd = Tgd((Atom.of("R", "X", "Y"),), (Atom.of("S", "X"),))
    assert signature([tgd]) == {"R": 2, "S": 1}
    with pytest.raises(ValidationError):
        signature([tgd], ConjunctiveQuery((Atom.of("S", "X", "Y"),)))


def test_alpha_equivalence():
    left = Tgd((Atom.of("R", "X", "Y"),), (Atom.of("S", "Y", "Z"),), ("Z",))
    right = Tgd((Atom.of("R", "A", "B"),), (Atom.of("S", "B", "C"),), ("C",))
    other = Tgd((Atom.of("R", "A", "B"),), (Atom.of("S", "A", "C"),), ("C",))
    assert alpha_equivalent(left, right)
    assert not alpha_equivalent(left, other)
    assert canonicalize(left).variables() == ["V0", "V1", "V2"]


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))

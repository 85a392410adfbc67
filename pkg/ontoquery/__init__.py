"""
ontoquery - rewriting ontology-mediated queries into nonrecursive Datalog.

Dependencies and a conjunctive query are normalized, padded to a uniform
shape and compiled into a Datalog program that guesses a bounded chase
sequence. Programs come in three variants, can be evaluated directly or
emitted as SQL or first-order formulas, and are checked against a chase
oracle.
"""

from .chase import certain_answers_oracle, chase_to_level, entails, format_trace, validate_sequence
from .config import Settings
from .dllite import check_consistency, compile_tbox, is_linear, negative_constraint_query, parse_tbox
from .emitters import execute_sql, to_fo, to_fo_formula, to_sql
from .errors import (
    ConfigError,
    EvaluationError,
    OntoQueryError,
    ParseError,
    RecursionDetected,
    ResourceLimitExceeded,
    RewriteError,
    UnknownPredicate,
    UnsupportedAxiom,
    ValidationError,
)
from .evaluator import evaluate
from .harness import Profile, gen_instance, run_suite, verify
from .model import (
    Atom,
    ConjunctiveQuery,
    Database,
    DatalogProgram,
    RewriteParams,
    Rule,
    Term,
    Tgd,
    UnionQuery,
    Variant,
)
from .normalizer import pad_database, to_normal_form, uniformize
from .parser import parse_facts, parse_program, parse_query, parse_tgds, serialize
from .rewriter import build_program, program_stats, rewrite_certain_answers

__all__ = [
    "Atom",
    "ConfigError",
    "ConjunctiveQuery",
    "Database",
    "DatalogProgram",
    "EvaluationError",
    "OntoQueryError",
    "ParseError",
    "Profile",
    "RecursionDetected",
    "ResourceLimitExceeded",
    "RewriteError",
    "RewriteParams",
    "Rule",
    "Settings",
    "Term",
    "Tgd",
    "UnionQuery",
    "UnknownPredicate",
    "UnsupportedAxiom",
    "ValidationError",
    "Variant",
    "build_program",
    "certain_answers_oracle",
    "chase_to_level",
    "check_consistency",
    "compile_tbox",
    "entails",
    "evaluate",
    "execute_sql",
    "format_trace",
    "gen_instance",
    "is_linear",
    "negative_constraint_query",
    "pad_database",
    "parse_facts",
    "parse_program",
    "parse_query",
    "parse_tbox",
    "parse_tgds",
    "program_stats",
    "rewrite_certain_answers",
    "run_suite",
    "serialize",
    "to_fo",
    "to_fo_formula",
    "to_normal_form",
    "to_sql",
    "uniformize",
    "validate_sequence",
    "verify",
]

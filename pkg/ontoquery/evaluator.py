"""
Evaluation of nonrecursive Datalog programs over the numeric extension of a database.

Predicates are processed in dependency order. Small intensional relations
are stored; predicates whose estimated extension is too large stay virtual
and their atoms are expanded rule by rule while searching. Builtin predicates
(Lt, Succ, Neq and the gadgets) are never stored: they act as filters with
a fixed meaning, whatever rules the program gives for them.
"""

from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from .builtins import BuiltinPredicate, is_builtin, make_builtin
from .errors import EvaluationError, RecursionDetected, UnknownPredicate
from .log import get_logger
from .model import Atom, Database, DatalogProgram, NumericExtension, Rule, Term
from .solver import (
    Alternative,
    BuiltinConstraint,
    Constraint,
    Disjunction,
    Inconsistent,
    Relation,
    SearchState,
    Solver,
    TableConstraint,
    Value,
)

logger = get_logger(__name__)

RESERVED = ("Num", "Succ", "Lt", "Neq", "Zero", "One")
EXTENSION_TABLES = ("Num", "Zero", "One", "DNum")

Answer = Union[bool, Set[Tuple[Value, ...]]]


def build_extension(db: Database, n: int) -> NumericExtension:
    return NumericExtension(n, db.domain)


def stratify(program: DatalogProgram) -> List[str]:
    """Intensional predicates in a dependency-respecting order."""
    graph = program.dependency_graph()
    if not nx.is_directed_acyclic_graph(graph):
        raise RecursionDetected(nx.find_cycle(graph))
    idb = set(program.idb())
    return [name for name in nx.lexicographical_topological_sort(graph) if name in idb]


class ConstraintBuilder:
    """Turns rule bodies into solver constraints against the current store."""

    def __init__(self, ext: NumericExtension, universe: FrozenSet[Value]):
        self.ext = ext
        self.universe = universe
        self.tables: Dict[str, Relation] = {}
        self.virtual: Dict[str, List[Alternative]] = {}
        self._builtins: Dict[Tuple[str, int], BuiltinPredicate] = {}

    def builtin(self, name: str, arity: int) -> BuiltinPredicate:
        key = (name, arity)
        if key not in self._builtins:
            self._builtins[key] = make_builtin(name, arity, self.ext)
        return self._builtins[key]

    def constraint(self, atom: Atom) -> Constraint:
        if is_builtin(atom.predicate):
            return BuiltinConstraint(self.builtin(atom.predicate, atom.arity), atom.args)
        if atom.predicate in self.tables:
            return TableConstraint(self.tables[atom.predicate], atom.args)
        if atom.predicate in self.virtual:
            return Disjunction(atom.predicate, atom.args, self.virtual[atom.predicate], self)
        raise UnknownPredicate(atom.predicate)

    def constraints_for(self, atoms: Sequence[Atom]) -> List[Constraint]:
        return [self.constraint(atom) for atom in atoms]

    def state_for(self, rule: Rule, solver: Solver, protected: FrozenSet[str] = frozenset()) -> SearchState:
        state = SearchState({name: self.universe for name in rule.variables()}, protected, solver)
        state.add_constraints(self.constraints_for(rule.body))
        return state


def _head_tuple(head: Atom, binding: Mapping[str, Value]) -> Tuple[Value, ...]:
    return tuple(binding[arg.value] if arg.is_variable else arg.value for arg in head.args)


def _estimate(rule: Rule, builder: ConstraintBuilder, solver: Solver) -> int:
    state = builder.state_for(rule, solver, frozenset(rule.head.variables()))
    try:
        state.propagate()
    except Inconsistent:
        return 0
    size = 1
    for name in dict.fromkeys(rule.head.variables()):
        size *= len(state.domains[name])
    return size


def _matching(relation: Relation, atom: Atom, binding: Mapping[str, Value]) -> Iterator[Dict[str, Value]]:
    rows: Iterable[tuple] = relation.tuples
    for position, arg in enumerate(atom.args):
        value = binding.get(arg.value) if arg.is_variable else arg.value
        if value is not None:
            rows = relation.bucket(position, value)
            break
    for row in rows:
        if len(row) != atom.arity:
            continue
        extended = dict(binding)
        for arg, value in zip(atom.args, row):
            if not arg.is_variable:
                if arg.value != value:
                    break
            elif extended.setdefault(arg.value, value) != value:
                break
        else:
            yield extended


def _join(rule: Rule, tables: Mapping[str, Relation]) -> Optional[Set[Tuple[Value, ...]]]:
    """Head tuples of a rule over stored relations only, joined atom by atom; None for other rules."""
    if any(atom.predicate not in tables or is_builtin(atom.predicate) for atom in rule.body):
        return None
    if not set(rule.head.variables()) <= {name for atom in rule.body for name in atom.variables()}:
        return None
    bindings: List[Dict[str, Value]] = [{}]
    for atom in rule.body:
        bindings = [extended for binding in bindings for extended in _matching(tables[atom.predicate], atom, binding)]
        if not bindings:
            return set()
    return {_head_tuple(rule.head, binding) for binding in bindings}


def _derive(rule: Rule, builder: ConstraintBuilder, solver: Solver) -> Set[Tuple[Value, ...]]:
    joined = _join(rule, builder.tables)
    if joined is not None:
        return joined
    head_vars = list(dict.fromkeys(rule.head.variables()))
    state = builder.state_for(rule, solver)
    return {_head_tuple(rule.head, binding) for binding in solver.solutions(state, head_vars)}


def _check_predicates(program: DatalogProgram, db: Database) -> None:
    defined = set(program.idb())
    for rule in program.rules:
        if rule.head.predicate in RESERVED:
            raise EvaluationError(f"{rule.head.predicate} belongs to the numeric extension and cannot be defined")
    for atom in program.atoms():
        name = atom.predicate
        if name in defined or is_builtin(name) or name in EXTENSION_TABLES:
            continue
        if name in program.edb or name in db.schema:
            continue
        raise UnknownPredicate(name)


def evaluate(
    program: DatalogProgram,
    db: Database,
    n: Optional[int] = None,
    trace: bool = False,
    timeout: Optional[float] = None,
    materialize_limit: int = 20000,
    fixed: Optional[Mapping[str, Value]] = None,
):
    """Answer the goal of a nonrecursive program over db and the numbers 0..n.

    Returns a bool for a 0-ary goal and a set of tuples otherwise. With
    trace=True the result comes paired with the goal-body assignment that
    proved it (None when there is none). fixed pins goal-body variables to
    values before the search starts.
    """
    order = stratify(program)
    _check_predicates(program, db)
    ext = build_extension(db, n or program.numeric_size)
    constants = {arg.value for atom in program.atoms() for arg in atom.args if not arg.is_variable}
    builder = ConstraintBuilder(ext, frozenset(ext.dnum | constants))
    solver = Solver(timeout)

    for name in EXTENSION_TABLES:
        if name not in order:
            builder.tables[name] = Relation(name, ext.relation(name))
    for name in set(program.edb) | set(db.schema):
        if name not in order and not is_builtin(name):
            builder.tables[name] = Relation(name, db.relation(name))

    needed = nx.ancestors(program.dependency_graph(), program.goal)
    for name in order:
        if name == program.goal or name not in needed or is_builtin(name):
            continue
        rules = program.rules_for(name)
        estimate = sum(_estimate(rule, builder, solver) for rule in rules)
        if estimate <= materialize_limit:
            tuples: Set[Tuple[Value, ...]] = set()
            for rule in rules:
                tuples |= _derive(rule, builder, solver)
            builder.tables[name] = Relation(name, tuples)
            logger.debug("stored %s: %d tuples", name, len(tuples))
        else:
            builder.virtual[name] = [Alternative(rule.head, rule.body) for rule in rules]
            logger.debug("kept %s virtual (estimate %d over %d rules)", name, estimate, len(rules))

    result, witness = _answer_goal(program, builder, solver, trace, fixed or {})
    logger.info(
        "evaluated %s: %s (%d stored, %d virtual, %d search nodes)",
        program.goal,
        result if isinstance(result, bool) else f"{len(result)} tuples",
        len(builder.tables),
        len(builder.virtual),
        solver.nodes,
    )
    if trace:
        return result, witness
    return result


def _answer_goal(program, builder, solver, trace, fixed):
    boolean = program.goal_arity == 0
    answers: Set[Tuple[Value, ...]] = set()
    witness = None
    for rule in program.rules_for(program.goal):
        protected = frozenset(rule.variables()) if trace else frozenset()
        state = builder.state_for(rule, solver, protected)
        try:
            for name, value in fixed.items():
                if name in state.domains:
                    state.restrict(Term.var(name), {value})
        except Inconsistent:
            continue
        if boolean:
            found = solver.exists(state)
            if found is not None:
                return True, found
            continue
        head_vars = list(dict.fromkeys(rule.head.variables()))
        for binding in solver.solutions(state, head_vars):
            answers.add(_head_tuple(rule.head, binding))
    if boolean:
        return False, None
    return answers, witness

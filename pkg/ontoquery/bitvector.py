"""
Bit-vector form of a reduced program.

Every value position (numbers and domain constants alike) becomes `width`
positions: a number is written as its big-endian bits, a domain constant c
as (c, ..., c). Boolean gadget positions stay single. The numeric helper
relations are replaced by vector relations defined without recursion.
"""

from typing import Dict, List, Sequence, Set, Tuple

import networkx as nx

from .encoding import BitVectorLayout, bit_var
from .errors import RewriteError
from .log import get_logger
from .model import Atom, DatalogProgram, Rule, Term, Variant
from .rewriter import GOAL, gate_rules

logger = get_logger(__name__)

# predicate -> (vector predicate, value positions); other positions are Boolean
VECTOR_FORMS: Dict[str, Tuple[str, Tuple[int, ...]]] = {
    "Tp": ("TpV", ()),
    "IfEq": ("IfEqV", (0, 1)),
    "Lt": ("LtV", (0, 1)),
    "Neq": ("NeqV", (0, 1)),
    "Nat": ("NatV", (0,)),
    "Step": ("StepV", (0,)),
    "adom": ("adomV", (0,)),
    "DNum": ("DNumV", (0,)),
}
SCALAR_GATES = ("NotB", "OrB", "TrueB")


def _value_positions(atom: Atom) -> Tuple[int, ...]:
    _, positions = VECTOR_FORMS[atom.predicate]
    return positions or tuple(range(atom.arity))


class _Vectorizer:
    def __init__(self, layout: BitVectorLayout):
        self.layout = layout

    def expand(self, arg: Term, vectors: Set[str]) -> Tuple[Term, ...]:
        if arg.is_variable:
            if arg.value not in vectors:
                raise RewriteError(f"{arg} is used as a value but was typed Boolean")
            return tuple(Term.var(name) for name in self.layout.bits(arg.value))
        if arg.is_number:
            return tuple(Term.num(bit) for bit in self.layout.encode(arg.value))
        return (arg,) * self.layout.width

    def atom(self, atom: Atom, vectors: Set[str]) -> Atom:
        if atom.predicate in SCALAR_GATES:
            return atom
        if atom.predicate not in VECTOR_FORMS:
            raise RewriteError(f"no bit-vector form for {atom.predicate}")
        name, _ = VECTOR_FORMS[atom.predicate]
        positions = set(_value_positions(atom))
        args: List[Term] = []
        for position, arg in enumerate(atom.args):
            if position in positions:
                args.extend(self.expand(arg, vectors))
            else:
                args.append(arg)
        return Atom(name, tuple(args))


def _classify(rule: Rule) -> Tuple[List[str], Set[str]]:
    """Value variables in order of first use, and Boolean variables."""
    values: Dict[str, None] = {}
    booleans: Set[str] = set()
    for atom in rule.body:
        positions = set(_value_positions(atom)) if atom.predicate in VECTOR_FORMS else set()
        for position, arg in enumerate(atom.args):
            if not arg.is_variable:
                continue
            if position in positions:
                values.setdefault(arg.value, None)
            else:
                booleans.add(arg.value)
    mixed = booleans & set(values)
    if mixed:
        raise RewriteError(f"variables used both as values and as Booleans: {', '.join(sorted(mixed))}")
    return list(values), booleans


def vectorize_goal(rule: Rule, layout: BitVectorLayout) -> Rule:
    values, _ = _classify(rule)
    vectors = set(values)
    vectorizer = _Vectorizer(layout)
    body = [vectorizer.atom(atom, vectors) for atom in rule.body]
    body += [Atom("DNumV", vectorizer.expand(Term.var(name), vectors)) for name in values]
    head_args = []
    for arg in rule.head.args:
        if arg.is_variable and arg.value in vectors:
            head_args.append(Term.var(bit_var(arg.value, 0)))
        else:
            head_args.append(arg)
    return Rule(Atom(rule.head.predicate, tuple(head_args)), tuple(body))


def _vector(prefix: str, layout: BitVectorLayout) -> Tuple[Term, ...]:
    return tuple(Term.var(name) for name in layout.bits(prefix))


def _number(value: int, layout: BitVectorLayout) -> Tuple[Term, ...]:
    return tuple(Term.num(bit) for bit in layout.encode(value))


def vector_rules(
    relations: Sequence[str], a: int, n_steps: int, numeric_size: int, layout: BitVectorLayout
) -> List[Rule]:
    """Bit, NumV, NatV, StepV, adom, adomV, DNumV, LtV, NeqV, IfEqV and TpV."""
    w = layout.width
    x = Term.var("X")
    rules = [Rule(Atom("Bit", (x,)), (Atom("Zero", (x,)),)), Rule(Atom("Bit", (x,)), (Atom("One", (x,)),))]
    rules += [Rule(Atom("NumV", _number(v, layout))) for v in range(1, numeric_size + 1)]
    rules += [Rule(Atom("NatV", _number(v, layout))) for v in range(0, numeric_size + 1)]
    rules += [Rule(Atom("StepV", _number(v, layout))) for v in range(1, n_steps + 1)]

    xs = tuple(Term.var(f"X{p}") for p in range(1, a + 1))
    for name in relations:
        rules += [Rule(Atom("adom", (column,)), (Atom(name, xs),)) for column in xs]
    rules.append(Rule(Atom("adomV", (x,) * w), (Atom("adom", (x,)),)))

    vx, vy = _vector("X", layout), _vector("Y", layout)
    rules += [
        Rule(Atom("DNumV", vx), (Atom("NumV", vx),)),
        Rule(Atom("DNumV", (x,) * w), (Atom("adom", (x,)),)),
        Rule(Atom("DNumV", _number(0, layout))),
    ]

    # LtV: equal prefix, then 0 against 1
    for j in range(w):
        prefix = _vector("P", layout)[:j]
        left_rest = vx[j + 1:]
        right_rest = vy[j + 1:]
        head = Atom("LtV", prefix + (Term.num(0),) + left_rest + prefix + (Term.num(1),) + right_rest)
        body = tuple(Atom("Bit", (bit,)) for bit in prefix + left_rest + right_rest)
        rules.append(Rule(head, body))

    for p in range(w):
        rules.append(Rule(Atom("NeqV", vx + vy), (Atom("DNumV", vx), Atom("DNumV", vy), Atom("Neq", (vx[p], vy[p])))))
    rules += [
        Rule(Atom("IfEqV", vx + vx + (Term.num(1),)), (Atom("DNumV", vx),)),
        Rule(Atom("IfEqV", vx + vy + (Term.num(0),)), (Atom("NeqV", vx + vy),)),
    ]

    for number, name in enumerate(relations, start=1):
        head = Atom("TpV", _number(number, layout) + tuple(arg for column in xs for arg in (column,) * w))
        rules.append(Rule(head, (Atom(name, xs),)))
    columns = [_vector(f"X{p}", layout) for p in range(1, a + 1)]
    rules.append(
        Rule(
            Atom("TpV", _number(0, layout) + tuple(bit for column in columns for bit in column)),
            tuple(Atom("DNumV", column) for column in columns),
        )
    )
    rules += [rule for rule in gate_rules() if rule.head.predicate in SCALAR_GATES]
    return rules


def _prune(rules: Sequence[Rule], goal: str) -> List[Rule]:
    """Drop rules the goal does not depend on."""
    graph = nx.DiGraph()
    for rule in rules:
        graph.add_node(rule.head.predicate)
        for atom in rule.body:
            graph.add_edge(atom.predicate, rule.head.predicate)
    if goal not in graph:
        return []
    needed = nx.ancestors(graph, goal) | {goal}
    return [rule for rule in rules if rule.head.predicate in needed]


def to_bitvector(reduced: DatalogProgram, layout: BitVectorLayout) -> DatalogProgram:
    """Rewrite a reduced program so that every number is a vector of bits."""
    if reduced.variant != Variant.REDUCED.value:
        raise RewriteError(f"bit-vector form needs a reduced program, got {reduced.variant or 'unknown'}")
    if 2 ** layout.width <= reduced.numeric_size:
        raise RewriteError(f"{layout.width} bits cannot hold numbers up to {reduced.numeric_size}")
    a, n_steps = reduced.layout["a"], reduced.layout["n"]
    relations = sorted(reduced.edb)
    goal_rules = [vectorize_goal(rule, layout) for rule in reduced.rules_for(reduced.goal)]
    support = vector_rules(relations, a, n_steps, reduced.numeric_size, layout)
    rules = _prune(list(dict.fromkeys(support + goal_rules)), reduced.goal)
    metrics = dict(reduced.layout)
    metrics["width"] = layout.width
    program = DatalogProgram(
        tuple(rules),
        reduced.goal or GOAL,
        reduced.edb,
        reduced.goal_arity,
        reduced.numeric_size,
        Variant.BITVEC.value,
        metrics,
    )
    logger.info("bit-vector program: width %d, %d rules", layout.width, len(program.rules))
    return program

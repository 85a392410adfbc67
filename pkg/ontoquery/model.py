"""
Core logical types shared by every stage of the pipeline.

All values are immutable once built. Terms, atoms, dependencies and queries
validate themselves on construction and raise ValidationError when an
invariant is broken.
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx

from .errors import RewriteError, ValidationError

VARIABLE_NAME = re.compile(r"^[A-Z][A-Za-z0-9_]*$")
PLAIN_SYMBOL = re.compile(r"^[a-z][A-Za-z0-9_]*$")
KEYWORDS = frozenset({"exists"})
NUMERIC_LOOKING = re.compile(r"^[+-]?\d+$")


class TermKind(Enum):
    CONSTANT = "constant"
    VARIABLE = "variable"
    NUMBER = "number"
    NULL = "null"


@dataclass(frozen=True)
class Term:
    kind: TermKind
    value: Union[str, int]

    @classmethod
    def const(cls, symbol: str, fresh_copy: bool = False) -> "Term":
        if not isinstance(symbol, str) or symbol == "":
            raise ValidationError(f"constant symbol must be a nonempty string, got {symbol!r}")
        if NUMERIC_LOOKING.match(symbol) and not fresh_copy:
            raise ValidationError(
                f"constant {symbol!r} looks numeric; domain values are non-numeric "
                "unless numeric-domain mode is selected"
            )
        return cls(TermKind.CONSTANT, symbol)

    @classmethod
    def var(cls, name: str) -> "Term":
        if not isinstance(name, str) or not VARIABLE_NAME.match(name):
            raise ValidationError(f"variable names start with an uppercase letter, got {name!r}")
        return cls(TermKind.VARIABLE, name)

    @classmethod
    def num(cls, value: int) -> "Term":
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ValidationError(f"numbers are non-negative integers, got {value!r}")
        return cls(TermKind.NUMBER, value)

    @classmethod
    def null(cls, ident: int) -> "Term":
        if not isinstance(ident, int) or ident < 1:
            raise ValidationError(f"null ids are positive integers, got {ident!r}")
        return cls(TermKind.NULL, ident)

    @property
    def is_variable(self) -> bool:
        return self.kind is TermKind.VARIABLE

    @property
    def is_constant(self) -> bool:
        return self.kind is TermKind.CONSTANT

    @property
    def is_number(self) -> bool:
        return self.kind is TermKind.NUMBER

    @property
    def is_null(self) -> bool:
        return self.kind is TermKind.NULL

    def sort_key(self) -> Tuple[int, str]:
        order = {TermKind.CONSTANT: 0, TermKind.NUMBER: 1, TermKind.NULL: 2, TermKind.VARIABLE: 3}
        if isinstance(self.value, int):
            return (order[self.kind], f"{self.value:012d}")
        return (order[self.kind], self.value)

    def __str__(self):
        if self.kind is TermKind.CONSTANT:
            if PLAIN_SYMBOL.match(self.value) and self.value not in KEYWORDS:
                return self.value
            escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
            return f'"{escaped}"'
        if self.kind is TermKind.NULL:
            return f"_{self.value}"
        return str(self.value)

    def __repr__(self):
        return f"Term({self.kind.value}, {self.value!r})"


def term(value) -> Term:
    """Shorthand used by tests and builders: 'X' -> variable, 'a' -> constant, 3 -> number."""
    if isinstance(value, Term):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return Term.num(value)
    if isinstance(value, str) and value[:1].isupper():
        return Term.var(value)
    return Term.const(value)


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: Tuple[Term, ...] = ()

    def __post_init__(self):
        if not isinstance(self.predicate, str) or not self.predicate:
            raise ValidationError(f"predicate must be a nonempty string, got {self.predicate!r}")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @classmethod
    def of(cls, predicate: str, *args) -> "Atom":
        return cls(predicate, tuple(term(arg) for arg in args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> List[str]:
        seen: List[str] = []
        for arg in self.args:
            if arg.is_variable and arg.value not in seen:
                seen.append(arg.value)
        return seen

    @property
    def is_ground(self) -> bool:
        return not any(arg.is_variable for arg in self.args)

    def substitute(self, mapping: Mapping[str, Term]) -> "Atom":
        return Atom(
            self.predicate,
            tuple(mapping.get(arg.value, arg) if arg.is_variable else arg for arg in self.args),
        )

    def sort_key(self):
        return (self.predicate, tuple(arg.sort_key() for arg in self.args))

    def __str__(self):
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(arg) for arg in self.args)})"


def ordered_variables(atoms: Iterable[Atom]) -> List[str]:
    seen: Dict[str, None] = {}
    for atom in atoms:
        for name in atom.variables():
            seen.setdefault(name, None)
    return list(seen)


@dataclass(frozen=True)
class Tgd:
    body: Tuple[Atom, ...]
    head: Tuple[Atom, ...]
    existentials: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "existentials", tuple(self.existentials))
        if not self.body:
            raise ValidationError("a TGD needs a nonempty body")
        if not self.head:
            raise ValidationError("a TGD needs a nonempty head")
        for atom in self.body + self.head:
            if atom.arity == 0:
                raise ValidationError(f"TGD atoms need at least one argument: {atom}")
            for arg in atom.args:
                if not arg.is_variable:
                    raise ValidationError(
                        f"TGDs may only contain variables; {arg} in {atom} is not "
                        "(model constants with a unary EDB predicate instead)"
                    )
        body_vars = set(ordered_variables(self.body))
        head_vars = ordered_variables(self.head)
        for name in self.existentials:
            if name in body_vars:
                raise ValidationError(f"existential variable {name} also occurs in the body")
            if name not in head_vars:
                raise ValidationError(f"existential variable {name} does not occur in the head")
        if len(set(self.existentials)) != len(self.existentials):
            raise ValidationError("existential variables must be distinct")
        for name in head_vars:
            if name not in body_vars and name not in self.existentials:
                raise ValidationError(f"unsafe head variable {name}: not in the body and not existential")

    @property
    def is_normal_form(self) -> bool:
        return len(self.head) == 1 and len(self.existentials) <= 1

    @property
    def is_linear(self) -> bool:
        return len(self.body) == 1

    def frontier(self) -> List[str]:
        body_vars = set(ordered_variables(self.body))
        return [name for name in ordered_variables(self.head) if name in body_vars]

    def variables(self) -> List[str]:
        return ordered_variables(self.body + self.head)

    def size(self) -> int:
        return len(self.body) + len(self.head)

    def __str__(self):
        body = ", ".join(str(atom) for atom in self.body)
        head = ", ".join(str(atom) for atom in self.head)
        if self.existentials:
            return f"{body} -> exists {','.join(self.existentials)}: {head}."
        return f"{body} -> {head}."


@dataclass(frozen=True)
class ConjunctiveQuery:
    atoms: Tuple[Atom, ...]
    output_vars: Tuple[str, ...] = ()
    name: str = "q"

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "output_vars", tuple(self.output_vars))
        if not self.atoms:
            raise ValidationError("a conjunctive query needs at least one atom")
        for atom in self.atoms:
            if any(arg.is_null for arg in atom.args):
                raise ValidationError(f"queries cannot mention nulls: {atom}")
        body_vars = set(ordered_variables(self.atoms))
        for name in self.output_vars:
            if name not in body_vars:
                raise ValidationError(f"output variable {name} does not occur in the query body")

    @property
    def is_boolean(self) -> bool:
        return not self.output_vars

    @property
    def arity(self) -> int:
        return len(self.output_vars)

    def variables(self) -> List[str]:
        return ordered_variables(self.atoms)

    def head_text(self) -> str:
        if self.is_boolean:
            return "?"
        return f"{self.name}({','.join(self.output_vars)})"

    def __str__(self):
        return f"{self.head_text()} :- {', '.join(str(atom) for atom in self.atoms)}."


@dataclass(frozen=True)
class UnionQuery:
    disjuncts: Tuple[ConjunctiveQuery, ...]

    def __post_init__(self):
        object.__setattr__(self, "disjuncts", tuple(self.disjuncts))
        if not self.disjuncts:
            raise ValidationError("a union query needs at least one disjunct")
        arities = {cq.arity for cq in self.disjuncts}
        if len(arities) != 1:
            raise ValidationError("all disjuncts of a union query must share the output arity")

    @property
    def is_boolean(self) -> bool:
        return self.disjuncts[0].is_boolean

    @property
    def arity(self) -> int:
        return self.disjuncts[0].arity

    @property
    def name(self) -> str:
        return self.disjuncts[0].name

    def __str__(self):
        return "\n".join(str(cq) for cq in self.disjuncts)


Query = Union[ConjunctiveQuery, UnionQuery]


def disjuncts_of(query: Query) -> Tuple[ConjunctiveQuery, ...]:
    if isinstance(query, UnionQuery):
        return query.disjuncts
    return (query,)


class Database:
    """A finite set of ground facts over constants, with its inferred schema."""

    def __init__(self, facts: Iterable[Atom] = (), schema: Optional[Mapping[str, int]] = None):
        self._schema: Dict[str, int] = dict(schema or {})
        collected = set()
        for fact in facts:
            for arg in fact.args:
                if not arg.is_constant:
                    raise ValidationError(f"facts may only contain constants: {fact}")
            known = self._schema.get(fact.predicate)
            if known is None:
                self._schema[fact.predicate] = fact.arity
            elif known != fact.arity:
                raise ValidationError(
                    f"arity conflict for {fact.predicate}: {known} vs {fact.arity} in {fact}"
                )
            collected.add(fact)
        self._facts: FrozenSet[Atom] = frozenset(collected)
        self._relations: Dict[str, FrozenSet[Tuple[str, ...]]] = {}
        for fact in self._facts:
            self._relations.setdefault(fact.predicate, set()).add(tuple(arg.value for arg in fact.args))
        self._relations = {pred: frozenset(rows) for pred, rows in self._relations.items()}
        self._domain = frozenset(arg.value for fact in self._facts for arg in fact.args)

    @property
    def facts(self) -> FrozenSet[Atom]:
        return self._facts

    @property
    def schema(self) -> Dict[str, int]:
        return dict(self._schema)

    @property
    def domain(self) -> FrozenSet[str]:
        return self._domain

    @property
    def predicates(self) -> List[str]:
        return sorted(self._schema)

    def relation(self, predicate: str) -> FrozenSet[Tuple[str, ...]]:
        return self._relations.get(predicate, frozenset())

    def sorted_facts(self) -> List[Atom]:
        return sorted(self._facts, key=Atom.sort_key)

    def without(self, fact: Atom) -> "Database":
        return Database((f for f in self._facts if f != fact), self._schema)

    def __len__(self):
        return len(self._facts)

    def __iter__(self):
        return iter(self.sorted_facts())

    def __eq__(self, other):
        return isinstance(other, Database) and self._facts == other._facts and self._schema == other._schema

    def __repr__(self):
        return f"Database({len(self._facts)} facts, {len(self._schema)} relations)"


class NumericExtension:
    """The numbers 0..N with Num, DNum, Succ, Lt, Neq, Zero and One over a database domain."""

    RELATIONS = ("Num", "DNum", "Succ", "Lt", "Neq", "Zero", "One")

    def __init__(self, n_max: int, domain: Iterable[str] = ()):
        if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
            raise ValidationError(f"the numeric extension needs N >= 1, got {n_max!r}")
        self.n_max = n_max
        self.domain = frozenset(domain)
        self.num = frozenset(range(1, n_max + 1))
        self.naturals = frozenset(range(0, n_max + 1))
        self.dnum = self.domain | self.naturals
        self.succ = frozenset((i, i + 1) for i in range(0, n_max))
        self.lt = frozenset((i, j) for i in range(0, n_max + 1) for j in range(i + 1, n_max + 1))
        self.zero = frozenset({0})
        self.one = frozenset({1})

    def neq(self, left, right) -> bool:
        return left in self.dnum and right in self.dnum and left != right

    def relation(self, name: str) -> FrozenSet[tuple]:
        """Materialize one extension relation as a set of tuples (Neq is quadratic)"""
        if name == "Num":
            return frozenset((i,) for i in self.num)
        if name == "DNum":
            return frozenset((v,) for v in self.dnum)
        if name == "Succ":
            return self.succ
        if name == "Lt":
            return self.lt
        if name == "Zero":
            return frozenset({(0,)})
        if name == "One":
            return frozenset({(1,)})
        if name == "Neq":
            return frozenset((a, b) for a in self.dnum for b in self.dnum if a != b)
        raise KeyError(name)

    def __eq__(self, other):
        return (
            isinstance(other, NumericExtension)
            and self.n_max == other.n_max
            and self.domain == other.domain
        )

    def __hash__(self):
        return hash((self.n_max, self.domain))


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: Tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        body_vars = set(ordered_variables(self.body))
        for name in self.head.variables():
            if name not in body_vars:
                raise ValidationError(f"unsafe rule: head variable {name} of {self.head} not in body")

    def variables(self) -> List[str]:
        return ordered_variables((self.head,) + self.body)

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(atom) for atom in self.body)}."


@dataclass(frozen=True)
class DatalogProgram:
    rules: Tuple[Rule, ...]
    goal: str = "goal"
    edb: FrozenSet[str] = frozenset()
    goal_arity: int = 0
    numeric_size: int = 1
    variant: str = ""
    layout: Mapping[str, int] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "edb", frozenset(self.edb))
        arities = self.arities()
        if self.goal in arities and arities[self.goal] != self.goal_arity:
            raise ValidationError(
                f"goal {self.goal} is used with arity {arities[self.goal]}, declared {self.goal_arity}"
            )

    def atoms(self) -> Iterable[Atom]:
        for rule in self.rules:
            yield rule.head
            yield from rule.body

    def arities(self) -> Dict[str, int]:
        found: Dict[str, int] = {}
        for atom in self.atoms():
            known = found.setdefault(atom.predicate, atom.arity)
            if known != atom.arity:
                raise ValidationError(f"predicate {atom.predicate} used with arities {known} and {atom.arity}")
        return found

    def idb(self) -> List[str]:
        seen: List[str] = []
        for rule in self.rules:
            if rule.head.predicate not in seen:
                seen.append(rule.head.predicate)
        return seen

    def rules_for(self, predicate: str) -> List[Rule]:
        return [rule for rule in self.rules if rule.head.predicate == predicate]

    def max_arity(self) -> int:
        arities = self.arities()
        return max([self.goal_arity] + list(arities.values()))

    def dependency_graph(self) -> nx.DiGraph:
        """Edge body-predicate -> head-predicate for every rule"""
        graph = nx.DiGraph()
        graph.add_node(self.goal)
        for rule in self.rules:
            graph.add_node(rule.head.predicate)
            for atom in rule.body:
                graph.add_edge(atom.predicate, rule.head.predicate)
        return graph

    def is_nonrecursive(self) -> bool:
        return nx.is_directed_acyclic_graph(self.dependency_graph())

    def atom_count(self) -> int:
        return sum(1 + len(rule.body) for rule in self.rules)

    def with_rules(self, rules: Sequence[Rule]) -> "DatalogProgram":
        return DatalogProgram(
            tuple(rules), self.goal, self.edb, self.goal_arity, self.numeric_size, self.variant, dict(self.layout)
        )


def max_arity(program: DatalogProgram) -> int:
    return program.max_arity()


def check_nonrecursive(program: DatalogProgram) -> bool:
    return program.is_nonrecursive()


class Variant(Enum):
    WIDE = "wide"
    REDUCED = "reduced"
    BITVEC = "bitvec"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown variant {value!r}; expected wide, reduced or bitvec")


@dataclass(frozen=True)
class RewriteParams:
    n_steps: int
    variant: Variant = Variant.WIDE
    gamma_note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if isinstance(self.n_steps, bool) or not isinstance(self.n_steps, int) or self.n_steps < 1:
            raise RewriteError(f"the number of steps must be a positive integer, got {self.n_steps!r}")

    def check_bound(self, rule_count: int, query_atoms: int) -> None:
        """Raise unless N >= max(rule count, query atom count)"""
        bound = max(rule_count, query_atoms)
        if self.n_steps < bound:
            raise RewriteError(
                f"N={self.n_steps} is below max(|rules|, |query atoms|)={bound}"
            )

    def with_variant(self, variant) -> "RewriteParams":
        return RewriteParams(self.n_steps, Variant.parse(variant), self.gamma_note)


def signature(sigma: Sequence[Tgd], query: Optional[Query] = None) -> Dict[str, int]:
    """Predicate -> arity over the dependencies and the query, rejecting conflicts"""
    atoms: List[Atom] = []
    for tgd in sigma:
        atoms.extend(tgd.body)
        atoms.extend(tgd.head)
    if query is not None:
        for cq in disjuncts_of(query):
            atoms.extend(cq.atoms)
    found: Dict[str, int] = {}
    for atom in atoms:
        known = found.setdefault(atom.predicate, atom.arity)
        if known != atom.arity:
            raise ValidationError(f"arity conflict for {atom.predicate}: {known} vs {atom.arity}")
    return found


def joint_size(sigma: Sequence[Tgd], query: Query) -> int:
    """Total number of atoms in the dependencies and the query"""
    return sum(tgd.size() for tgd in sigma) + sum(len(cq.atoms) for cq in disjuncts_of(query))


def _rename(atoms: Iterable[Atom], mapping: Dict[str, str]) -> Tuple[Atom, ...]:
    renamed = []
    for atom in atoms:
        args = []
        for arg in atom.args:
            if arg.is_variable:
                if arg.value not in mapping:
                    mapping[arg.value] = f"V{len(mapping)}"
                args.append(Term.var(mapping[arg.value]))
            else:
                args.append(arg)
        renamed.append(Atom(atom.predicate, tuple(args)))
    return tuple(renamed)


def canonicalize(item):
    """Rename variables V0, V1, ... in order of first occurrence."""
    if isinstance(item, Tgd):
        mapping: Dict[str, str] = {}
        body = _rename(item.body, mapping)
        head = _rename(item.head, mapping)
        return Tgd(body, head, tuple(mapping[name] for name in item.existentials))
    if isinstance(item, ConjunctiveQuery):
        mapping = {}
        atoms = _rename(item.atoms, mapping)
        return ConjunctiveQuery(atoms, tuple(mapping[name] for name in item.output_vars), item.name)
    if isinstance(item, UnionQuery):
        return UnionQuery(tuple(canonicalize(cq) for cq in item.disjuncts))
    if isinstance(item, (list, tuple)):
        return tuple(canonicalize(element) for element in item)
    raise TypeError(f"cannot canonicalize {type(item).__name__}")


def alpha_equivalent(left, right) -> bool:
    return canonicalize(left) == canonicalize(right)

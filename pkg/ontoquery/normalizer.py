"""
Normal form and uniformization of dependency sets.

to_normal_form leaves every TGD with one head atom and at most one
existential variable. uniformize then pads every predicate to a common arity
and every body to a common number of atoms, which is the input shape the
rewriter expects.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Set, Tuple

from .errors import ValidationError
from .log import get_logger
from .model import (
    Atom,
    ConjunctiveQuery,
    Database,
    Query,
    Rule,
    Term,
    Tgd,
    UnionQuery,
    disjuncts_of,
    signature,
)

logger = get_logger(__name__)

FRESH_QUERY_NAMES = ("U", "V", "W")


@dataclass(frozen=True)
class NormalizationReport:
    aux_predicates: Tuple[str, ...]
    size_before: int
    size_after: int


@dataclass(frozen=True)
class UniformizedProblem:
    sigma_u: Tuple[Tgd, ...]
    query_u: Query
    a: int
    k: int
    original_arities: Mapping[str, int] = field(default_factory=dict, hash=False)
    padding_rules: Tuple[Rule, ...] = ()

    @property
    def relations(self) -> List[str]:
        """Predicates in numbering order; relation i is relations[i - 1]."""
        return sorted(self.original_arities)

    @property
    def relation_numbers(self) -> Dict[str, int]:
        return {name: index + 1 for index, name in enumerate(self.relations)}

    @property
    def m(self) -> int:
        return len(self.original_arities)

    @property
    def ell(self) -> int:
        return len(self.sigma_u)

    def pad(self, db: Database) -> Database:
        return pad_database(db, self.original_arities, self.a)


def _fresh_name(used: Set[str], counter: List[int]) -> str:
    while True:
        index, round_ = counter[0] % len(FRESH_QUERY_NAMES), counter[0] // len(FRESH_QUERY_NAMES)
        counter[0] += 1
        name = FRESH_QUERY_NAMES[index] + (str(round_) if round_ else "")
        if name not in used:
            used.add(name)
            return name


def _aux_name(used: Set[str], counter: List[int]) -> str:
    while True:
        counter[0] += 1
        name = f"Aux{counter[0]}"
        if name not in used:
            used.add(name)
            return name


def _size(sigma: Sequence[Tgd]) -> int:
    return sum(tgd.size() for tgd in sigma)


def to_normal_form(sigma: Sequence[Tgd]) -> Tuple[List[Tgd], NormalizationReport]:
    """Split heads and chain existentials through auxiliary predicates.

    A TGD with existentials Z1..Zn and frontier F becomes
    body -> exists Z1: Aux1(F,Z1), Aux1(F,Z1) -> exists Z2: Aux2(F,Z1,Z2), ...
    followed by one rule Auxn(F,Z1..Zn) -> h for every head atom h.
    """
    used = set(signature(sigma))
    counter = [0]
    aux: List[str] = []
    result: List[Tgd] = []
    for tgd in sigma:
        if tgd.is_normal_form:
            result.append(tgd)
            continue
        if not tgd.existentials:
            result.extend(Tgd(tgd.body, (head,)) for head in tgd.head)
            continue
        frontier = [Term.var(name) for name in tgd.frontier()]
        existentials = [name for name in _head_order(tgd) if name in tgd.existentials]
        body = tgd.body
        carried: List[Term] = []
        for name in existentials:
            carried.append(Term.var(name))
            predicate = _aux_name(used, counter)
            aux.append(predicate)
            link = Atom(predicate, tuple(frontier + carried))
            result.append(Tgd(body, (link,), (name,)))
            body = (link,)
        result.extend(Tgd(body, (head,)) for head in tgd.head)
    report = NormalizationReport(tuple(aux), _size(sigma), _size(result))
    logger.info(
        "normalized %d dependencies into %d (%d auxiliary predicates)", len(sigma), len(result), len(aux)
    )
    return result, report


def _head_order(tgd: Tgd) -> List[str]:
    seen: List[str] = []
    for atom in tgd.head:
        for name in atom.variables():
            if name not in seen:
                seen.append(name)
    return seen


def _pad_atom(atom: Atom, width: int) -> Atom:
    if atom.arity >= width:
        return atom
    return Atom(atom.predicate, atom.args + (atom.args[0],) * (width - atom.arity))


def _pad_query(cq: ConjunctiveQuery, width: int) -> ConjunctiveQuery:
    used = set(cq.variables())
    counter = [0]
    atoms = []
    for atom in cq.atoms:
        extra = tuple(Term.var(_fresh_name(used, counter)) for _ in range(width - atom.arity))
        atoms.append(Atom(atom.predicate, atom.args + extra))
    return ConjunctiveQuery(tuple(atoms), cq.output_vars, cq.name)


def uniformize(sigma: Sequence[Tgd], query: Query) -> UniformizedProblem:
    """Pad predicates to arity a and bodies to k atoms.

    Dependency atoms repeat their first argument, short bodies repeat their
    first atom, and query atoms get fresh variables so no join is added.
    """
    for tgd in sigma:
        if not tgd.is_normal_form:
            raise ValidationError(f"uniformize needs normal-form dependencies, got {tgd}")
    for cq in disjuncts_of(query):
        for atom in cq.atoms:
            if atom.arity == 0:
                raise ValidationError(f"query atoms need at least one argument: {atom}")
    arities = signature(sigma, query)
    a = max(arities.values())
    k = max([len(tgd.body) for tgd in sigma] + [1])
    sigma_u = []
    for tgd in sigma:
        body = tuple(_pad_atom(atom, a) for atom in tgd.body)
        body = body + (body[0],) * (k - len(body))
        head = tuple(_pad_atom(atom, a) for atom in tgd.head)
        sigma_u.append(Tgd(body, head, tgd.existentials))
    padded = [_pad_query(cq, a) for cq in disjuncts_of(query)]
    query_u = padded[0] if isinstance(query, ConjunctiveQuery) else UnionQuery(tuple(padded))
    problem = UniformizedProblem(
        tuple(sigma_u), query_u, a, k, dict(arities), tuple(padding_rules(arities, a))
    )
    logger.info("uniformized to arity a=%d, body width k=%d, %d relations", a, k, len(arities))
    return problem


def padding_rules(arities: Mapping[str, int], width: int) -> List[Rule]:
    """One rule per predicate deriving its padded form from '<name>_orig'."""
    rules = []
    for name in sorted(arities):
        args = tuple(Term.var(f"X{index + 1}") for index in range(arities[name]))
        source = Atom(f"{name}_orig", args)
        rules.append(Rule(_pad_atom(Atom(name, args), width), (source,)))
    return rules


def pad_database(db: Database, arities: Mapping[str, int], width: int) -> Database:
    """Pad every fact of a known predicate to the given width; other predicates are dropped."""
    facts = []
    for fact in db.facts:
        expected = arities.get(fact.predicate)
        if expected is None:
            continue
        if expected != fact.arity:
            raise ValidationError(f"fact {fact} does not match arity {expected} of {fact.predicate}")
        facts.append(_pad_atom(fact, width))
    return Database(facts, {name: width for name in arities})

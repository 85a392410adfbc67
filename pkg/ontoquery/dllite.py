"""
DL-Lite TBoxes as linear dependencies.

Surface syntax, one axiom per line:

    role R, S.                declares role names (binary predicates)
    A sub B.                  concept inclusion
    A sub exists R.           A sub exists inv(R).
    exists R sub A.           exists inv(R) sub A.
    R sub S.                  R sub inv(S).
    A sub not B.              disjointness, checked separately

A name used under `exists` or `inv` is a role even without a declaration.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Set, Tuple, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput

from .chase import entails
from .errors import ParseError, SourceSpan, UnsupportedAxiom
from .log import get_logger
from .model import Atom, ConjunctiveQuery, Database, Term, Tgd, UnionQuery

logger = get_logger(__name__)

GRAMMAR = r"""
    start: statement*
    ?statement: declaration | axiom

    declaration: "role" NAME ("," NAME)* "."
    axiom: side "sub" side "."

    side: NAME                          -> named
        | "exists" role                 -> some
        | "not" NAME                    -> negated
        | "inv" "(" NAME ")"            -> inverse

    role: NAME                          -> plain_role
        | "inv" "(" NAME ")"            -> inverse_role

    NAME: /[A-Za-z][A-Za-z0-9_]*/
    COMMENT: /%[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, parser="lalr", propagate_positions=True)


@dataclass(frozen=True)
class ConceptIncl:
    sub: str
    sup: str


@dataclass(frozen=True)
class ExistRestrRight:
    concept: str
    role: str


@dataclass(frozen=True)
class ExistRestrRightInv:
    concept: str
    role: str


@dataclass(frozen=True)
class ExistRestrLeft:
    role: str
    concept: str


@dataclass(frozen=True)
class ExistRestrLeftInv:
    role: str
    concept: str


@dataclass(frozen=True)
class RoleIncl:
    sub: str
    sup: str


@dataclass(frozen=True)
class RoleInclInv:
    sub: str
    sup: str


@dataclass(frozen=True)
class ConceptDisjointness:
    left: str
    right: str


DlAxiom = Union[
    ConceptIncl,
    ExistRestrRight,
    ExistRestrRightInv,
    ExistRestrLeft,
    ExistRestrLeftInv,
    RoleIncl,
    RoleInclInv,
    ConceptDisjointness,
]

# (kind, name, inverse) for each side of an axiom
Side = Tuple[str, str, bool]


class TBoxTransformer(Transformer):
    def named(self, children):
        return ("name", str(children[0]), False)

    def some(self, children):
        name, inverse = children[0]
        return ("exists", name, inverse)

    def negated(self, children):
        return ("not", str(children[0]), False)

    def inverse(self, children):
        return ("inv", str(children[0]), True)

    def plain_role(self, children):
        return (str(children[0]), False)

    def inverse_role(self, children):
        return (str(children[0]), True)

    def declaration(self, children):
        return ("role", [str(child) for child in children])

    @v_args(meta=True)
    def axiom(self, meta, children):
        line = getattr(meta, "line", None)
        span = SourceSpan(line, meta.column) if line is not None else None
        return ("axiom", (children[0], children[1], span))

    def start(self, children):
        return children


def _roles_of(statements) -> Set[str]:
    roles: Set[str] = set()
    for kind, payload in statements:
        if kind == "role":
            roles.update(payload)
            continue
        left, right, _ = payload
        for side_kind, name, _ in (left, right):
            if side_kind in ("exists", "inv"):
                roles.add(name)
    return roles


def _classify(left: Side, right: Side, roles: Set[str], span) -> DlAxiom:
    left_kind, a, left_inv = left
    right_kind, b, right_inv = right
    where = f" at {span}" if span else ""

    if right_kind == "not":
        if left_kind != "name" or a in roles or b in roles:
            raise UnsupportedAxiom(f"only concept disjointness is supported{where}")
        return ConceptDisjointness(a, b)
    if left_kind == "name" and right_kind == "name":
        if a in roles and b in roles:
            return RoleIncl(a, b)
        if a not in roles and b not in roles:
            return ConceptIncl(a, b)
        raise UnsupportedAxiom(f"{a} sub {b} mixes a concept and a role{where}")
    if left_kind == "name" and a not in roles and right_kind == "exists":
        return ExistRestrRightInv(a, b) if right_inv else ExistRestrRight(a, b)
    if left_kind == "exists" and right_kind == "name" and b not in roles:
        return ExistRestrLeftInv(a, b) if left_inv else ExistRestrLeft(a, b)
    if left_kind == "name" and a in roles and right_kind == "inv":
        return RoleInclInv(a, b)
    if left_kind == "inv" and right_kind == "name" and b in roles:
        return RoleInclInv(a, b)
    if left_kind == "inv" and right_kind == "inv":
        return RoleIncl(a, b)
    raise UnsupportedAxiom(f"unsupported axiom form{where}")


def parse_tbox(text: str) -> List[DlAxiom]:
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as exc:
        line = getattr(exc, "line", -1)
        column = getattr(exc, "column", -1)
        span = SourceSpan(line, column) if isinstance(line, int) and line > 0 else None
        raise ParseError("malformed TBox axiom", span) from None
    statements = TBoxTransformer().transform(tree)
    roles = _roles_of(statements)
    axioms = []
    for kind, payload in statements:
        if kind == "axiom":
            left, right, span = payload
            axioms.append(_classify(left, right, roles, span))
    concepts = {name for axiom in axioms for name in _concept_names(axiom)}
    clash = concepts & roles
    if clash:
        raise UnsupportedAxiom(f"names used both as concept and role: {', '.join(sorted(clash))}")
    logger.info("parsed TBox: %d axioms, %d roles", len(axioms), len(roles))
    return axioms


def _concept_names(axiom: DlAxiom) -> Tuple[str, ...]:
    if isinstance(axiom, (ConceptIncl, ConceptDisjointness)):
        return tuple(vars(axiom).values())
    if isinstance(axiom, (ExistRestrRight, ExistRestrRightInv, ExistRestrLeft, ExistRestrLeftInv)):
        return (axiom.concept,)
    return ()


X, Y = Term.var("X"), Term.var("Y")


def _tgd(body: Atom, head: Atom, existential: Optional[str] = None) -> Tgd:
    return Tgd((body,), (head,), (existential,) if existential else ())


def compile_axiom(axiom: DlAxiom) -> Tgd:
    if isinstance(axiom, ConceptIncl):
        return _tgd(Atom(axiom.sub, (X,)), Atom(axiom.sup, (X,)))
    if isinstance(axiom, ExistRestrRight):
        return _tgd(Atom(axiom.concept, (X,)), Atom(axiom.role, (X, Y)), "Y")
    if isinstance(axiom, ExistRestrRightInv):
        return _tgd(Atom(axiom.concept, (X,)), Atom(axiom.role, (Y, X)), "Y")
    if isinstance(axiom, ExistRestrLeft):
        return _tgd(Atom(axiom.role, (X, Y)), Atom(axiom.concept, (X,)))
    if isinstance(axiom, ExistRestrLeftInv):
        return _tgd(Atom(axiom.role, (X, Y)), Atom(axiom.concept, (Y,)))
    if isinstance(axiom, RoleIncl):
        return _tgd(Atom(axiom.sub, (X, Y)), Atom(axiom.sup, (X, Y)))
    if isinstance(axiom, RoleInclInv):
        return _tgd(Atom(axiom.sub, (X, Y)), Atom(axiom.sup, (Y, X)))
    raise UnsupportedAxiom(f"no dependency form for {type(axiom).__name__}")


def compile_tbox(axioms: Sequence[DlAxiom]) -> List[Tgd]:
    """One linear dependency per positive axiom; disjointness axioms are left out."""
    sigma = []
    for axiom in axioms:
        if isinstance(axiom, ConceptDisjointness):
            logger.debug("skipping disjointness %s/%s", axiom.left, axiom.right)
            continue
        sigma.append(compile_axiom(axiom))
    return sigma


def is_linear(sigma: Sequence[Tgd]) -> bool:
    return all(tgd.is_linear for tgd in sigma)


def negative_constraint_query(axioms: Sequence[DlAxiom]) -> Optional[Union[ConjunctiveQuery, UnionQuery]]:
    """Boolean query that holds exactly when some disjointness axiom is violated."""
    disjuncts = [
        ConjunctiveQuery((Atom(axiom.left, (X,)), Atom(axiom.right, (X,))))
        for axiom in axioms
        if isinstance(axiom, ConceptDisjointness)
    ]
    if not disjuncts:
        return None
    if len(disjuncts) == 1:
        return disjuncts[0]
    return UnionQuery(tuple(disjuncts))


def check_consistency(db: Database, axioms: Sequence[DlAxiom], max_steps: int) -> bool:
    """False when the bounded chase of the positive axioms violates a disjointness axiom."""
    query = negative_constraint_query(axioms)
    if query is None:
        return True
    violation = entails(db, compile_tbox(axioms), query, max_steps)
    if violation.holds:
        logger.info("disjointness violated, witness of length %d", violation.witness_length)
    return not violation.holds

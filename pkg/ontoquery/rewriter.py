"""
Rewriting of (dependencies, query) into a nonrecursive Datalog program.

The goal rule guesses N tuples t_1..t_N (database tuples or chase steps),
checks that every derived tuple follows from earlier ones by some rule, and
matches the query against the guessed tuples. Three variants are built:

    WIDE      one tuple atom T(i, r, f, x.., s, c..) per step, IfThen gadgets
    REDUCED   tuple atoms of arity a+1 plus Boolean gate gadgets
    BITVEC    REDUCED with every number spelled out as a vector of bits
"""

from dataclasses import dataclass, replace
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .encoding import (
    EncodingLayout,
    bool_var,
    c_var,
    f_var,
    g_var,
    out_var,
    q_var,
    r_var,
    rp_var,
    s_var,
    x_var,
)
from .errors import RewriteError
from .log import get_logger
from .model import (
    Atom,
    DatalogProgram,
    RewriteParams,
    Rule,
    Term,
    Variant,
    disjuncts_of,
)
from .normalizer import UniformizedProblem

logger = get_logger(__name__)

GOAL = "goal"
TUPLE = "T"
REDUCED_TUPLE = "Tp"
GUARDS = {1: "IfThen", 2: "IfThen2", 3: "IfThen3"}

RESERVED_NAMES = frozenset(
    {
        GOAL, TUPLE, REDUCED_TUPLE, "Step", "Nat", "adom", "DNum", "Bit",
        "Num", "Succ", "Lt", "Neq", "Zero", "One",
        "IfThen", "IfThen2", "IfThen3", "IfEq", "NotB", "OrB", "TrueB",
        "NumV", "NatV", "StepV", "DNumV", "adomV", "LtV", "NeqV", "IfEqV", "TpV",
    }
)


def _v(name: str) -> Term:
    return Term.var(name)


def _n(value: int) -> Term:
    return Term.num(value)


@dataclass(frozen=True)
class ProgramPart:
    """Goal-body atoms of one concern plus the rules they rely on."""

    atoms: Tuple[Atom, ...] = ()
    rules: Tuple[Rule, ...] = ()
    head: Optional[Atom] = None


@dataclass(frozen=True)
class ProgramSkeleton:
    tuples: ProgramPart
    chase: ProgramPart
    queries: Tuple[ProgramPart, ...]
    layout: EncodingLayout
    relations: Tuple[str, ...]
    goal_arity: int = 0


# --- shared pieces ---

def _check_input(u: UniformizedProblem, params: RewriteParams) -> None:
    clash = sorted(RESERVED_NAMES & set(u.original_arities))
    if clash:
        raise RewriteError(f"predicate names reserved by the rewriting: {', '.join(clash)}")
    for tgd in u.sigma_u:
        if not tgd.is_normal_form or len(tgd.body) != u.k:
            raise RewriteError(f"dependency is not uniform: {tgd}")
        if any(atom.arity != u.a for atom in tgd.body + tgd.head):
            raise RewriteError(f"dependency is not padded to arity {u.a}: {tgd}")
    for cq in disjuncts_of(u.query_u):
        if any(atom.arity != u.a for atom in cq.atoms):
            raise RewriteError(f"query is not padded to arity {u.a}: {cq}")
    params.check_bound(u.ell, max(len(cq.atoms) for cq in disjuncts_of(u.query_u)))


def layout_for(u: UniformizedProblem, params: RewriteParams) -> EncodingLayout:
    return EncodingLayout(params.n_steps, u.a, u.k, u.m, u.ell)


def at_most(var: Term, bound: int, layout: EncodingLayout, typed: bool) -> List[Atom]:
    """Atoms bounding a number by `bound`; typed means var is already known to lie in 1..n."""
    if bound < layout.numeric_size:
        return [Atom("Lt", (var, _n(bound + 1)))]
    if typed:
        return []
    return [Atom("Nat", (var,))]


def support_rules(relations: Sequence[str], a: int, layout: EncodingLayout, used: Iterable[str]) -> List[Rule]:
    """adom, DNum and, when used, Nat and Step."""
    used = set(used)
    xs = tuple(_v(f"X{p}") for p in range(1, a + 1))
    rules = []
    for name in relations:
        for x in dict.fromkeys(xs):
            rules.append(Rule(Atom("adom", (x,)), (Atom(name, xs),)))
    x = _v("X")
    rules += [
        Rule(Atom("DNum", (x,)), (Atom("Num", (x,)),)),
        Rule(Atom("DNum", (x,)), (Atom("adom", (x,)),)),
        Rule(Atom("DNum", (_n(0),))),
    ]
    if "Nat" in used:
        rules += [Rule(Atom("Nat", (x,)), (Atom("Num", (x,)),)), Rule(Atom("Nat", (_n(0),)))]
    if "Step" in used:
        rules += [
            Rule(Atom("Step", (x,)), (Atom("Num", (x,)), Atom("Lt", (x, _n(layout.n_steps))))),
            Rule(Atom("Step", (_n(layout.n_steps),))),
        ]
    return rules


def _guard(*pairs: Tuple[Term, Term]) -> Atom:
    """IfThen/IfThen2/IfThen3 over (guard pairs..., conclusion pair)."""
    return Atom(GUARDS[len(pairs) - 1], tuple(term for pair in pairs for term in pair))


def guard_rules(arity: int) -> List[Rule]:
    """Definition of the guarded equality with `arity` arguments: equal guards force equal conclusions."""
    pairs = arity // 2
    name = GUARDS[pairs - 1]
    same = tuple(_v(f"X{p}") for p in range(1, pairs + 1))
    head = Atom(name, tuple(term for x in same for term in (x, x)))
    rules = [Rule(head, tuple(Atom("DNum", (x,)) for x in same))]
    left = [_v(f"X{p}") for p in range(1, pairs + 1)]
    right = [_v(f"Y{p}") for p in range(1, pairs + 1)]
    head = Atom(name, tuple(term for pair in zip(left, right) for term in pair))
    for escape in range(pairs - 1):
        body = []
        for p in range(pairs):
            if p == escape:
                body.append(Atom("Neq", (left[p], right[p])))
            else:
                body += [Atom("DNum", (left[p],)), Atom("DNum", (right[p],))]
        rules.append(Rule(head, tuple(body)))
    return rules


# --- WIDE parts ---

def build_r_tuples(u: UniformizedProblem, params: RewriteParams) -> ProgramPart:
    """One T atom per step and the rules listing every tuple a step may hold."""
    layout = layout_for(u, params)
    atoms = []
    for i in range(1, layout.n_steps + 1):
        args = [_n(i), _v(r_var(i)), _v(f_var(i))]
        args += [_v(x_var(i, p)) for p in range(1, u.a + 1)]
        args.append(_v(s_var(i)))
        args += [_v(c_var(i, j)) for j in range(1, u.k + 1)]
        atoms.append(Atom(TUPLE, tuple(args)))

    z, y, v = _v("Z"), _v("Y"), _v("V")
    xs = tuple(_v(f"X{p}") for p in range(1, u.a + 1))
    us = tuple(_v(f"U{j}") for j in range(1, u.k + 1))
    rules = []
    for number, name in enumerate(u.relations, start=1):
        head = Atom(TUPLE, (z, _n(number), _n(0)) + xs + (_n(0),) + (_n(0),) * u.k)
        rules.append(Rule(head, (Atom(name, xs), Atom("Num", (z,)))))
    if u.ell:
        body = [Atom("Num", (z,)), Atom("Num", (y,))] + at_most(y, u.m, layout, typed=True)
        body += [Atom("DNum", (x,)) for x in xs]
        body += [Atom("Num", (v,))] + at_most(v, u.ell, layout, typed=True)
        for parent in us:
            body += [Atom("Num", (parent,)), Atom("Lt", (parent, z))]
        rules.append(Rule(Atom(TUPLE, (z, y, _n(1)) + xs + (v,) + us), tuple(body)))
    return ProgramPart(tuple(atoms), tuple(rules))


def _occurrences(atoms: Sequence[Atom]) -> Dict[str, List[Tuple[int, int]]]:
    """Variable -> [(atom number, position)], both 1-based, in reading order."""
    found: Dict[str, List[Tuple[int, int]]] = {}
    for b, atom in enumerate(atoms, start=1):
        for p, arg in enumerate(atom.args, start=1):
            if arg.is_variable:
                found.setdefault(arg.value, []).append((b, p))
    return found


def build_r_chase(u: UniformizedProblem, params: RewriteParams) -> ProgramPart:
    """Conditions making every derived tuple a valid chase step over its parents."""
    layout = layout_for(u, params)
    numbers = u.relation_numbers
    atoms: List[Atom] = []
    for i in range(1, layout.n_steps + 1):
        s, earlier = _v(s_var(i)), range(1, i)
        for t, tgd in enumerate(u.sigma_u, start=1):
            rule = (s, _n(t))
            head = tgd.head[0]
            # (1) head relation
            atoms.append(_guard(rule, (_v(r_var(i)), _n(numbers[head.predicate]))))
            # (2) parents carry the body relations
            for b, atom in enumerate(tgd.body, start=1):
                for j in earlier:
                    atoms.append(
                        _guard(rule, (_v(c_var(i, b)), _n(j)), (_v(r_var(j)), _n(numbers[atom.predicate])))
                    )
            # (3) fresh nulls are named by the step
            for p, arg in enumerate(head.args, start=1):
                if arg.value in tgd.existentials:
                    atoms.append(_guard(rule, (_v(x_var(i, p)), _n(i))))
            body_occ = _occurrences(tgd.body)
            # (4) joins inside the body
            for occ in body_occ.values():
                for (b1, p1), (b2, p2) in combinations(occ, 2):
                    if b1 == b2:
                        for j in earlier:
                            atoms.append(
                                _guard(rule, (_v(c_var(i, b1)), _n(j)), (_v(x_var(j, p1)), _v(x_var(j, p2))))
                            )
                        continue
                    for j1 in earlier:
                        for j2 in earlier:
                            atoms.append(
                                _guard(
                                    rule,
                                    (_v(c_var(i, b1)), _n(j1)),
                                    (_v(c_var(i, b2)), _n(j2)),
                                    (_v(x_var(j1, p1)), _v(x_var(j2, p2))),
                                )
                            )
            # (5) frontier values are copied from the body
            for name, head_positions in _occurrences(tgd.head).items():
                for b, p in body_occ.get(name, ()):
                    for _, p_head in head_positions:
                        for j in earlier:
                            atoms.append(
                                _guard(rule, (_v(c_var(i, b)), _n(j)), (_v(x_var(j, p)), _v(x_var(i, p_head))))
                            )
    arities = sorted({atom.arity for atom in atoms})
    rules = [rule for arity in arities for rule in guard_rules(arity)]
    return ProgramPart(tuple(atoms), tuple(rules))


def build_r_query(u: UniformizedProblem, params: RewriteParams) -> List[ProgramPart]:
    """One part per disjunct: query atoms placed on steps, joins, constants and outputs."""
    layout = layout_for(u, params)
    numbers = u.relation_numbers
    steps = range(1, layout.n_steps + 1)
    parts = []
    for cq in disjuncts_of(u.query_u):
        atoms: List[Atom] = []
        for t, atom in enumerate(cq.atoms, start=1):
            q = _v(q_var(t))
            atoms.append(Atom("Step", (q,)))
            for i in steps:
                atoms.append(_guard((q, _n(i)), (_v(r_var(i)), _n(numbers[atom.predicate]))))
            for p, arg in enumerate(atom.args, start=1):
                if not arg.is_variable:
                    for i in steps:
                        atoms.append(_guard((q, _n(i)), (_v(x_var(i, p)), arg)))
        for name, occ in _occurrences(cq.atoms).items():
            t0, p0 = occ[0]
            for t, p in occ[1:]:
                for i in steps:
                    if t == t0:
                        atoms.append(_guard((_v(q_var(t)), _n(i)), (_v(x_var(i, p0)), _v(x_var(i, p)))))
                        continue
                    for j in steps:
                        atoms.append(
                            _guard(
                                (_v(q_var(t0)), _n(i)),
                                (_v(q_var(t)), _n(j)),
                                (_v(x_var(i, p0)), _v(x_var(j, p))),
                            )
                        )
        outputs = []
        for name in cq.output_vars:
            answer = _v(out_var(name))
            outputs.append(answer)
            t0, p0 = _occurrences(cq.atoms)[name][0]
            for i in steps:
                atoms.append(_guard((_v(q_var(t0)), _n(i)), (_v(x_var(i, p0)), answer)))
        atoms += [Atom("adom", (answer,)) for answer in dict.fromkeys(outputs)]
        parts.append(ProgramPart(tuple(atoms), (), Atom(GOAL, tuple(outputs))))
    return parts


def build_skeleton(u: UniformizedProblem, params: RewriteParams) -> ProgramSkeleton:
    _check_input(u, params)
    queries = tuple(build_r_query(u, params))
    return ProgramSkeleton(
        build_r_tuples(u, params),
        build_r_chase(u, params),
        queries,
        layout_for(u, params),
        tuple(u.relations),
        queries[0].head.arity,
    )


def assemble(skeleton: ProgramSkeleton, variant: Variant, extra_rules: Sequence[Rule] = ()) -> DatalogProgram:
    """Goal rules (one per disjunct) over the shared tuple and chase parts, plus every helper rule."""
    layout = skeleton.layout
    shared = skeleton.tuples.atoms + skeleton.chase.atoms
    goal_rules = [Rule(part.head, shared + part.atoms) for part in skeleton.queries]
    helpers = list(skeleton.tuples.rules) + list(skeleton.chase.rules) + list(extra_rules)
    for part in skeleton.queries:
        helpers += part.rules
    used = {atom.predicate for rule in helpers + goal_rules for atom in rule.body}
    a = max(layout.a, 1)
    rules = list(dict.fromkeys(support_rules(skeleton.relations, a, layout, used) + helpers + goal_rules))
    metrics = dict(layout.as_dict())
    metrics["chase_atoms"] = len(skeleton.chase.atoms)
    program = DatalogProgram(
        tuple(rules),
        GOAL,
        frozenset(skeleton.relations),
        skeleton.goal_arity,
        layout.numeric_size,
        variant.value,
        metrics,
    )
    if not program.is_nonrecursive():
        raise RewriteError("internal error: rewritten program is recursive")
    return program


# --- REDUCED ---

class _Gadgets:
    """Fresh Boolean variables and the gate conjunctions built from them."""

    def __init__(self, start: int = 0):
        self.counter = start

    def fresh(self) -> Term:
        self.counter += 1
        return _v(bool_var(self.counter))

    def equal(self, left: Term, right: Term, atoms: List[Atom]) -> Term:
        flag = self.fresh()
        atoms.append(Atom("IfEq", (left, right, flag)))
        return flag

    def negate(self, flag: Term, atoms: List[Atom]) -> Term:
        out = self.fresh()
        atoms.append(Atom("NotB", (flag, out)))
        return out

    def either(self, left: Term, right: Term, atoms: List[Atom]) -> Term:
        out = self.fresh()
        atoms.append(Atom("OrB", (left, right, out)))
        return out

    def implication(self, guards: Sequence[Tuple[Term, Term]], conclusion: Tuple[Term, Term]) -> List[Atom]:
        """not(g1) or ... or not(gn) or conclusion, with every equality an IfEq flag."""
        atoms: List[Atom] = []
        flags = [self.equal(left, right, atoms) for left, right in guards]
        last = self.equal(conclusion[0], conclusion[1], atoms)
        negated = [self.negate(flag, atoms) for flag in flags]
        acc = negated[0]
        for flag in negated[1:]:
            acc = self.either(acc, flag, atoms)
        acc = self.either(acc, last, atoms)
        atoms.append(Atom("TrueB", (acc,)))
        return atoms

    def unless(self, flag: Term, left: Term, right: Term, negate: bool = False) -> List[Atom]:
        """flag or (left = right), or with negate=True flag or (left != right)."""
        atoms: List[Atom] = []
        same = self.equal(left, right, atoms)
        if negate:
            same = self.negate(same, atoms)
        atoms.append(Atom("TrueB", (self.either(flag, same, atoms),)))
        return atoms


def gate_rules() -> List[Rule]:
    x, y = _v("X"), _v("Y")
    return [
        Rule(Atom("IfEq", (x, x, _n(1))), (Atom("DNum", (x,)),)),
        Rule(Atom("IfEq", (x, y, _n(0))), (Atom("Neq", (x, y)),)),
        Rule(Atom("NotB", (_n(0), _n(1)))),
        Rule(Atom("NotB", (_n(1), _n(0)))),
        Rule(Atom("OrB", (_n(0), _n(0), _n(0)))),
        Rule(Atom("OrB", (_n(0), _n(1), _n(1)))),
        Rule(Atom("OrB", (_n(1), _n(0), _n(1)))),
        Rule(Atom("OrB", (_n(1), _n(1), _n(1)))),
        Rule(Atom("TrueB", (x,)), (Atom("One", (x,)),)),
    ]


def reduced_tuple_rules(relations: Sequence[str], a: int) -> List[Rule]:
    xs = tuple(_v(f"X{p}") for p in range(1, a + 1))
    rules = [Rule(Atom(REDUCED_TUPLE, (_n(j),) + xs), (Atom(name, xs),)) for j, name in enumerate(relations, start=1)]
    rules.append(Rule(Atom(REDUCED_TUPLE, (_n(0),) + xs), tuple(Atom("DNum", (x,)) for x in xs)))
    return rules


def _reduce_tuple(atom: Atom, layout: EncodingLayout, gadgets: _Gadgets) -> List[Atom]:
    i = atom.args[0].value
    a, k = layout.a, layout.k
    r, f, xs = atom.args[1], atom.args[2], atom.args[3:3 + a]
    s, cs = atom.args[3 + a], atom.args[4 + a:4 + a + k]
    p, g, zero = _v(rp_var(i)), _v(g_var(i)), _n(0)
    atoms = [Atom(REDUCED_TUPLE, (p,) + tuple(xs)), Atom("NotB", (f, g)), Atom("Lt", (zero, r))]
    atoms += at_most(r, layout.m, layout, typed=True)
    atoms += gadgets.unless(f, r, p)
    atoms += gadgets.unless(f, s, zero)
    for c in cs:
        atoms += gadgets.unless(f, c, zero)
    atoms += at_most(s, layout.ell, layout, typed=False)
    atoms += [Atom("Lt", (c, _n(i))) for c in cs]
    atoms += gadgets.unless(g, s, zero, negate=True)
    for c in cs:
        atoms += gadgets.unless(g, c, zero, negate=True)
    return atoms


def _reduce_atoms(atoms: Sequence[Atom], layout: EncodingLayout, gadgets: _Gadgets) -> Tuple[Atom, ...]:
    result: List[Atom] = []
    for atom in atoms:
        if atom.predicate == TUPLE:
            result += _reduce_tuple(atom, layout, gadgets)
        elif atom.predicate in GUARDS.values():
            pairs = [(atom.args[p], atom.args[p + 1]) for p in range(0, atom.arity, 2)]
            result += gadgets.implication(pairs[:-1], pairs[-1])
        else:
            result.append(atom)
    return tuple(result)


def reduce_arity(skeleton: ProgramSkeleton) -> DatalogProgram:
    """Replace T atoms by Tp groups and guarded equalities by Boolean gates."""
    layout = skeleton.layout
    gadgets = _Gadgets()
    tuples = ProgramPart(_reduce_atoms(skeleton.tuples.atoms, layout, gadgets))
    chase = ProgramPart(_reduce_atoms(skeleton.chase.atoms, layout, gadgets))
    shared = gadgets.counter
    queries = []
    for part in skeleton.queries:
        gadgets.counter = shared
        queries.append(replace(part, atoms=_reduce_atoms(part.atoms, layout, gadgets)))
    reduced = ProgramSkeleton(tuples, chase, tuple(queries), layout, skeleton.relations, skeleton.goal_arity)
    extra = reduced_tuple_rules(skeleton.relations, layout.a) + gate_rules()
    return assemble(reduced, Variant.REDUCED, extra)


# --- entry points ---

def build_program(u: UniformizedProblem, params: RewriteParams, max_width: int = 64) -> DatalogProgram:
    """The rewritten program for the requested variant."""
    skeleton = build_skeleton(u, params)
    if params.variant is Variant.WIDE:
        program = assemble(skeleton, Variant.WIDE)
    else:
        program = reduce_arity(skeleton)
        if params.variant is Variant.BITVEC:
            from .bitvector import to_bitvector
            from .encoding import BitVectorLayout

            program = to_bitvector(program, BitVectorLayout.for_numbers(program.numeric_size, max_width))
    stats = program_stats(program)
    logger.info(
        "built %s program: %d rules, %d atoms, max arity %d",
        program.variant, stats["rules"], stats["atoms"], stats["max_arity"],
    )
    return program


def rewrite_certain_answers(u: UniformizedProblem, params: RewriteParams, max_width: int = 64) -> DatalogProgram:
    """Program whose goal relation holds the certain answers of an output query."""
    if u.query_u.is_boolean:
        raise RewriteError("certain answers need a query with output variables")
    return build_program(u, params, max_width)


def expected_arity(program: DatalogProgram) -> int:
    """The arity every program of this variant must reach exactly (an upper bound for bitvec)."""
    a, k = program.layout["a"], program.layout["k"]
    if program.variant == Variant.WIDE.value:
        uses_three = any(atom.predicate == GUARDS[3] for atom in program.atoms())
        base = max(a + k + 4, 8 if uses_three else 0)
    elif program.variant == Variant.REDUCED.value:
        base = max(a + 1, 3)
    else:
        width = max(1, program.numeric_size.bit_length())
        base = max(a + 1, 3) * width + 3
    return max(base, program.goal_arity)


def program_stats(program: DatalogProgram) -> Dict[str, int]:
    goal_rules = program.rules_for(program.goal)
    return {
        "rules": len(program.rules),
        "atoms": program.atom_count(),
        "max_arity": program.max_arity(),
        "variables": sum(len(rule.variables()) for rule in program.rules),
        "goal_atoms": max((len(rule.body) for rule in goal_rules), default=0),
        "chase_atoms": program.layout.get("chase_atoms", 0),
    }

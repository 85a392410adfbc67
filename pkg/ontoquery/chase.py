"""
Reference oracle: a breadth-first oblivious chase with derivation levels.

Database atoms are steps 1..|D| at level 0. Every trigger fires once; a
trigger for level L+1 uses only atoms of level <= L and at least one atom of
level L. A null created by step j is the term _j.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import ValidationError
from .log import get_logger
from .model import Atom, ConjunctiveQuery, Database, Query, Term, Tgd, disjuncts_of

logger = get_logger(__name__)

DEFAULT_ATOM_CAP = 1_000_000

Binding = Dict[str, Term]
# (rule number, parent steps, homomorphism)
Derivation = Tuple[int, Tuple[int, ...], Tuple[Tuple[str, Term], ...]]


@dataclass(frozen=True)
class ChaseStep:
    index: int
    atom: Atom
    level: int = 0
    rule: Optional[int] = None
    parents: Tuple[int, ...] = ()
    homomorphism: Tuple[Tuple[str, Term], ...] = ()

    @property
    def from_database(self) -> bool:
        return self.rule is None


@dataclass(frozen=True)
class ChaseSequence:
    steps: Tuple[ChaseStep, ...] = ()

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, index: int) -> ChaseStep:
        """1-based step access, matching step numbering."""
        return self.steps[index - 1]

    def atoms(self) -> List[Atom]:
        return [step.atom for step in self.steps]


@dataclass
class ChaseRun:
    steps: List[ChaseStep] = field(default_factory=list)
    step_of: Dict[Atom, int] = field(default_factory=dict)
    truncated: bool = False
    levels_run: int = 0
    alternatives: Dict[int, List[Derivation]] = field(default_factory=dict)

    def derivations(self, index: int) -> List[Derivation]:
        """Every recorded way to derive step index; the first one is the step's own."""
        step = self.step(index)
        if step.from_database:
            return []
        return [(step.rule, step.parents, step.homomorphism)] + self.alternatives.get(index, [])

    @property
    def levels(self) -> Dict[Atom, int]:
        return {step.atom: step.level for step in self.steps}

    def atoms(self, max_level: Optional[int] = None) -> Set[Atom]:
        return {step.atom for step in self.steps if max_level is None or step.level <= max_level}

    def sequence(self) -> ChaseSequence:
        return ChaseSequence(tuple(self.steps))

    def step(self, index: int) -> ChaseStep:
        return self.steps[index - 1]


class AtomIndex:
    """Atoms by predicate and by (predicate, position, term)."""

    def __init__(self, atoms: Iterable[Atom] = ()):
        self.by_predicate: Dict[str, List[Atom]] = defaultdict(list)
        self.by_position: Dict[Tuple[str, int, Term], List[Atom]] = defaultdict(list)
        self._seen: Set[Atom] = set()
        for atom in atoms:
            self.add(atom)

    def add(self, atom: Atom) -> None:
        if atom in self._seen:
            return
        self._seen.add(atom)
        self.by_predicate[atom.predicate].append(atom)
        for position, arg in enumerate(atom.args):
            self.by_position[(atom.predicate, position, arg)].append(atom)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self._seen

    def __len__(self):
        return len(self._seen)

    def candidates(self, pattern: Atom, binding: Mapping[str, Term]) -> List[Atom]:
        best = self.by_predicate.get(pattern.predicate, [])
        for position, arg in enumerate(pattern.args):
            value = binding.get(arg.value) if arg.is_variable else arg
            if value is None:
                continue
            bucket = self.by_position.get((pattern.predicate, position, value), [])
            if len(bucket) < len(best):
                best = bucket
        return [atom for atom in best if match(pattern, atom, binding) is not None]


def match(pattern: Atom, atom: Atom, binding: Mapping[str, Term]) -> Optional[Binding]:
    if pattern.predicate != atom.predicate or pattern.arity != atom.arity:
        return None
    extended = dict(binding)
    for arg, value in zip(pattern.args, atom.args):
        if arg.is_variable:
            bound = extended.get(arg.value)
            if bound is None:
                extended[arg.value] = value
            elif bound != value:
                return None
        elif arg != value:
            return None
    return extended


def homomorphisms(
    patterns: Sequence[Atom], index: AtomIndex, binding: Optional[Mapping[str, Term]] = None
) -> Iterator[Binding]:
    """All extensions of binding mapping every pattern into the index.

    Most-constrained atom first; an atom with no candidate prunes the branch.
    """
    yield from _search(list(patterns), list(range(len(patterns))), index, dict(binding or {}))


def _search(patterns, remaining, index, binding):
    if not remaining:
        yield dict(binding)
        return
    best = None
    for position in remaining:
        options = index.candidates(patterns[position], binding)
        if not options:
            return
        if best is None or len(options) < len(best[1]):
            best = (position, options)
    position, options = best
    rest = [other for other in remaining if other != position]
    for atom in options:
        yield from _search(patterns, rest, index, match(patterns[position], atom, binding))


def _image(patterns: Sequence[Atom], binding: Mapping[str, Term]) -> Tuple[Atom, ...]:
    return tuple(pattern.substitute(binding) for pattern in patterns)


def _image_key(image: Tuple[Atom, ...]):
    return tuple(sorted(atom.sort_key() for atom in image))


def applicable_steps(state: Iterable[Atom], sigma: Sequence[Tgd]) -> List[Tuple[int, Binding]]:
    """Every (rule number, body homomorphism) over state, ordered by rule then sorted image."""
    index = state if isinstance(state, AtomIndex) else AtomIndex(state)
    found = []
    for number, tgd in enumerate(sigma, start=1):
        triggers = [(binding, _image(tgd.body, binding)) for binding in homomorphisms(tgd.body, index)]
        triggers.sort(key=lambda item: _image_key(item[1]))
        found.extend((number, binding) for binding, _ in triggers)
    return found


def _fire(tgd: Tgd, binding: Binding, step_index: int) -> Tuple[Atom, Binding]:
    extended = dict(binding)
    for name in tgd.existentials:
        extended[name] = Term.null(step_index)
    return tgd.head[0].substitute(extended), extended


def chase_to_level(
    db: Database, sigma: Sequence[Tgd], max_level: int, atom_cap: int = DEFAULT_ATOM_CAP
) -> ChaseRun:
    """Saturate the oblivious chase up to derivation level max_level.

    Exceeding atom_cap stops the run with truncated set; it is not an error.
    """
    for tgd in sigma:
        if not tgd.is_normal_form:
            raise ValidationError(f"the chase expects normal-form dependencies, got {tgd}")
    run = ChaseRun()
    index = AtomIndex()
    for fact in db.sorted_facts():
        _append(run, index, ChaseStep(len(run.steps) + 1, fact, 0))
    for level in range(max_level):
        if len(run.steps) > atom_cap:
            run.truncated = True
            break
        frontier = {step.atom for step in run.steps if step.level == level}
        if not frontier:
            break
        fresh: List[ChaseStep] = []
        fresh_atoms: Dict[Atom, int] = {}
        for number, binding in applicable_steps(index, sigma):
            tgd = sigma[number - 1]
            image = _image(tgd.body, binding)
            if not any(atom in frontier for atom in image):
                continue
            step_index = len(run.steps) + len(fresh) + 1
            head, extended = _fire(tgd, binding, step_index)
            parents = tuple(run.step_of[atom] for atom in image)
            homomorphism = tuple(sorted(extended.items(), key=lambda item: item[0]))
            known = run.step_of.get(head, fresh_atoms.get(head))
            if known is not None:
                run.alternatives.setdefault(known, []).append((number, parents, homomorphism))
                continue
            fresh_atoms[head] = step_index
            fresh.append(ChaseStep(step_index, head, level + 1, number, parents, homomorphism))
            if len(run.steps) + len(fresh) > atom_cap:
                run.truncated = True
                break
        for step in fresh:
            _append(run, index, step)
        run.levels_run = level + 1
        logger.debug("chase level %d: %d new atoms, %d total", level + 1, len(fresh), len(run.steps))
        if run.truncated:
            logger.warning("chase truncated at %d atoms (cap %d)", len(run.steps), atom_cap)
            break
    return run


def _append(run: ChaseRun, index: AtomIndex, step: ChaseStep) -> None:
    run.steps.append(step)
    run.step_of.setdefault(step.atom, step.index)
    index.add(step.atom)


@dataclass(frozen=True)
class Entailment:
    holds: bool
    witness: Optional[ChaseSequence] = None
    homomorphism: Tuple[Tuple[str, Term], ...] = ()
    disjunct: int = 0
    truncated: bool = False

    @property
    def witness_length(self) -> int:
        return len(self.witness) if self.witness is not None else 0

    def __bool__(self):
        return self.holds


def _ancestry(run: ChaseRun, roots: Iterable[int]) -> Set[int]:
    """Steps reachable backwards from roots through any recorded derivation."""
    seen: Set[int] = set()
    stack = list(roots)
    while stack:
        index = stack.pop()
        if index in seen:
            continue
        seen.add(index)
        for _, parents, _ in run.derivations(index):
            stack.extend(parents)
    return seen


def smallest_closures(run: ChaseRun, steps: Iterable[int]) -> Dict[int, FrozenSet[int]]:
    """For every step, the smallest set of steps that derives it, over all its derivations.

    Relaxed to a fixpoint: a closure only ever shrinks, and a derivation whose
    parents already need the step itself is skipped.
    """
    relevant = sorted(steps)
    best: Dict[int, FrozenSet[int]] = {}
    changed = True
    while changed:
        changed = False
        for index in relevant:
            if run.step(index).from_database:
                if index not in best:
                    best[index] = frozenset((index,))
                    changed = True
                continue
            for _, parents, _ in run.derivations(index):
                if not all(parent in best for parent in parents):
                    continue
                below = frozenset().union(*(best[parent] for parent in parents))
                if index in below:
                    continue
                current = best.get(index)
                if current is None or len(below) + 1 < len(current):
                    best[index] = below | {index}
                    changed = True
    return best


def _choose_derivations(run: ChaseRun, members: Iterable[int]) -> Dict[int, Optional[Derivation]]:
    """One derivation per member whose parents are members chosen earlier."""
    chosen: Dict[int, Optional[Derivation]] = {}
    pending = sorted(members)
    while pending:
        waiting = []
        for index in pending:
            if run.step(index).from_database:
                chosen[index] = None
                continue
            ready = [d for d in run.derivations(index) if all(parent in chosen for parent in d[1])]
            if ready:
                chosen[index] = ready[0]
            else:
                waiting.append(index)
        if len(waiting) == len(pending):
            raise ValidationError(f"steps {waiting} cannot be derived from the chosen closure")
        pending = waiting
    return chosen


def _post_order(chosen: Mapping[int, Optional[Derivation]], roots: Sequence[int]) -> List[int]:
    order: List[int] = []
    seen: Set[int] = set()

    def visit(index: int) -> None:
        if index in seen:
            return
        seen.add(index)
        derivation = chosen[index]
        for parent in derivation[1] if derivation else ():
            visit(parent)
        order.append(index)

    for root in roots:
        visit(root)
    return order


def _renumber_term(value: Term, nulls: Mapping[int, int]) -> Term:
    if value.is_null:
        return Term.null(nulls[value.value])
    return value


def extract_witness(
    run: ChaseRun, roots: Sequence[int], members: Optional[Iterable[int]] = None
) -> Tuple[ChaseSequence, Dict[int, int]]:
    """Depth-first provenance of the root steps, renumbered 1..n with nulls following their steps.

    members defaults to the smallest closure of the roots.
    """
    if members is None:
        closures = smallest_closures(run, _ancestry(run, roots))
        members = frozenset().union(*(closures[root] for root in roots))
    chosen = _choose_derivations(run, members)
    order = _post_order(chosen, roots)
    position = {old: new for new, old in enumerate(order, start=1)}
    steps = []
    for old in order:
        step = run.step(old)
        atom = Atom(step.atom.predicate, tuple(_renumber_term(arg, position) for arg in step.atom.args))
        derivation = chosen[old]
        if derivation is None:
            steps.append(ChaseStep(position[old], atom, step.level))
            continue
        rule, parents, homomorphism = derivation
        homomorphism = tuple((name, _renumber_term(value, position)) for name, value in homomorphism)
        steps.append(ChaseStep(position[old], atom, step.level, rule, tuple(position[p] for p in parents), homomorphism))
    return ChaseSequence(tuple(steps)), position


def _query_images(run: ChaseRun, cq: ConjunctiveQuery, index: AtomIndex) -> Iterator[Tuple[Binding, List[int]]]:
    for binding in homomorphisms(cq.atoms, index):
        yield binding, [run.step_of[atom] for atom in _image(cq.atoms, binding)]


def entails(
    db: Database, sigma: Sequence[Tgd], query: Query, max_steps: int, atom_cap: int = DEFAULT_ATOM_CAP
) -> Entailment:
    """Decide the query over the chase saturated to max_steps levels.

    The witness is the query image with the smallest closure, taken over every
    derivation the chase found for each atom.
    """
    run = chase_to_level(db, sigma, max_steps, atom_cap)
    index = AtomIndex(run.atoms())
    images = [
        (number, binding, roots)
        for number, cq in enumerate(disjuncts_of(query))
        for binding, roots in _query_images(run, cq, index)
    ]
    if not images:
        logger.info("oracle: no match within %d levels (%d atoms)", max_steps, len(run.steps))
        return Entailment(False, truncated=run.truncated)
    closures = smallest_closures(run, _ancestry(run, (root for _, _, roots in images for root in roots)))
    best = None
    for number, binding, roots in images:
        members = frozenset().union(*(closures[root] for root in roots))
        key = (len(members), sorted(members))
        if best is None or key < best[0]:
            best = (key, number, binding, roots, members)
    _, number, binding, roots, members = best
    witness, position = extract_witness(run, roots, members)
    homomorphism = tuple(sorted((name, _renumber_term(value, position)) for name, value in binding.items()))
    logger.info("oracle: query holds, witness of length %d", len(witness))
    return Entailment(True, witness, homomorphism, number, run.truncated)


def certain_answers_oracle(
    db: Database, sigma: Sequence[Tgd], query: Query, max_steps: int, atom_cap: int = DEFAULT_ATOM_CAP
) -> Set[Tuple[str, ...]]:
    """Output tuples over constants only; matches through nulls never count."""
    run = chase_to_level(db, sigma, max_steps, atom_cap)
    index = AtomIndex(run.atoms())
    answers: Set[Tuple[str, ...]] = set()
    for cq in disjuncts_of(query):
        for binding in homomorphisms(cq.atoms, index):
            values = [binding[name] for name in cq.output_vars]
            if all(value.is_constant for value in values):
                answers.add(tuple(value.value for value in values))
    return answers


def validate_sequence(sequence: ChaseSequence, db: Database, sigma: Sequence[Tgd]) -> bool:
    """Replay a sequence: database steps must be facts, derived steps must follow from earlier ones."""
    for step in sequence:
        if step.from_database:
            if step.atom not in db.facts:
                return False
            continue
        if not 1 <= step.rule <= len(sigma) or any(parent >= step.index for parent in step.parents):
            return False
        tgd = sigma[step.rule - 1]
        binding = dict(step.homomorphism)
        body_binding = {name: value for name, value in binding.items() if name not in tgd.existentials}
        if _image(tgd.body, body_binding) != tuple(sequence[parent].atom for parent in step.parents):
            return False
        head, _ = _fire(tgd, body_binding, step.index)
        if head != step.atom:
            return False
    return True


def format_trace(sequence: Iterable[ChaseStep]) -> str:
    lines = []
    for step in sequence:
        rule = "db" if step.from_database else str(step.rule)
        parents = ",".join(str(parent) for parent in step.parents) if step.parents else "-"
        lines.append(f"{step.index}\t{step.atom}\t{rule}\t{parents}")
    return "\n".join(lines) + ("\n" if lines else "")

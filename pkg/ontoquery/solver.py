"""
Backtracking constraint search over rule bodies.

A rule body becomes a set of constraints over finite domains: table atoms
(stored relations), builtin filters, equalities and disjunctions (atoms of
predicates that are too large to store, one alternative per defining rule).
Search propagates to a fixpoint, drops constraints that are entailed or
that hang off a variable nothing else reads, splits independent components
and branches on one variable at a time.
"""

import time
from abc import ABC, abstractmethod
from typing import Callable, Collection, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

from networkx.utils import UnionFind

from .encoding import base_name, hint_for
from .errors import ResourceLimitExceeded
from .log import get_logger
from .model import Atom, Term

logger = get_logger(__name__)

Value = Union[int, str]
Domain = FrozenSet[Value]
# (position, value) pairs, positions ascending
Selection = Tuple[Tuple[int, Value], ...]

TABLE_SCAN_LIMIT = 512
# propagations between deadline checks inside one search node
DEADLINE_CHECK_EVERY = 64
# a search node looks for independent components again once this share of open variables is left
SPLIT_RATIO = 0.8


class Inconsistent(Exception):
    """A domain ran empty or a constraint failed."""


def value_key(value: Value):
    if isinstance(value, str):
        return (1, 0, value)
    return (0, value, "")


class Constraint(ABC):
    def __init__(self, args: Sequence[Term]):
        self.args = tuple(args)
        self.scope = tuple(dict.fromkeys(arg.value for arg in self.args if arg.is_variable))

    @abstractmethod
    def propagate(self, state: "SearchState"):
        """Narrow domains. Return True when entailed, a Replacement to swap in, or False."""
        raise NotImplementedError

    @abstractmethod
    def satisfied(self, state: "SearchState", solver: "Solver") -> bool:
        """Final check once every variable of the scope is bound."""
        raise NotImplementedError

    def total_in(self, name: str, state: "SearchState") -> bool:
        return False


class Replacement:
    def __init__(self, constraints: List[Constraint], domains: Dict[str, Domain]):
        self.constraints = constraints
        self.domains = domains


class Relation:
    """A stored relation with per-position indexes built on demand."""

    def __init__(self, name: str, tuples: Iterable[tuple]):
        self.name = name
        self.tuples = frozenset(tuples)
        self._index: Dict[int, Dict[Value, List[tuple]]] = {}
        self._composite: Dict[Tuple[int, ...], Dict[tuple, List[tuple]]] = {}
        self._columns: Dict[Selection, List[FrozenSet[Value]]] = {}

    def __len__(self):
        return len(self.tuples)

    def bucket(self, position: int, value: Value) -> List[tuple]:
        index = self._index.get(position)
        if index is None:
            index = {}
            for row in self.tuples:
                index.setdefault(row[position], []).append(row)
            self._index[position] = index
        return index.get(value, [])

    def select(self, key: Selection) -> Collection[tuple]:
        """Rows with the given value at every listed position."""
        if not key:
            return self.tuples
        if len(key) == 1:
            return self.bucket(*key[0])
        positions = tuple(position for position, _ in key)
        index = self._composite.get(positions)
        if index is None:
            index = {}
            last = positions[-1]
            for row in self.tuples:
                if len(row) > last:
                    index.setdefault(tuple(row[p] for p in positions), []).append(row)
            self._composite[positions] = index
        return index.get(tuple(value for _, value in key), [])

    def columns(self, key: Selection, width: int) -> List[FrozenSet[Value]]:
        """Values per position over the selected rows."""
        found = self._columns.get(key)
        if found is None:
            rows = self.select(key)
            found = [frozenset(row[p] for row in rows if len(row) == width) for p in range(width)]
            self._columns[key] = found
        return found


class TableConstraint(Constraint):
    def __init__(self, relation: Relation, args: Sequence[Term]):
        super().__init__(args)
        self.relation = relation

    def _selection(self, state) -> Tuple[Selection, Collection[tuple]]:
        key = tuple((position, state.value(arg)) for position, arg in enumerate(self.args) if state.is_bound(arg))
        return key, self.relation.select(key)

    def _rows(self, state) -> Iterator[tuple]:
        domains = [state.values(arg) for arg in self.args]
        for row in self._selection(state)[1]:
            if len(row) != len(self.args):
                continue
            if not all(value in domain for value, domain in zip(row, domains)):
                continue
            seen: Dict[str, Value] = {}
            if all(seen.setdefault(arg.value, value) == value for arg, value in zip(self.args, row) if arg.is_variable):
                yield row

    def propagate(self, state):
        if all(state.is_bound(arg) for arg in self.args):
            if tuple(state.value(arg) for arg in self.args) not in self.relation.tuples:
                raise Inconsistent(self.relation.name)
            return True
        key, rows = self._selection(state)
        if len(rows) > TABLE_SCAN_LIMIT:
            # large selection: narrow to its columns only
            for arg, column in zip(self.args, self.relation.columns(key, len(self.args))):
                state.restrict(arg, column)
            return False
        supports: List[Set[Value]] = [set() for _ in self.args]
        found = False
        for row in self._rows(state):
            found = True
            for position, value in enumerate(row):
                supports[position].add(value)
        if not found:
            raise Inconsistent(self.relation.name)
        for arg, support in zip(self.args, supports):
            state.restrict(arg, support)
        if len(self.scope) <= 1:
            return True
        return all(state.is_bound(arg) for arg in self.args)

    def satisfied(self, state, solver):
        return any(True for _ in self._rows(state))


class BuiltinConstraint(Constraint):
    def __init__(self, predicate, args: Sequence[Term]):
        super().__init__(args)
        self.predicate = predicate

    def propagate(self, state):
        return bool(self.predicate.propagate(self.args, state))

    def satisfied(self, state, solver):
        return self.predicate.holds([state.value(arg) for arg in self.args])

    def total_in(self, name, state):
        positions = [position for position, arg in enumerate(self.args) if arg.is_variable and arg.value == name]
        return len(positions) == 1 and self.predicate.total_in(positions[0], self.args, state)


class EqualConstraint(Constraint):
    def propagate(self, state):
        left, right = self.args
        common = state.values(left) & state.values(right)
        state.restrict(left, common)
        state.restrict(right, common)
        return len(common) == 1

    def satisfied(self, state, solver):
        return state.value(self.args[0]) == state.value(self.args[1])


class Alternative:
    """One defining rule of a predicate."""

    def __init__(self, head: Atom, body: Tuple[Atom, ...]):
        self.head = head
        self.body = body
        self.local_vars = tuple(dict.fromkeys(name for atom in (head,) + body for name in atom.variables()))
        self._template: Optional[List[Constraint]] = None

    def template(self, build: Callable[[Sequence[Atom]], List[Constraint]]) -> List[Constraint]:
        if self._template is None:
            self._template = build(self.body)
        return self._template


class Disjunction(Constraint):
    """An atom of a predicate that is evaluated rule by rule instead of stored."""

    def __init__(self, predicate: str, args: Sequence[Term], alternatives: Sequence[Alternative], builder):
        super().__init__(args)
        self.predicate = predicate
        self.alternatives = tuple(alternatives)
        self.builder = builder

    def _local_state(self, alternative: Alternative, state) -> Optional["SearchState"]:
        domains = {name: self.builder.universe for name in alternative.local_vars}
        for goal_arg, head_arg in zip(self.args, alternative.head.args):
            outer = state.values(goal_arg)
            if head_arg.is_variable:
                domains[head_arg.value] = domains[head_arg.value] & outer
                if not domains[head_arg.value]:
                    return None
            elif head_arg.value not in outer:
                return None
        local = SearchState(domains, frozenset(alternative.head.variables()), state.solver)
        local.add_constraints(alternative.template(self.builder.constraints_for))
        return local

    def _allowed(self, alternative: Alternative, local) -> Dict[str, Set[Value]]:
        allowed: Dict[str, Set[Value]] = {}
        for goal_arg, head_arg in zip(self.args, alternative.head.args):
            if not goal_arg.is_variable:
                continue
            values = local.values(head_arg)
            if goal_arg.value in allowed:
                allowed[goal_arg.value] &= values
            else:
                allowed[goal_arg.value] = set(values)
        return allowed

    def propagate(self, state):
        if all(state.is_bound(arg) for arg in self.args):
            return self.satisfied(state, state.solver) or _fail(self.predicate)
        feasible = []
        for alternative in self.alternatives:
            local = self._local_state(alternative, state)
            if local is None:
                continue
            try:
                local.propagate()
            except Inconsistent:
                continue
            feasible.append((alternative, local))
        if not feasible:
            raise Inconsistent(self.predicate)
        if len(feasible) == 1:
            return self._expand(*feasible[0], state)
        union: Dict[str, Set[Value]] = {}
        for alternative, local in feasible:
            for name, values in self._allowed(alternative, local).items():
                union.setdefault(name, set()).update(values)
        for name, values in union.items():
            state.restrict(Term.var(name), values)
        return False

    def _expand(self, alternative: Alternative, local, state) -> Replacement:
        mapping: Dict[str, Term] = {}
        equalities: List[Constraint] = []
        for goal_arg, head_arg in zip(self.args, alternative.head.args):
            if not head_arg.is_variable:
                state.restrict(goal_arg, {head_arg.value})
                continue
            known = mapping.get(head_arg.value)
            if known is None:
                mapping[head_arg.value] = goal_arg
            elif known != goal_arg:
                equalities.append(EqualConstraint((known, goal_arg)))
        domains: Dict[str, Domain] = {}
        for name in alternative.local_vars:
            if name not in mapping:
                fresh = state.fresh_name(name)
                mapping[name] = Term.var(fresh)
                domains[fresh] = local.domains[name]
        body = [atom.substitute(mapping) for atom in alternative.body]
        return Replacement(equalities + self.builder.constraints_for(body), domains)

    def satisfied(self, state, solver):
        for alternative in self.alternatives:
            local = self._local_state(alternative, state)
            if local is not None and solver.exists(local) is not None:
                return True
        return False


def _fail(name: str):
    raise Inconsistent(name)


class SearchState:
    """Domains plus active constraints; copied on every branch."""

    def __init__(self, domains: Dict[str, Domain], protected: FrozenSet[str] = frozenset(), solver=None):
        self.domains: Dict[str, Domain] = {name: frozenset(values) for name, values in domains.items()}
        self.constraints: Dict[int, Constraint] = {}
        self.watches: Dict[str, FrozenSet[int]] = {}
        self.queue: Set[int] = set()
        self.dirty: Set[str] = set(self.domains)
        self.protected = frozenset(protected)
        self.next_id = 0
        self.next_var = 0
        self.solver = solver
        self.split_mark = float("inf")

    # --- domain access ---
    def values(self, term: Term) -> Domain:
        if term.is_variable:
            return self.domains[term.value]
        return frozenset((term.value,))

    def is_bound(self, term: Term) -> bool:
        return not term.is_variable or len(self.domains[term.value]) == 1

    def value(self, term: Term) -> Value:
        if not term.is_variable:
            return term.value
        return next(iter(self.domains[term.value]))

    def restrict(self, term: Term, values) -> None:
        if not term.is_variable:
            if term.value not in values:
                raise Inconsistent(str(term))
            return
        name = term.value
        old = self.domains[name]
        new = old & frozenset(values)
        if not new:
            raise Inconsistent(name)
        if len(new) != len(old):
            self.domains[name] = new
            self.queue.update(self.watches.get(name, ()))

    # --- constraint store ---
    def add_var(self, name: str, domain: Domain) -> None:
        self.domains[name] = frozenset(domain)
        self.dirty.add(name)

    def fresh_name(self, name: str) -> str:
        while True:
            self.next_var += 1
            fresh = f"E{self.next_var}_{base_name(name)[0]}"
            if fresh not in self.domains:
                return fresh

    def add_constraint(self, constraint: Constraint) -> int:
        return self.add_constraints((constraint,))[0]

    def add_constraints(self, constraints: Iterable[Constraint]) -> List[int]:
        added: List[int] = []
        watched: Dict[str, List[int]] = {}
        for constraint in constraints:
            cid = self.next_id
            self.next_id += 1
            self.constraints[cid] = constraint
            for name in constraint.scope:
                if name not in self.domains:
                    raise KeyError(f"constraint over unknown variable {name}")
                watched.setdefault(name, []).append(cid)
            self.queue.add(cid)
            added.append(cid)
        for name, ids in watched.items():
            self.watches[name] = self.watches.get(name, frozenset()).union(ids)
        return added

    def remove_constraint(self, cid: int) -> None:
        constraint = self.constraints.pop(cid, None)
        if constraint is None:
            return
        for name in constraint.scope:
            self.watches[name] = self.watches[name] - {cid}
            self.dirty.add(name)
        self.queue.discard(cid)

    def degree(self, name: str) -> int:
        return len(self.watches.get(name, ()))

    def copy(self) -> "SearchState":
        other = SearchState.__new__(SearchState)
        other.domains = dict(self.domains)
        other.constraints = dict(self.constraints)
        other.watches = dict(self.watches)
        other.queue = set(self.queue)
        other.dirty = set(self.dirty)
        other.protected = self.protected
        other.next_id = self.next_id
        other.next_var = self.next_var
        other.solver = self.solver
        other.split_mark = self.split_mark
        return other

    def subset(self, constraint_ids: Iterable[int]) -> "SearchState":
        """A state holding only the given constraints and the variables they mention."""
        ids = set(constraint_ids)
        names = {name for cid in ids for name in self.constraints[cid].scope}
        other = SearchState({name: self.domains[name] for name in names}, self.protected, self.solver)
        other.next_var = self.next_var
        other.add_constraints(self.constraints[cid] for cid in sorted(ids))
        other.queue.clear()
        return other

    # --- propagation ---
    def propagate(self) -> None:
        steps = 0
        while True:
            while self.queue:
                cid = self.queue.pop()
                constraint = self.constraints.get(cid)
                if constraint is None:
                    continue
                steps += 1
                if steps % DEADLINE_CHECK_EVERY == 0 and self.solver is not None:
                    self.solver.check_deadline()
                outcome = constraint.propagate(self)
                if outcome is True:
                    self.remove_constraint(cid)
                elif isinstance(outcome, Replacement):
                    self.remove_constraint(cid)
                    for name, domain in outcome.domains.items():
                        self.add_var(name, domain)
                    self.add_constraints(outcome.constraints)
            if not self._drop_dangling():
                return

    def _drop_dangling(self) -> bool:
        dropped = False
        while self.dirty:
            name = self.dirty.pop()
            if name in self.protected or self.degree(name) != 1:
                continue
            (cid,) = self.watches[name]
            if self.constraints[cid].total_in(name, self):
                self.remove_constraint(cid)
                dropped = True
        return dropped

    def open_vars(self) -> List[str]:
        return [name for name, ids in self.watches.items() if ids and len(self.domains[name]) > 1]

    def assignment(self) -> Dict[str, Value]:
        """Bound variables, plus the smallest value of protected ones nothing constrains."""
        result = {}
        for name, domain in self.domains.items():
            if len(domain) == 1:
                result[name] = next(iter(domain))
            elif name in self.protected and not self.degree(name):
                result[name] = min(domain, key=value_key)
        return result


class Solver:
    """Depth-first search with propagation, component splitting and a wall-clock deadline."""

    def __init__(self, timeout: Optional[float] = None):
        self.deadline = None if timeout is None else time.monotonic() + timeout
        self.nodes = 0
        self._anchors: Dict[int, List[str]] = {}

    def check_deadline(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceLimitExceeded(f"search ran out of time after {self.nodes} nodes")

    def _tick(self) -> None:
        self.nodes += 1
        self.check_deadline()

    # --- variable choice ---
    def _anchored(self, step: int, state: SearchState) -> bool:
        names = self._anchors.get(step)
        if names is None:
            names = [name for name in state.domains if base_name(name)[0] == f"R{step}"]
            self._anchors[step] = names
        return bool(names) and all(len(state.domains.get(name, ())) == 1 for name in names)

    def _rank(self, name: str, state: SearchState, wanted: FrozenSet[str]):
        hint = hint_for(name)
        if name in wanted:
            tier = (0, 0, 0, hint.component)
        elif hint.kind == "query":
            tier = (1, hint.step, 0, hint.component)
        elif hint.kind == "tuple":
            anchored = self._anchored(hint.step, state)
            tier = (2 if anchored else 3, hint.step, hint.role_rank, hint.component)
        elif hint.kind == "gadget":
            tier = (5, 0, 0, hint.component)
        else:
            tier = (4, 0, 0, hint.component)
        return tier + (len(state.domains[name]), -state.degree(name), name)

    def choose(self, state: SearchState, wanted: FrozenSet[str] = frozenset()) -> Optional[str]:
        candidates = state.open_vars()
        candidates += [name for name in wanted if len(state.domains.get(name, ())) > 1 and not state.degree(name)]
        if not candidates:
            return None
        return min(candidates, key=lambda name: self._rank(name, state, wanted))

    # --- components ---
    @staticmethod
    def components(state: SearchState) -> List[Tuple[Set[int], Set[str]]]:
        sets = UnionFind()
        owner: Dict[int, str] = {}
        ground: Set[int] = set()
        for cid, constraint in state.constraints.items():
            open_names = [name for name in constraint.scope if len(state.domains[name]) > 1]
            if not open_names:
                ground.add(cid)
                continue
            sets.union(*open_names)
            owner[cid] = open_names[0]
        groups: Dict[str, Tuple[Set[int], Set[str]]] = {}
        for names in sets.to_sets():
            root = sets[next(iter(names))]
            groups[root] = (set(), set(names))
        for cid, name in owner.items():
            groups[sets[name]][0].add(cid)
        result = list(groups.values())
        if ground:
            result.append((ground, set()))
        return result

    def _split(self, state: SearchState) -> List[Tuple[Set[int], Set[str]]]:
        """Components of the state, recomputed only once enough variables got bound since the last try."""
        open_count = len(state.open_vars())
        if open_count == 0 or open_count > state.split_mark * SPLIT_RATIO:
            return [(set(state.constraints), set())]
        state.split_mark = open_count
        return self.components(state)

    # --- search ---
    def exists(self, state: SearchState) -> Optional[Dict[str, Value]]:
        """Some total assignment satisfying every constraint, or None."""
        self._tick()
        try:
            state.propagate()
        except Inconsistent:
            return None
        if not state.constraints:
            return state.assignment()
        parts = self._split(state)
        if len(parts) > 1:
            merged = state.assignment()
            for ids, _ in parts:
                found = self.exists(state.subset(ids))
                if found is None:
                    return None
                merged.update(found)
            return merged
        name = self.choose(state)
        if name is None:
            for constraint in state.constraints.values():
                if not constraint.satisfied(state, self):
                    return None
            return state.assignment()
        for value in sorted(state.domains[name], key=value_key):
            child = state.copy()
            try:
                child.restrict(Term.var(name), {value})
            except Inconsistent:
                continue
            found = self.exists(child)
            if found is not None:
                return found
        return None

    def solutions(self, state: SearchState, wanted: Sequence[str]) -> Iterator[Dict[str, Value]]:
        """Distinct assignments of the wanted variables that extend to a full solution."""
        wanted_set = frozenset(wanted)
        state.protected = state.protected | wanted_set
        yield from self._solutions(state, wanted_set)

    def _solutions(self, state: SearchState, wanted: FrozenSet[str]) -> Iterator[Dict[str, Value]]:
        self._tick()
        try:
            state.propagate()
        except Inconsistent:
            return
        parts = self._split(state)
        if len(parts) > 1:
            independent = [ids for ids, names in parts if not names & wanted]
            if independent:
                for ids in independent:
                    if self.exists(state.subset(ids)) is None:
                        return
                state = state.copy()
                for ids in independent:
                    for cid in ids:
                        state.remove_constraint(cid)
        open_wanted = [name for name in wanted if len(state.domains[name]) > 1]
        if not open_wanted:
            found = self.exists(state)
            if found is not None:
                yield {name: state.value(Term.var(name)) for name in wanted}
            return
        name = min(open_wanted, key=lambda item: self._rank(item, state, wanted))
        for value in sorted(state.domains[name], key=value_key):
            child = state.copy()
            try:
                child.restrict(Term.var(name), {value})
            except Inconsistent:
                continue
            yield from self._solutions(child, wanted)

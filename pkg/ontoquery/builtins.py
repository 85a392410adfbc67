"""
Builtin predicates evaluated as filters instead of materialized relations.

Every builtin knows its truth function (holds) and how to narrow the domains
of its arguments during search (propagate). The default propagation is
generalized arc consistency by enumeration when the argument domains are
small, and a plain check once every argument is bound.
"""

import itertools
from abc import ABC, abstractmethod
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Type

from .errors import EvaluationError
from .model import NumericExtension, Term
from .solver import Inconsistent

BRUTE_FORCE_LIMIT = 4096
BOOLEANS = frozenset({0, 1})


def is_number(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


class BuiltinPredicate(ABC):
    """Base class that all builtin predicates inherit from."""

    NAME = ""
    ARITY: Optional[int] = None

    def __init__(self, ext: NumericExtension, arity: int):
        if self.ARITY is not None and arity != self.ARITY:
            raise EvaluationError(f"{self.NAME} has arity {self.ARITY}, used with {arity}")
        self.ext = ext
        self.arity = arity

    @abstractmethod
    def holds(self, values: Sequence) -> bool:
        """Truth of the predicate on fully bound arguments."""
        raise NotImplementedError

    def total_in(self, position: int, args: Sequence[Term], state) -> bool:
        """True when every admissible value of the other arguments leaves some value at position."""
        return False

    # --- propagation ---
    def propagate(self, args: Sequence[Term], state) -> bool:
        """Narrow argument domains; return True once the constraint is entailed."""
        return self.enumerate_supports(args, state)

    def enumerate_supports(self, args: Sequence[Term], state) -> bool:
        domains = [state.values(arg) for arg in args]
        size = 1
        for domain in domains:
            size *= len(domain)
            if size > BRUTE_FORCE_LIMIT:
                return False
        supports: List[set] = [set() for _ in args]
        for combo in itertools.product(*domains):
            if not _repeats_agree(args, combo) or not self.holds(combo):
                continue
            for position, value in enumerate(combo):
                supports[position].add(value)
        for arg, support in zip(args, supports):
            state.restrict(arg, support)
        return all(len(support) == 1 for support in supports)

    def check_bound(self, args: Sequence[Term], state) -> bool:
        if not all(state.is_bound(arg) for arg in args):
            return False
        if not self.holds([state.value(arg) for arg in args]):
            raise Inconsistent(self.NAME)
        return True

    # --- helpers ---
    def restrict_dnum(self, args: Iterable[Term], state) -> None:
        for arg in args:
            state.restrict(arg, state.values(arg) & self.ext.dnum)

    def restrict_bool(self, args: Iterable[Term], state) -> None:
        for arg in args:
            state.restrict(arg, state.values(arg) & BOOLEANS)


def _repeats_agree(args: Sequence[Term], combo: Sequence) -> bool:
    seen: Dict[str, object] = {}
    for arg, value in zip(args, combo):
        if arg.is_variable:
            if seen.setdefault(arg.value, value) != value:
                return False
    return True


# --- numeric extension ---

class LessThan(BuiltinPredicate):
    NAME = "Lt"
    ARITY = 2

    def holds(self, values):
        x, y = values
        return is_number(x) and is_number(y) and 0 <= x < y <= self.ext.n_max

    def propagate(self, args, state):
        x, y = args
        if x == y and x.is_variable:
            raise Inconsistent("Lt on one variable")
        xs = {v for v in state.values(x) if v in self.ext.naturals and is_number(v)}
        ys = {v for v in state.values(y) if v in self.ext.naturals and is_number(v)}
        if not xs or not ys:
            raise Inconsistent("Lt")
        xs = {v for v in xs if v < max(ys)}
        if not xs:
            raise Inconsistent("Lt")
        ys = {v for v in ys if v > min(xs)}
        state.restrict(x, xs)
        state.restrict(y, ys)
        return max(xs) < min(ys)


class Successor(BuiltinPredicate):
    NAME = "Succ"
    ARITY = 2

    def holds(self, values):
        x, y = values
        return is_number(x) and is_number(y) and 0 <= x and y == x + 1 <= self.ext.n_max

    def propagate(self, args, state):
        x, y = args
        xs = {v for v in state.values(x) if is_number(v) and v in self.ext.naturals}
        ys = {v for v in state.values(y) if is_number(v) and v in self.ext.naturals}
        xs = {v for v in xs if v + 1 in ys}
        ys = {v for v in ys if v - 1 in xs}
        state.restrict(x, xs)
        state.restrict(y, ys)
        return len(xs) == 1


class NotEqual(BuiltinPredicate):
    NAME = "Neq"
    ARITY = 2

    def holds(self, values):
        return self.ext.neq(values[0], values[1])

    def total_in(self, position, args, state):
        return len(state.values(args[position]) & self.ext.dnum) > 1

    def propagate(self, args, state):
        x, y = args
        if x == y:
            raise Inconsistent("Neq on one term")
        self.restrict_dnum(args, state)
        if state.is_bound(x):
            state.restrict(y, state.values(y) - {state.value(x)})
        if state.is_bound(y):
            state.restrict(x, state.values(x) - {state.value(y)})
        return not (state.values(x) & state.values(y))


# --- Boolean gadgets ---

class IfEqual(BuiltinPredicate):
    """IfEq(X, Y, B): B is 1 when X = Y and 0 otherwise, over DNum."""

    NAME = "IfEq"
    ARITY = 3

    def holds(self, values):
        x, y, b = values
        if x not in self.ext.dnum or y not in self.ext.dnum:
            return False
        return b == (1 if x == y else 0) and is_number(b)

    def total_in(self, position, args, state):
        return position == 2 and BOOLEANS <= state.values(args[2])

    def propagate(self, args, state):
        x, y, b = args
        self.restrict_dnum((x, y), state)
        self.restrict_bool((b,), state)
        if x == y:
            state.restrict(b, {1})
            return True
        xs, ys = state.values(x), state.values(y)
        if not xs & ys:
            state.restrict(b, {0})
            return True
        if len(xs) == 1 and xs == ys:
            state.restrict(b, {1})
            return True
        flags = state.values(b)
        if flags == {1}:
            common = xs & ys
            state.restrict(x, common)
            state.restrict(y, common)
            return len(common) == 1
        if flags == {0}:
            if state.is_bound(x):
                state.restrict(y, state.values(y) - state.values(x))
            if state.is_bound(y):
                state.restrict(x, state.values(x) - state.values(y))
            return not (state.values(x) & state.values(y))
        return False


class NotGate(BuiltinPredicate):
    NAME = "NotB"
    ARITY = 2

    def holds(self, values):
        x, y = values
        return is_number(x) and is_number(y) and x in BOOLEANS and y == 1 - x

    def total_in(self, position, args, state):
        other = args[1 - position]
        return {1 - v for v in state.values(other)} <= state.values(args[position])

    def propagate(self, args, state):
        x, y = args
        if x == y:
            raise Inconsistent("NotB on one variable")
        self.restrict_bool(args, state)
        state.restrict(y, {1 - v for v in state.values(x)} & state.values(y))
        state.restrict(x, {1 - v for v in state.values(y)} & state.values(x))
        return state.is_bound(x)


class OrGate(BuiltinPredicate):
    NAME = "OrB"
    ARITY = 3

    def holds(self, values):
        x, y, z = values
        return all(is_number(v) and v in BOOLEANS for v in values) and z == (1 if x or y else 0)

    def total_in(self, position, args, state):
        return position == 2 and BOOLEANS <= state.values(args[2])

    def propagate(self, args, state):
        self.restrict_bool(args, state)
        x, y, z = args
        if state.values(x) == {1} or state.values(y) == {1}:
            state.restrict(z, {1})
            return True
        return self.enumerate_supports(args, state)


class TrueGate(BuiltinPredicate):
    NAME = "TrueB"
    ARITY = 1

    def holds(self, values):
        return values[0] == 1 and is_number(values[0])

    def propagate(self, args, state):
        state.restrict(args[0], {1})
        return True


class GuardedEquality(BuiltinPredicate):
    """IfThen, IfThen2, IfThen3: if every guard pair is equal, the last pair is equal.

    All arguments range over DNum.
    """

    NAME = "IfThen"
    ARITY = 4

    def holds(self, values):
        if any(value not in self.ext.dnum for value in values):
            return False
        pairs = [(values[i], values[i + 1]) for i in range(0, len(values), 2)]
        guards, (u1, u2) = pairs[:-1], pairs[-1]
        return any(a != b for a, b in guards) or u1 == u2

    def total_in(self, position, args, state):
        if position < self.arity - 2:
            return False
        other = args[self.arity - 2] if position == self.arity - 1 else args[self.arity - 1]
        own = state.values(args[position]) & self.ext.dnum
        return bool(own) and state.values(other) & self.ext.dnum <= own

    @staticmethod
    def _status(left: Term, right: Term, state) -> str:
        if left == right:
            return "equal"
        lefts, rights = state.values(left), state.values(right)
        if not lefts & rights:
            return "different"
        if len(lefts) == 1 and lefts == rights:
            return "equal"
        return "open"

    def propagate(self, args, state):
        self.restrict_dnum(args, state)
        pairs = [(args[i], args[i + 1]) for i in range(0, len(args), 2)]
        guards, (u1, u2) = pairs[:-1], pairs[-1]
        statuses = [self._status(a, b, state) for a, b in guards]
        if "different" in statuses:
            return True
        conclusion = self._status(u1, u2, state)
        if conclusion == "equal":
            return True
        open_guards = [pair for pair, status in zip(guards, statuses) if status == "open"]
        if not open_guards:
            common = state.values(u1) & state.values(u2)
            state.restrict(u1, common)
            state.restrict(u2, common)
            return len(common) == 1
        if conclusion == "different" and len(open_guards) == 1:
            a, b = open_guards[0]
            if state.is_bound(a):
                state.restrict(b, state.values(b) - state.values(a))
            if state.is_bound(b):
                state.restrict(a, state.values(a) - state.values(b))
            return not (state.values(a) & state.values(b))
        return False


class GuardedEquality2(GuardedEquality):
    NAME = "IfThen2"
    ARITY = 6


class GuardedEquality3(GuardedEquality):
    NAME = "IfThen3"
    ARITY = 8


# --- bit-vector gadgets ---

class VectorBuiltin(BuiltinPredicate):
    """Width comes from the arity the program uses.

    Propagation works on whole vectors: a vector argument keeps the encodings
    its bit domains still allow, and every bit is narrowed to the values those
    encodings use.
    """

    VECTORS = 2

    def __init__(self, ext: NumericExtension, arity: int):
        super().__init__(ext, arity)
        self.width = arity // self.VECTORS
        if self.width < 1:
            raise EvaluationError(f"{self.NAME} needs at least {self.VECTORS} arguments, got {arity}")
        self._valid: Optional[FrozenSet[tuple]] = None
        self._numbers: Optional[Tuple[tuple, ...]] = None

    def encode_number(self, value: int) -> tuple:
        return tuple((value >> (self.width - 1 - j)) & 1 for j in range(self.width))

    @property
    def valid_vectors(self) -> FrozenSet[tuple]:
        """Encodings of DNum: numbers 0..N in bits and replicated domain constants."""
        if self._valid is None:
            vectors = {self.encode_number(v) for v in self.ext.naturals if v < 2 ** self.width}
            vectors |= {(c,) * self.width for c in self.ext.domain}
            self._valid = frozenset(vectors)
        return self._valid

    @property
    def number_vectors(self) -> Tuple[tuple, ...]:
        if self._numbers is None:
            self._numbers = tuple(self.encode_number(v) for v in range(2 ** self.width))
        return self._numbers

    @staticmethod
    def as_number(bits: Sequence) -> Optional[int]:
        if not all(is_number(bit) and bit in BOOLEANS for bit in bits):
            return None
        number = 0
        for bit in bits:
            number = number * 2 + bit
        return number

    def split(self, values: Sequence):
        w = self.width
        return tuple(values[:w]), tuple(values[w:2 * w])

    @staticmethod
    def candidates(bits: Sequence[Term], state, pool: Iterable[tuple]) -> List[tuple]:
        domains = [state.values(bit) for bit in bits]
        return [
            vector for vector in pool
            if all(value in domain for value, domain in zip(vector, domains)) and _repeats_agree(bits, vector)
        ]

    def restrict_vector(self, bits: Sequence[Term], vectors: Sequence[tuple], state) -> None:
        if not vectors:
            raise Inconsistent(self.NAME)
        for position, bit in enumerate(bits):
            state.restrict(bit, {vector[position] for vector in vectors})

    @staticmethod
    def exact(bits: Sequence[Term], vectors: Sequence[tuple], state) -> bool:
        """Every completion of the bit domains is one of vectors."""
        size = 1
        for name in dict.fromkeys(bit.value for bit in bits if bit.is_variable):
            size *= len(state.domains[name])
        return size == len(vectors)


class VectorIfEqual(VectorBuiltin):
    NAME = "IfEqV"

    def __init__(self, ext: NumericExtension, arity: int):
        if arity % 2 != 1:
            raise EvaluationError(f"IfEqV needs an odd arity, got {arity}")
        super().__init__(ext, arity)

    def holds(self, values):
        x, y = self.split(values)
        flag = values[-1]
        if x not in self.valid_vectors or y not in self.valid_vectors:
            return False
        return is_number(flag) and flag == (1 if x == y else 0)

    def propagate(self, args, state):
        left, right = self.split(args)
        flag = args[-1]
        self.restrict_bool((flag,), state)
        xs = self.candidates(left, state, self.valid_vectors)
        ys = self.candidates(right, state, self.valid_vectors)
        flags = state.values(flag)
        if flags == {1}:
            common = set(xs) & set(ys)
            xs = [v for v in xs if v in common]
            ys = [v for v in ys if v in common]
        elif flags == {0}:
            if len(xs) == 1:
                ys = [v for v in ys if v != xs[0]]
            if len(ys) == 1:
                xs = [v for v in xs if v != ys[0]]
        self.restrict_vector(left, xs, state)
        self.restrict_vector(right, ys, state)
        same = len(xs) == 1 and xs == ys
        apart = not set(xs) & set(ys)
        if apart:
            state.restrict(flag, {0})
        elif same:
            state.restrict(flag, {1})
        return (same or apart) and self.exact(left, xs, state) and self.exact(right, ys, state)


class VectorLessThan(VectorBuiltin):
    NAME = "LtV"

    def holds(self, values):
        x, y = self.split(values)
        left, right = self.as_number(x), self.as_number(y)
        return left is not None and right is not None and left < right

    def propagate(self, args, state):
        left, right = self.split(args)
        xs = self.candidates(left, state, self.number_vectors)
        ys = self.candidates(right, state, self.number_vectors)
        if not xs or not ys:
            raise Inconsistent(self.NAME)
        top = max(self.as_number(v) for v in ys)
        xs = [v for v in xs if self.as_number(v) < top]
        if not xs:
            raise Inconsistent(self.NAME)
        low = min(self.as_number(v) for v in xs)
        ys = [v for v in ys if self.as_number(v) > low]
        self.restrict_vector(left, xs, state)
        self.restrict_vector(right, ys, state)
        entailed = max(self.as_number(v) for v in xs) < min(self.as_number(v) for v in ys)
        return entailed and self.exact(left, xs, state) and self.exact(right, ys, state)


class VectorNotEqual(VectorBuiltin):
    NAME = "NeqV"

    def holds(self, values):
        x, y = self.split(values)
        return x in self.valid_vectors and y in self.valid_vectors and x != y

    def propagate(self, args, state):
        left, right = self.split(args)
        xs = self.candidates(left, state, self.valid_vectors)
        ys = self.candidates(right, state, self.valid_vectors)
        if len(xs) == 1:
            ys = [v for v in ys if v != xs[0]]
        if len(ys) == 1:
            xs = [v for v in xs if v != ys[0]]
        self.restrict_vector(left, xs, state)
        self.restrict_vector(right, ys, state)
        apart = not set(xs) & set(ys)
        return apart and self.exact(left, xs, state) and self.exact(right, ys, state)


BUILTINS: Dict[str, Type[BuiltinPredicate]] = {
    cls.NAME: cls
    for cls in (
        LessThan,
        Successor,
        NotEqual,
        IfEqual,
        NotGate,
        OrGate,
        TrueGate,
        GuardedEquality,
        GuardedEquality2,
        GuardedEquality3,
        VectorIfEqual,
        VectorLessThan,
        VectorNotEqual,
    )
}


def is_builtin(name: str) -> bool:
    return name in BUILTINS


def make_builtin(name: str, arity: int, ext: NumericExtension) -> BuiltinPredicate:
    try:
        cls = BUILTINS[name]
    except KeyError:
        raise EvaluationError(f"{name} is not a builtin predicate") from None
    return cls(ext, arity)

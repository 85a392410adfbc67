"""
Naming and layout of the numeric tuple encoding.

Step i of a guessed chase sequence is described by the variables
R{i} (relation), F{i} (0 = database tuple, 1 = derived), X{i}_{p} (values),
S{i} (rule number) and C{i}_{j} (parent steps). The reduced program adds
P{i} (relation looked up in the database) and G{i} (negated flag). Query
atom t is placed at step Q{t}; output variable V is carried by A_V. Gadget
booleans are B{n}. In bit-vector programs variable V becomes V__0..V__{w-1}.
"""

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import RewriteError

Value = Union[int, str]

BIT_SEPARATOR = "__"


def r_var(i: int) -> str:
    return f"R{i}"


def rp_var(i: int) -> str:
    return f"P{i}"


def f_var(i: int) -> str:
    return f"F{i}"


def g_var(i: int) -> str:
    return f"G{i}"


def s_var(i: int) -> str:
    return f"S{i}"


def x_var(i: int, p: int) -> str:
    return f"X{i}_{p}"


def c_var(i: int, j: int) -> str:
    return f"C{i}_{j}"


def q_var(t: int) -> str:
    return f"Q{t}"


def out_var(name: str) -> str:
    return f"A_{name}"


def bool_var(n: int) -> str:
    return f"B{n}"


def bit_var(name: str, j: int) -> str:
    return f"{name}{BIT_SEPARATOR}{j}"


@dataclass(frozen=True)
class EncodingLayout:
    """Sizes shared by every part of a rewritten program."""

    n_steps: int
    a: int
    k: int
    m: int
    ell: int

    @property
    def numeric_size(self) -> int:
        return max(self.n_steps, self.m, self.ell)

    @property
    def width(self) -> int:
        return max(1, self.numeric_size.bit_length())

    def as_dict(self) -> Dict[str, int]:
        return {"n": self.n_steps, "a": self.a, "k": self.k, "m": self.m, "ell": self.ell}

    @classmethod
    def from_dict(cls, values: Mapping[str, int]) -> Optional["EncodingLayout"]:
        try:
            return cls(values["n"], values["a"], values["k"], values["m"], values["ell"])
        except KeyError:
            return None


class BitVectorLayout:
    """Big-endian bit vectors of a fixed width; constants are replicated."""

    def __init__(self, width: int):
        if width < 1:
            raise RewriteError(f"bit width must be at least 1, got {width}")
        self.width = width

    @classmethod
    def for_numbers(cls, largest: int, max_width: int = 64) -> "BitVectorLayout":
        width = max(1, largest.bit_length())
        if width > max_width:
            raise RewriteError(f"numbers up to {largest} need {width} bits, over the limit of {max_width}")
        return cls(width)

    def bits(self, name: str) -> List[str]:
        return [bit_var(name, j) for j in range(self.width)]

    def encode(self, value: Value) -> Tuple[Value, ...]:
        if isinstance(value, str):
            return (value,) * self.width
        if value < 0 or value >= 2 ** self.width:
            raise RewriteError(f"{value} does not fit in {self.width} bits")
        return tuple((value >> (self.width - 1 - j)) & 1 for j in range(self.width))

    def decode(self, values: Sequence[Value]) -> Optional[Value]:
        """Inverse of encode; None for mixed vectors that encode nothing."""
        if len(values) != self.width:
            return None
        if all(isinstance(value, str) for value in values):
            return values[0] if len(set(values)) == 1 else None
        if all(value in (0, 1) and not isinstance(value, str) for value in values):
            number = 0
            for value in values:
                number = number * 2 + value
            return number
        return None


# --- search hints ---

@dataclass(frozen=True)
class VarHint:
    kind: str
    step: Optional[int] = None
    role_rank: int = 0
    component: int = 0


ROLE_RANK = {"R": 0, "F": 1, "G": 1, "S": 2, "C": 3, "P": 4, "X": 5}

_SCALAR = re.compile(r"^([RPFGS])(\d+)$")
_INDEXED = re.compile(r"^([CX])(\d+)_(\d+)$")
_QUERY = re.compile(r"^Q(\d+)$")
_GADGET = re.compile(r"^B(\d+)$")
_BIT = re.compile(r"^(.*)" + BIT_SEPARATOR + r"(\d+)$")


def base_name(name: str) -> Tuple[str, int]:
    found = _BIT.match(name)
    if found:
        return found.group(1), int(found.group(2))
    return name, 0


@lru_cache(maxsize=None)
def hint_for(name: str) -> VarHint:
    base, component = base_name(name)
    found = _QUERY.match(base)
    if found:
        return VarHint("query", int(found.group(1)), 0, component)
    if base.startswith("A_"):
        return VarHint("output", None, 0, component)
    found = _SCALAR.match(base) or _INDEXED.match(base)
    if found:
        return VarHint("tuple", int(found.group(2)), ROLE_RANK[found.group(1)], component)
    if _GADGET.match(base):
        return VarHint("gadget", None, 0, component)
    return VarHint("other", None, 0, component)


# --- trace table ---

def _decode(assignment: Mapping[str, Value], name: str, layout: Optional[BitVectorLayout]):
    if name in assignment:
        return assignment[name]
    if layout is not None:
        bits = layout.bits(name)
        if all(bit in assignment for bit in bits):
            return layout.decode([assignment[bit] for bit in bits])
    return None


def encoding_rows(
    assignment: Mapping[str, Value], layout: EncodingLayout, bitvec: bool = False
) -> List[List[Optional[Value]]]:
    """Rows [i, r, f, x_1..x_a, s, c_1..c_k] read from a goal assignment."""
    bits = BitVectorLayout(layout.width) if bitvec else None
    rows = []
    for i in range(1, layout.n_steps + 1):
        row: List[Optional[Value]] = [i, _decode(assignment, r_var(i), bits), _decode(assignment, f_var(i), None)]
        row.extend(_decode(assignment, x_var(i, p), bits) for p in range(1, layout.a + 1))
        row.append(_decode(assignment, s_var(i), bits))
        row.extend(_decode(assignment, c_var(i, j), bits) for j in range(1, layout.k + 1))
        rows.append(row)
    return rows


def format_encoding_table(
    assignment: Mapping[str, Value], layout: EncodingLayout, bitvec: bool = False
) -> str:
    header = ["i", "r", "f"] + [f"x{p}" for p in range(1, layout.a + 1)] + ["s"]
    header += [f"c{j}" for j in range(1, layout.k + 1)]
    rows = [header] + [["?" if cell is None else str(cell) for cell in row] for row in encoding_rows(assignment, layout, bitvec)]
    widths = [max(len(row[column]) for row in rows) for column in range(len(header))]
    return "\n".join(" ".join(cell.rjust(width) for cell, width in zip(row, widths)) for row in rows) + "\n"


def assignment_from_rows(rows: Sequence[Sequence[Value]], layout: EncodingLayout) -> Dict[str, Value]:
    """Inverse of encoding_rows for complete rows; used to check a hand-written encoding."""
    assignment: Dict[str, Value] = {}
    for row in rows:
        i = row[0]
        assignment[r_var(i)] = row[1]
        assignment[f_var(i)] = row[2]
        for p in range(1, layout.a + 1):
            assignment[x_var(i, p)] = row[2 + p]
        assignment[s_var(i)] = row[3 + layout.a]
        for j in range(1, layout.k + 1):
            assignment[c_var(i, j)] = row[3 + layout.a + j]
    return assignment

"""
Output formats for rewritten programs: SQL view stacks and first-order sentences.

SQL: every value is VARCHAR, a number n is written '#n'. The numeric
extension becomes tables filled by INSERTs, every intensional predicate a
view (UNION of one SELECT per rule) in dependency order, and the last
statement reads the goal.

FO: predicate definitions are inlined into one formula, a disjunction over
the rules of a predicate and a conjunction over each body.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import duckdb

from .errors import EvaluationError
from .evaluator import stratify
from .log import get_logger
from .model import Atom, Database, DatalogProgram, NumericExtension, Rule, Term

logger = get_logger(__name__)

EXTENSION = ("Num", "Succ", "Lt", "Zero", "One")
DNUM_VIEW = "dnum_ext"
SQL_KEYWORDS = frozenset(
    """
    all and any as asc between by case cast check column create cross default delete desc distinct drop
    else end except exists false from full group having in inner insert intersect into is join key left
    like limit not null offset on or order outer primary references right select set some table then
    true union unique update user using values view when where with
    bit natural window qualify pivot unpivot asof positional semi anti lateral array map struct row
    """.split()
)


# --- SQL ---

def sql_value(value: Union[int, str]) -> str:
    if isinstance(value, int):
        return f"'#{value}'"
    return "'" + value.replace("'", "''") + "'"


def _literal(term: Term) -> str:
    return sql_value(term.value)


def _columns(arity: int) -> List[str]:
    return [f"c{p}" for p in range(1, arity + 1)] or ["c0"]


class SqlNames:
    """Predicate -> SQL identifier, renaming keywords and case-insensitive clashes."""

    def __init__(self, predicates: Iterable[str]):
        self.names: Dict[str, str] = {}
        self.renamed: List[Tuple[str, str]] = []
        taken: Set[str] = {DNUM_VIEW}
        for predicate in sorted(set(predicates)):
            name = predicate
            if name.lower() in SQL_KEYWORDS or name.lower() in taken:
                name = f"{predicate}_r"
                while name.lower() in taken:
                    name += "_"
                self.renamed.append((predicate, name))
            taken.add(name.lower())
            self.names[predicate] = name

    def __getitem__(self, predicate: str) -> str:
        return self.names[predicate]


def _select(rule: Rule, names: SqlNames, arities: Mapping[str, int]) -> str:
    tables: List[str] = []
    conditions: List[str] = []
    bound: Dict[str, str] = {}

    def place(term: Term, column: str) -> None:
        if term.is_variable:
            if term.value in bound:
                conditions.append(f"{column} = {bound[term.value]}")
            else:
                bound[term.value] = column
        else:
            conditions.append(f"{column} = {_literal(term)}")

    for index, atom in enumerate(rule.body):
        alias = f"t{index}"
        if atom.predicate == "Neq":
            sides = []
            for side, term in enumerate(atom.args):
                typed = f"{alias}_{side}"
                tables.append(f"{DNUM_VIEW} {typed}")
                place(term, f"{typed}.c1")
                sides.append(f"{typed}.c1")
            conditions.append(f"{sides[0]} <> {sides[1]}")
            continue
        tables.append(f"{names[atom.predicate]} {alias}")
        for position, term in enumerate(atom.args, start=1):
            place(term, f"{alias}.c{position}")

    outputs = []
    for column, term in zip(_columns(rule.head.arity), rule.head.args):
        value = bound[term.value] if term.is_variable else _literal(term)
        outputs.append(f"{value} AS {column}")
    if not rule.head.args:
        outputs = ["'true' AS c0"]
    text = "SELECT DISTINCT " + ", ".join(outputs)
    if tables:
        text += " FROM " + ", ".join(tables)
    if conditions:
        text += " WHERE " + " AND ".join(conditions)
    return text


def sql_statements(
    program: DatalogProgram,
    schema: Optional[Mapping[str, int]] = None,
    n: Optional[int] = None,
    db: Optional[Database] = None,
) -> Tuple[List[str], List[Tuple[str, str]]]:
    """CREATE/INSERT/VIEW statements followed by the goal query, plus the renamed identifiers."""
    order = stratify(program)
    arities = program.arities()
    arities.setdefault(program.goal, program.goal_arity)
    idb = set(order)
    edb = dict(schema or {})
    for name in program.edb:
        edb.setdefault(name, arities.get(name, 0))
    for name, arity in arities.items():
        if name not in idb and name not in EXTENSION and name != "Neq" and name not in edb:
            edb[name] = arity
    if db is not None:
        for name, arity in db.schema.items():
            edb.setdefault(name, arity)
    names = SqlNames(set(arities) | set(edb) | set(EXTENSION))
    ext = NumericExtension(n or program.numeric_size)

    statements: List[str] = []
    for predicate, column_count in (("Num", 1), ("Succ", 2), ("Lt", 2), ("Zero", 1), ("One", 1)):
        statements.append(_create_table(names[predicate], column_count))
        rows = sorted(ext.relation(predicate))
        statements.extend(_inserts(names[predicate], rows))
    for predicate in sorted(edb):
        if predicate in idb:
            continue
        statements.append(_create_table(names[predicate], edb[predicate]))
        if db is not None:
            statements.extend(_inserts(names[predicate], sorted(db.relation(predicate))))
    columns = [f"SELECT c1 FROM {names['Num']}", f"SELECT {sql_value(0)}"]
    for predicate in sorted(edb):
        if predicate not in idb:
            columns += [f"SELECT c{p} FROM {names[predicate]}" for p in range(1, edb[predicate] + 1)]
    statements.append(f"CREATE VIEW {DNUM_VIEW} AS " + " UNION ".join(columns))

    for predicate in order:
        selects = [_select(rule, names, arities) for rule in program.rules_for(predicate)]
        statements.append(f"CREATE VIEW {names[predicate]} AS " + " UNION ".join(selects))
    goal = names[program.goal]
    if program.goal_arity == 0:
        statements.append(f"SELECT EXISTS(SELECT 1 FROM {goal}) AS answer")
    else:
        order_by = ", ".join(_columns(program.goal_arity))
        statements.append(f"SELECT DISTINCT * FROM {goal} ORDER BY {order_by}")
    for predicate, renamed in names.renamed:
        logger.info("SQL identifier %s renamed to %s", predicate, renamed)
    return statements, names.renamed


def _create_table(name: str, arity: int) -> str:
    return f"CREATE TABLE {name} (" + ", ".join(f"{column} VARCHAR" for column in _columns(arity)) + ")"


def _inserts(name: str, rows: Sequence[tuple]) -> List[str]:
    if not rows:
        return []
    values = ", ".join("(" + ", ".join(sql_value(value) for value in row) + ")" for row in rows)
    return [f"INSERT INTO {name} VALUES {values}"]


def to_sql(
    program: DatalogProgram,
    schema: Optional[Mapping[str, int]] = None,
    n: Optional[int] = None,
    db: Optional[Database] = None,
) -> str:
    statements, renamed = sql_statements(program, schema, n, db)
    header = [f"-- goal {program.goal}/{program.goal_arity}, numbers 0..{n or program.numeric_size}"]
    header += [f"-- renamed {predicate} to {name}" for predicate, name in renamed]
    return "\n".join(header) + "\n" + "".join(f"{statement};\n" for statement in statements)


def decode_sql_value(value: str) -> Union[int, str]:
    if isinstance(value, str) and value.startswith("#") and value[1:].isdigit():
        return int(value[1:])
    return value


def execute_sql(program: DatalogProgram, db: Database, n: Optional[int] = None):
    """Run the emitted statements on an in-memory duckdb database."""
    statements, _ = sql_statements(program, None, n, db)
    connection = duckdb.connect(":memory:")
    try:
        for statement in statements[:-1]:
            connection.execute(statement)
        rows = connection.execute(statements[-1]).fetchall()
    except duckdb.Error as exc:
        raise EvaluationError(f"SQL execution failed: {exc}") from exc
    finally:
        connection.close()
    if program.goal_arity == 0:
        return bool(rows[0][0])
    return {tuple(decode_sql_value(value) for value in row) for row in rows}


# --- first-order formulas ---

class Formula:
    pass


@dataclass(frozen=True)
class FoTrue(Formula):
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class FoFalse(Formula):
    def __str__(self):
        return "false"


@dataclass(frozen=True)
class FoAtom(Formula):
    atom: Atom

    def __str__(self):
        return str(self.atom)


@dataclass(frozen=True)
class FoEqual(Formula):
    left: Term
    right: Term

    def __str__(self):
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class FoAnd(Formula):
    parts: Tuple[Formula, ...]

    def __str__(self):
        return "(" + " & ".join(str(part) for part in self.parts) + ")"


@dataclass(frozen=True)
class FoOr(Formula):
    parts: Tuple[Formula, ...]

    def __str__(self):
        return "(" + " | ".join(str(part) for part in self.parts) + ")"


@dataclass(frozen=True)
class FoExists(Formula):
    variables: Tuple[str, ...]
    body: Formula

    def __str__(self):
        return f"exists {', '.join(self.variables)}. {self.body}"


def conjunction(parts: Sequence[Formula]) -> Formula:
    kept = [part for part in parts if not isinstance(part, FoTrue)]
    if any(isinstance(part, FoFalse) for part in kept):
        return FoFalse()
    if not kept:
        return FoTrue()
    return kept[0] if len(kept) == 1 else FoAnd(tuple(kept))


def disjunction(parts: Sequence[Formula]) -> Formula:
    kept = [part for part in parts if not isinstance(part, FoFalse)]
    if any(isinstance(part, FoTrue) for part in kept):
        return FoTrue()
    if not kept:
        return FoFalse()
    return kept[0] if len(kept) == 1 else FoOr(tuple(kept))


class _Inliner:
    def __init__(self, program: DatalogProgram):
        self.program = program
        self.idb = set(stratify(program))
        self.counter = 0

    def fresh(self) -> Term:
        self.counter += 1
        return Term.var(f"V{self.counter}")

    def atom(self, atom: Atom) -> Formula:
        if atom.predicate not in self.idb:
            return FoAtom(atom)
        return disjunction([self.rule(rule, atom.args) for rule in self.program.rules_for(atom.predicate)])

    def rule(self, rule: Rule, args: Sequence[Term]) -> Formula:
        mapping: Dict[str, Term] = {}
        equalities: List[Formula] = []
        for head_arg, arg in zip(rule.head.args, args):
            if head_arg.is_variable and head_arg.value not in mapping:
                mapping[head_arg.value] = arg
                continue
            left = mapping[head_arg.value] if head_arg.is_variable else head_arg
            if left == arg:
                continue
            if not left.is_variable and not arg.is_variable:
                return FoFalse()
            equalities.append(FoEqual(left, arg))
        local = []
        for name in rule.variables():
            if name not in mapping:
                mapping[name] = self.fresh()
                local.append(mapping[name].value)
        body = conjunction(equalities + [self.atom(atom.substitute(mapping)) for atom in rule.body])
        if local and not isinstance(body, (FoTrue, FoFalse)):
            return FoExists(tuple(local), body)
        return body


def to_fo(program: DatalogProgram) -> Tuple[Tuple[str, ...], Formula]:
    """Free variables (the goal positions) and the inlined formula."""
    inliner = _Inliner(program)
    free = tuple(f"G{p}" for p in range(1, program.goal_arity + 1))
    goal = Atom(program.goal, tuple(Term.var(name) for name in free))
    return free, inliner.atom(goal)


def to_fo_formula(program: DatalogProgram) -> str:
    free, formula = to_fo(program)
    prefix = f"{program.goal}({', '.join(free)}) <-> " if free else ""
    return prefix + str(formula) + "\n"

"""
Readers and writers for the textual formats.

One lark grammar covers dependencies (.tgd), queries (.cq), facts (.facts)
and Datalog programs (.dl); each file kind is a start symbol. The grammar is
documented in docs/formats.md.
"""

from typing import Iterable, List, Optional, Union

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from .errors import OntoQueryError, ParseError, SourceSpan, ValidationError
from .log import get_logger
from .model import (
    Atom,
    ConjunctiveQuery,
    Database,
    DatalogProgram,
    Rule,
    Term,
    Tgd,
    UnionQuery,
    signature,
)

logger = get_logger(__name__)

GRAMMAR = r"""
    tgd_file: tgd*
    query_file: query_rule*
    facts_file: fact*
    program_file: (pragma | rule)*

    tgd: atom_list "->" [exists] atom_list "."
    exists: "exists" VAR ("," VAR)* ":"

    query_rule: query_head ":-" atom_list "."
    query_head: "?"                                 -> boolean_head
              | IDENT "(" [VAR ("," VAR)*] ")"      -> output_head

    fact: atom "."

    rule: atom [":-" atom_list] "."
    pragma: PRAGMA

    atom_list: atom ("," atom)*
    atom: predicate "(" [term ("," term)*] ")"
        | predicate                                 -> prop_atom
    predicate: VAR | IDENT

    term: VAR                                       -> variable
        | IDENT                                     -> constant
        | ESCAPED_STRING                            -> string
        | INT                                       -> number

    VAR: /[A-Z][A-Za-z0-9_]*/
    IDENT: /[a-z][A-Za-z0-9_]*/
    PRAGMA.2: /%@[^\n]*/
    COMMENT: /%[^\n]*/

    %import common.ESCAPED_STRING
    %import common.INT
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_PARSER = Lark(
    GRAMMAR,
    start=["tgd_file", "query_file", "facts_file", "program_file"],
    parser="lalr",
    propagate_positions=True,
)


def _span(meta) -> Optional[SourceSpan]:
    line = getattr(meta, "line", None)
    column = getattr(meta, "column", None)
    if line is None or column is None:
        return None
    return SourceSpan(line, column)


def _unquote(token: str) -> str:
    return token[1:-1].replace('\\"', '"').replace("\\\\", "\\")


class SyntaxTransformer(Transformer):
    """Turns parse trees into model objects."""

    def __init__(self, numeric_domain: bool = False, program: bool = False):
        super().__init__()
        self.numeric_domain = numeric_domain
        self.program = program

    # --- terms and atoms ---
    def variable(self, children):
        return Term.var(str(children[0]))

    def constant(self, children):
        return Term.const(str(children[0]))

    def string(self, children):
        return Term.const(_unquote(str(children[0])), fresh_copy=self.numeric_domain or self.program)

    @v_args(meta=True)
    def number(self, meta, children):
        value = int(children[0])
        if self.program:
            return Term.num(value)
        if self.numeric_domain:
            return Term.const(str(value), fresh_copy=True)
        raise ParseError(
            f"number {value} is not a domain value (enable numeric-domain mode to read it as a constant)",
            _span(meta),
        )

    def predicate(self, children):
        return str(children[0])

    def atom(self, children):
        predicate, *args = children
        return Atom(predicate, tuple(arg for arg in args if arg is not None))

    def prop_atom(self, children):
        return Atom(children[0], ())

    def atom_list(self, children):
        return list(children)

    # --- dependencies ---
    def exists(self, children):
        return [str(token) for token in children]

    @v_args(meta=True)
    def tgd(self, meta, children):
        body, existentials, head = children
        try:
            return Tgd(tuple(body), tuple(head), tuple(existentials or ()))
        except ValidationError as exc:
            span = _span(meta)
            raise ValidationError(f"{exc} at {span}" if span else str(exc)) from None

    def tgd_file(self, children):
        tgds = list(children)
        signature(tgds)
        return tgds

    # --- queries ---
    def boolean_head(self, children):
        return ("q", ())

    def output_head(self, children):
        name, *names = children
        return (str(name), tuple(str(token) for token in names if token is not None))

    @v_args(meta=True)
    def query_rule(self, meta, children):
        (name, output_vars), atoms = children
        try:
            return ConjunctiveQuery(tuple(atoms), output_vars, name)
        except ValidationError as exc:
            span = _span(meta)
            raise ValidationError(f"{exc} at {span}" if span else str(exc)) from None

    def query_file(self, children):
        if not children:
            raise ParseError("a query file needs at least one rule")
        heads = {(cq.name, cq.arity, cq.is_boolean) for cq in children}
        if len(heads) != 1:
            raise ValidationError("all rules of a query file must share the same head predicate and arity")
        signature([], UnionQuery(tuple(children)))
        if len(children) == 1:
            return children[0]
        return UnionQuery(tuple(children))

    # --- facts ---
    @v_args(meta=True)
    def fact(self, meta, children):
        atom = children[0]
        for arg in atom.args:
            if arg.is_variable:
                raise ParseError(f"facts must be ground, {atom} has variable {arg}", _span(meta))
        return atom

    def facts_file(self, children):
        return Database(children)

    # --- programs ---
    @v_args(meta=True)
    def rule(self, meta, children):
        head, body = children
        try:
            return Rule(head, tuple(body or ()))
        except ValidationError as exc:
            span = _span(meta)
            raise ValidationError(f"{exc} at {span}" if span else str(exc)) from None

    def pragma(self, children):
        words = str(children[0])[2:].split()
        if not words:
            return ("noop", [])
        return (words[0], words[1:])

    def program_file(self, children):
        rules: List[Rule] = []
        options = {"goal": "goal", "goal_arity": 0, "edb": [], "numeric_size": 1, "variant": "", "layout": {}}
        for child in children:
            if isinstance(child, Rule):
                rules.append(child)
                continue
            key, values = child
            if key == "goal" and values:
                name, _, arity = values[0].partition("/")
                options["goal"] = name
                options["goal_arity"] = int(arity or 0)
            elif key == "edb":
                options["edb"].extend(value.partition("/")[0] for value in values)
            elif key == "numeric" and values:
                options["numeric_size"] = int(values[0])
            elif key == "variant" and values:
                options["variant"] = values[0]
            elif key == "layout":
                for value in values:
                    name, _, number = value.partition("=")
                    options["layout"][name] = int(number)
            else:
                logger.debug("ignoring pragma %s", key)
        return DatalogProgram(
            tuple(rules),
            goal=options["goal"],
            edb=frozenset(options["edb"]),
            goal_arity=options["goal_arity"],
            numeric_size=options["numeric_size"],
            variant=options["variant"],
            layout=options["layout"],
        )


def _describe(exc: UnexpectedInput) -> str:
    if isinstance(exc, UnexpectedToken):
        if exc.token.type == "$END":
            return "unexpected end of input"
        return f"unexpected {str(exc.token)!r}"
    if isinstance(exc, UnexpectedCharacters):
        return f"unexpected character {exc.char!r}"
    if isinstance(exc, UnexpectedEOF):
        return "unexpected end of input"
    return "syntax error"


def _end_span(text: str) -> SourceSpan:
    lines = text.split("\n")
    return SourceSpan(len(lines), len(lines[-1]) + 1)


def _parse(text: str, start: str, transformer: SyntaxTransformer):
    try:
        tree = _PARSER.parse(text, start=start)
    except UnexpectedInput as exc:
        line = getattr(exc, "line", -1)
        column = getattr(exc, "column", -1)
        span = SourceSpan(line, column) if isinstance(line, int) and line > 0 else _end_span(text)
        raise ParseError(_describe(exc), span) from None
    try:
        return transformer.transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, OntoQueryError):
            raise exc.orig_exc from None
        raise


def parse_tgds(text: str) -> List[Tgd]:
    return _parse(text, "tgd_file", SyntaxTransformer())


def parse_query(text: str, numeric_domain: bool = False) -> Union[ConjunctiveQuery, UnionQuery]:
    return _parse(text, "query_file", SyntaxTransformer(numeric_domain=numeric_domain))


def parse_facts(text: str, numeric_domain: bool = False) -> Database:
    """Read ground facts; numbers are only accepted in numeric-domain mode, as fresh constants."""
    return _parse(text, "facts_file", SyntaxTransformer(numeric_domain=numeric_domain))


def parse_program(text: str) -> DatalogProgram:
    return _parse(text, "program_file", SyntaxTransformer(program=True))


def _serialize_program(program: DatalogProgram) -> str:
    lines = [f"%@ goal {program.goal}/{program.goal_arity}"]
    if program.edb:
        arities = program.arities()
        edb = " ".join(f"{name}/{arities.get(name, 0)}" for name in sorted(program.edb))
        lines.append(f"%@ edb {edb}")
    lines.append(f"%@ numeric {program.numeric_size}")
    if program.variant:
        lines.append(f"%@ variant {program.variant}")
    if program.layout:
        lines.append("%@ layout " + " ".join(f"{key}={value}" for key, value in sorted(program.layout.items())))
    lines.extend(str(rule) for rule in program.rules)
    return "\n".join(lines) + "\n"


def serialize(item) -> str:
    """Text form that the matching parse_* function reads back."""
    if isinstance(item, DatalogProgram):
        return _serialize_program(item)
    if isinstance(item, Database):
        return "".join(f"{fact}.\n" for fact in item.sorted_facts())
    if isinstance(item, (Tgd, ConjunctiveQuery, UnionQuery, Atom, Rule)):
        text = str(item)
        if isinstance(item, Atom):
            text += "."
        return text + "\n"
    if isinstance(item, Iterable) and not isinstance(item, str):
        return "".join(serialize(element) for element in item)
    raise TypeError(f"cannot serialize {type(item).__name__}")

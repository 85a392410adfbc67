from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SourceSpan:
    """1-based position of a token in an input file."""

    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class OntoQueryError(Exception):
    """Base class for every error raised by the toolchain."""


class ParseError(OntoQueryError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        where = f" at {span}" if span is not None else ""
        super().__init__(f"{message}{where}")
        self.message = message


class ValidationError(OntoQueryError):
    """A model invariant does not hold."""


class RewriteError(OntoQueryError):
    """The rewriter cannot build a program for the given inputs."""


class EvaluationError(OntoQueryError):
    pass


class RecursionDetected(EvaluationError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        path = " -> ".join(str(edge[0]) for edge in self.cycle)
        super().__init__(f"program is recursive: {path} -> {self.cycle[0][0]}")


class UnknownPredicate(EvaluationError):
    def __init__(self, predicate: str):
        self.predicate = predicate
        super().__init__(f"predicate {predicate!r} has no EDB or IDB definition")


class ResourceLimitExceeded(OntoQueryError):
    """A wall-clock budget or atom cap ran out before a result was known."""


class UnsupportedAxiom(OntoQueryError):
    pass


class ConfigError(OntoQueryError):
    """An ONTOQUERY_* environment variable holds a value of the wrong kind."""

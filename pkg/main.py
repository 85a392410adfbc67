#!/usr/bin/env python3
"""
ontoquery - Main Entry Point

Rewrites dependencies plus a conjunctive query into nonrecursive Datalog,
evaluates programs, runs the chase oracle and the differential suite.
Every flag default comes from an ONTOQUERY_<FIELD> environment variable
when one is set.
"""

import argparse
import sys
from typing import Optional, Sequence

from ontoquery.config import EMIT_CHOICES, VARIANT_CHOICES, Settings
from ontoquery.errors import ConfigError
from ontoquery.harness import PROFILES
from ontoquery_cli import OntoQueryCLI


def _add_inputs(parser, *names):
    helps = {
        "tgds": "Dependency file (.tgd), '-' for stdin.",
        "query": "Query file (.cq), '-' for stdin.",
        "facts": "Fact file (.facts), '-' for stdin.",
    }
    for name in names:
        parser.add_argument(f"--{name}", required=True, help=helps[name])


def _add_evaluation(parser, settings: Settings):
    parser.add_argument(
        "--timeout-ms",
        type=int,
        default=settings.timeout_ms,
        help="Wall-clock budget for evaluation; 0 disables it.",
    )
    parser.add_argument(
        "--materialize-limit",
        type=int,
        default=settings.materialize_limit,
        help="Largest estimated relation that is stored instead of expanded during search.",
    )
    parser.add_argument("--trace", action="store_true", help="Print the assignment that satisfied the goal.")
    parser.add_argument(
        "--exit-status",
        action="store_true",
        help="Exit with status 1 when a Boolean goal is false.",
    )


def _settings(parser) -> Settings:
    try:
        return Settings.from_env()
    except ConfigError as exc:
        parser.error(str(exc))


def parse_args(argv: Optional[Sequence[str]] = None):
    parser = argparse.ArgumentParser(
        prog="ontoquery",
        description="Rewrite dependencies and conjunctive queries into nonrecursive Datalog.",
    )
    settings = _settings(parser)
    parser.add_argument(
        "--numeric-domain",
        action="store_true",
        default=settings.numeric_domain,
        help="Read digit strings in facts and queries as ordinary constants.",
    )
    parser.add_argument(
        "--max-width",
        type=int,
        default=settings.max_width,
        help="Largest bit width allowed for the bitvec variant.",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    rewrite = commands.add_parser("rewrite", help="Compile dependencies and a query into a program.")
    _add_inputs(rewrite, "tgds", "query")
    rewrite.add_argument("--variant", choices=VARIANT_CHOICES, default=settings.variant)
    rewrite.add_argument(
        "--steps",
        type=int,
        default=settings.steps,
        help="Chase steps N the program may guess; defaults to the smallest allowed value.",
    )
    rewrite.add_argument("--emit", choices=EMIT_CHOICES, default=settings.emit, help="Output language.")
    rewrite.add_argument("--stats", action="store_true", help="Print size statistics as key=value lines.")
    rewrite.add_argument("--output", "-o", default=None, help="Write the program here instead of stdout.")

    evaluate = commands.add_parser("eval", help="Evaluate a program file over a fact file.")
    evaluate.add_argument("--program", required=True, help="Program file (.dl), '-' for stdin.")
    _add_inputs(evaluate, "facts")
    evaluate.add_argument(
        "--numbers",
        type=int,
        default=None,
        help="Largest number of the numeric extension; defaults to the program's own.",
    )
    _add_evaluation(evaluate, settings)

    chase = commands.add_parser("chase", help="Run the reference chase and print its steps.")
    _add_inputs(chase, "tgds", "facts")
    chase.add_argument("--query", default=None, help="Print only the witness for this query.")
    chase.add_argument("--max-steps", type=int, default=settings.steps or 10, help="Derivation levels to saturate.")
    chase.add_argument("--level", type=int, default=None, help="Show steps up to this derivation level only.")
    chase.add_argument("--atom-cap", type=int, default=settings.atom_cap)

    answer = commands.add_parser("answer", help="Rewrite, then evaluate over the given facts.")
    _add_inputs(answer, "tgds", "query", "facts")
    answer.add_argument("--variant", choices=VARIANT_CHOICES, default=settings.variant)
    answer.add_argument("--steps", type=int, default=settings.steps)
    answer.add_argument(
        "--auto-n",
        action="store_true",
        help="Pick N from an oracle witness over these facts (verification only: N then depends on the data).",
    )
    answer.add_argument("--atom-cap", type=int, default=settings.atom_cap)
    _add_evaluation(answer, settings)

    suite = commands.add_parser("verify", help="Differential suite: oracle against every program variant.")
    suite.add_argument("--seeds", default="1-50", help="Seed range 'a-b', a list 'a,b,c' or a count.")
    suite.add_argument("--profile", choices=sorted(PROFILES), default="linear")
    suite.add_argument("--steps", type=int, default=settings.steps or 4, help="N for instances the oracle rejects.")
    suite.add_argument("--variants", default=",".join(VARIANT_CHOICES), help="Comma-separated variants.")
    suite.add_argument("--workers", type=int, default=settings.workers)
    suite.add_argument("--report", default=None, help="Write one JSON object per instance to this file.")
    suite.add_argument("--sql", action="store_true", help="Also execute the reduced program as SQL.")
    suite.add_argument("--timeout-ms", type=int, default=settings.timeout_ms)
    suite.add_argument("--atom-cap", type=int, default=settings.atom_cap)

    tbox = commands.add_parser("compile-tbox", help="Translate a DL-Lite TBox (.dlt) into dependencies.")
    tbox.add_argument("--tbox", required=True, help="TBox file, '-' for stdin.")
    tbox.add_argument("--output", "-o", default=None)

    normalize = commands.add_parser("normalize", help="Bring dependencies into normal form.")
    _add_inputs(normalize, "tgds")
    normalize.add_argument("--output", "-o", default=None)

    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the command line"""
    args = parse_args(argv)
    cli = OntoQueryCLI(numeric_domain=args.numeric_domain, max_width=args.max_width)
    return cli.run(args)


if __name__ == "__main__":
    sys.exit(main())

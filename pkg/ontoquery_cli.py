#!/usr/bin/env python3
"""
Command handlers behind main.py, one run_<command> method per subcommand.
"""

import sys
from typing import List, Optional

from ontoquery.chase import chase_to_level, entails, format_trace
from ontoquery.config import timeout_seconds
from ontoquery.dllite import compile_tbox, negative_constraint_query, parse_tbox
from ontoquery.emitters import to_fo_formula, to_sql
from ontoquery.encoding import EncodingLayout, format_encoding_table
from ontoquery.errors import OntoQueryError, ResourceLimitExceeded
from ontoquery.evaluator import evaluate
from ontoquery.harness import PROFILES, run_suite, summarize
from ontoquery.log import get_logger
from ontoquery.model import RewriteParams, Variant, disjuncts_of
from ontoquery.normalizer import to_normal_form, uniformize
from ontoquery.parser import parse_facts, parse_program, parse_query, parse_tgds, serialize
from ontoquery.rewriter import build_program, program_stats

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3

COMMENT = {"dl": "% ", "sql": "-- ", "fo": "% "}


def parse_seeds(text: str) -> List[int]:
    """'1-200' is a range, '3,5,8' a list and a bare number a count starting at 1."""
    text = text.strip()
    if "," in text:
        return [int(part) for part in text.split(",") if part.strip()]
    if "-" in text:
        start, _, end = text.partition("-")
        return list(range(int(start), int(end) + 1))
    return list(range(1, int(text) + 1))


class OntoQueryCLI:
    def __init__(self, numeric_domain: bool = False, max_width: int = 16):
        self.numeric_domain = numeric_domain
        self.max_width = max_width

    def read(self, path: str) -> str:
        if path == "-":
            return sys.stdin.read()
        with open(path) as handle:
            return handle.read()

    def write(self, text: str, path: Optional[str] = None):
        if path:
            with open(path, "w") as handle:
                handle.write(text)
        else:
            print(text, end="")

    # --- shared steps ---

    def load_problem(self, args):
        sigma = parse_tgds(self.read(args.tgds))
        query = parse_query(self.read(args.query), self.numeric_domain)
        normal, _ = to_normal_form(sigma)
        return normal, query, uniformize(normal, query)

    def smallest_steps(self, u) -> int:
        return max(1, u.ell, max(len(cq.atoms) for cq in disjuncts_of(u.query_u)))

    def print_result(self, result, exit_status: bool) -> int:
        if isinstance(result, bool):
            print("true" if result else "false")
            return EXIT_FALSE if exit_status and not result else EXIT_OK
        for row in sorted(result, key=lambda row: tuple(str(value) for value in row)):
            print(",".join(str(value) for value in row))
        return EXIT_OK

    def print_trace(self, program, witness):
        if witness is None:
            print("% no satisfying assignment")
            return
        layout = EncodingLayout.from_dict(program.layout)
        if layout is None:
            for name in sorted(witness):
                print(f"% {name} = {witness[name]}")
            return
        bitvec = program.variant == Variant.BITVEC.value
        for line in format_encoding_table(witness, layout, bitvec).splitlines():
            print(f"% {line}")

    def evaluate_program(self, program, db, args, n=None):
        outcome = evaluate(
            program,
            db,
            n,
            trace=args.trace,
            timeout=timeout_seconds(args.timeout_ms),
            materialize_limit=args.materialize_limit,
        )
        if args.trace:
            result, witness = outcome
            code = self.print_result(result, args.exit_status)
            self.print_trace(program, witness)
            return code
        return self.print_result(outcome, args.exit_status)

    # --- commands ---

    def run_rewrite(self, args) -> int:
        _, _, u = self.load_problem(args)
        steps = args.steps or self.smallest_steps(u)
        program = build_program(u, RewriteParams(steps, args.variant), self.max_width)
        if args.emit == "sql":
            text = to_sql(program)
        elif args.emit == "fo":
            text = to_fo_formula(program)
        else:
            text = serialize(program)
        self.write(text, args.output)
        if args.stats:
            prefix = "" if args.output else COMMENT[args.emit]
            for key, value in program_stats(program).items():
                print(f"{prefix}{key}={value}")
        return EXIT_OK

    def run_eval(self, args) -> int:
        program = parse_program(self.read(args.program))
        db = parse_facts(self.read(args.facts), self.numeric_domain)
        return self.evaluate_program(program, db, args, args.numbers)

    def run_chase(self, args) -> int:
        sigma, _ = to_normal_form(parse_tgds(self.read(args.tgds)))
        db = parse_facts(self.read(args.facts), self.numeric_domain)
        if args.query:
            query = parse_query(self.read(args.query), self.numeric_domain)
            found = entails(db, sigma, query, args.max_steps, args.atom_cap)
            print("true" if found.holds else "false")
            if found.holds:
                self.write(format_trace(found.witness))
            return EXIT_OK
        run = chase_to_level(db, sigma, args.max_steps, args.atom_cap)
        steps = [step for step in run.sequence() if args.level is None or step.level <= args.level]
        self.write(format_trace(steps))
        if run.truncated:
            print(f"% truncated after {len(run.steps)} atoms")
        return EXIT_OK

    def run_answer(self, args) -> int:
        sigma, query, u = self.load_problem(args)
        db = parse_facts(self.read(args.facts), self.numeric_domain)
        steps = args.steps or self.smallest_steps(u)
        if args.auto_n:
            found = entails(db, sigma, query, max(steps, self.smallest_steps(u)), args.atom_cap)
            if found.holds:
                steps = max(self.smallest_steps(u), found.witness_length)
            logger.info("chose N=%d from the oracle", steps)
        program = build_program(u, RewriteParams(steps, args.variant), self.max_width)
        return self.evaluate_program(program, u.pad(db), args)

    def run_verify(self, args) -> int:
        variants = [Variant.parse(name) for name in args.variants.split(",") if name.strip()]
        reports = run_suite(
            parse_seeds(args.seeds),
            PROFILES[args.profile],
            RewriteParams(args.steps),
            variants,
            workers=args.workers,
            sql=args.sql,
            report_path=args.report,
            timeout=timeout_seconds(args.timeout_ms),
            atom_cap=args.atom_cap,
            max_width=self.max_width,
        )
        for report in reports:
            if not report.agree:
                print(f"seed {report.seed}: " + "; ".join(report.failures))
        summary = summarize(reports)
        print(" ".join(f"{key}={value}" for key, value in summary.items()))
        return EXIT_OK if summary["failed"] == 0 else EXIT_FALSE

    def run_compile_tbox(self, args) -> int:
        axioms = parse_tbox(self.read(args.tbox))
        text = serialize(compile_tbox(axioms))
        violations = negative_constraint_query(axioms)
        if violations is not None:
            text += "".join(f"% violation {cq}\n" for cq in disjuncts_of(violations))
        self.write(text, args.output)
        return EXIT_OK

    def run_normalize(self, args) -> int:
        normal, report = to_normal_form(parse_tgds(self.read(args.tgds)))
        self.write(serialize(normal), args.output)
        logger.info("normal form size %d -> %d", report.size_before, report.size_after)
        return EXIT_OK

    def run(self, args) -> int:
        handler = getattr(self, "run_" + args.command.replace("-", "_"))
        try:
            return handler(args)
        except ResourceLimitExceeded as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_LIMIT
        except OntoQueryError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE

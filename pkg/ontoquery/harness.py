"""
Random instances and differential verification.

verify() runs the chase oracle and every requested program variant on one
instance and records where they disagree. run_suite() does this for many
seeds, optionally in a process pool, and writes one JSON object per line.
"""

import json
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .chase import DEFAULT_ATOM_CAP, certain_answers_oracle, entails
from .emitters import execute_sql
from .errors import OntoQueryError, ResourceLimitExceeded
from .evaluator import evaluate
from .log import get_logger
from .model import (
    Atom,
    ConjunctiveQuery,
    Database,
    Query,
    RewriteParams,
    Term,
    Tgd,
    Variant,
    disjuncts_of,
    joint_size,
)
from .normalizer import UniformizedProblem, to_normal_form, uniformize
from .parser import serialize
from .rewriter import build_program, expected_arity, program_stats, rewrite_certain_answers

logger = get_logger(__name__)

CONSTANTS = ("a", "b", "c", "d", "e")
WITNESS_SLACK = 2


@dataclass(frozen=True)
class Profile:
    max_rules: int = 5
    max_arity: int = 3
    max_body: int = 2
    max_facts: int = 15
    max_query_atoms: int = 3
    linear_only: bool = True
    max_heads: int = 1
    output_vars: int = 0
    predicates: int = 4
    constants: int = 4


PROFILES = {
    "linear": Profile(),
    "general": Profile(linear_only=False, max_rules=4, max_facts=10),
    "multihead": Profile(linear_only=False, max_rules=3, max_heads=2, max_facts=8),
    "answers": Profile(max_rules=4, max_facts=10, max_query_atoms=2, output_vars=1),
}


@dataclass(frozen=True)
class Instance:
    seed: int
    sigma: Tuple[Tgd, ...]
    db: Database
    query: Query

    def text(self) -> str:
        return (
            "% dependencies\n" + serialize(self.sigma)
            + "% query\n" + serialize(self.query)
            + "% facts\n" + serialize(self.db)
        )


class _Generator:
    def __init__(self, seed: int, profile: Profile):
        self.rng = random.Random(seed)
        self.profile = profile
        count = self.rng.randint(2, max(2, profile.predicates))
        self.arities = {f"R{index}": self.rng.randint(1, profile.max_arity) for index in range(1, count + 1)}
        self.names = list(self.arities)

    def _args(self, arity: int, pool: List[str], prefix: str, share: float) -> Tuple[Term, ...]:
        args = []
        for _ in range(arity):
            if pool and self.rng.random() < share:
                args.append(Term.var(self.rng.choice(pool)))
            else:
                pool.append(f"{prefix}{len(pool) + 1}")
                args.append(Term.var(pool[-1]))
        return tuple(args)

    def tgd(self) -> Tgd:
        width = 1 if self.profile.linear_only else self.rng.randint(1, self.profile.max_body)
        pool: List[str] = []
        body = []
        for _ in range(width):
            name = self.rng.choice(self.names)
            body.append(Atom(name, self._args(self.arities[name], pool, "X", 0.3)))
        existentials: List[str] = []
        heads = []
        for _ in range(self.rng.randint(1, self.profile.max_heads)):
            name = self.rng.choice(self.names)
            args = []
            for _ in range(self.arities[name]):
                if self.rng.random() < 0.75:
                    args.append(Term.var(self.rng.choice(pool)))
                    continue
                existential = f"Z{self.rng.randint(1, self.profile.max_heads)}"
                if existential not in existentials:
                    existentials.append(existential)
                args.append(Term.var(existential))
            heads.append(Atom(name, tuple(args)))
        return Tgd(tuple(body), tuple(heads), tuple(existentials))

    def facts(self) -> Database:
        pool = CONSTANTS[: self.profile.constants]
        facts = []
        for _ in range(self.rng.randint(1, self.profile.max_facts)):
            name = self.rng.choice(self.names)
            facts.append(Atom(name, tuple(Term.const(self.rng.choice(pool)) for _ in range(self.arities[name]))))
        return Database(facts)

    def query(self) -> ConjunctiveQuery:
        pool: List[str] = []
        atoms = []
        for _ in range(self.rng.randint(1, self.profile.max_query_atoms)):
            name = self.rng.choice(self.names)
            atoms.append(Atom(name, self._args(self.arities[name], pool, "Y", 0.4)))
        outputs = tuple(pool[: self.profile.output_vars])
        return ConjunctiveQuery(tuple(atoms), outputs, "ans" if outputs else "q")


def gen_instance(seed: int, profile: Profile = Profile()) -> Instance:
    """Deterministic random (dependencies, facts, query) for a seed."""
    generator = _Generator(seed, profile)
    sigma = tuple(generator.tgd() for _ in range(generator.rng.randint(1, profile.max_rules)))
    db = generator.facts()
    query = generator.query()
    return Instance(seed, sigma, db, query)


@dataclass
class VerificationReport:
    seed: int
    oracle: str = "unknown"
    input_size: int = 0
    n_steps: int = 0
    answers: Dict[str, object] = field(default_factory=dict)
    sizes: Dict[str, Dict[str, int]] = field(default_factory=dict)
    millis: Dict[str, float] = field(default_factory=dict)
    sql: Optional[str] = None
    failures: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        data = asdict(self)
        data["agree"] = self.agree
        return data


def _render(answer) -> object:
    if answer is None:
        return "unknown"
    if isinstance(answer, bool):
        return "true" if answer else "false"
    return sorted(list(row) for row in answer)


def _bound(u: UniformizedProblem) -> int:
    return max(u.ell, max(len(cq.atoms) for cq in disjuncts_of(u.query_u)))


def _substitute(cq: ConjunctiveQuery, row: Sequence[str]) -> ConjunctiveQuery:
    mapping = {name: Term.const(value) for name, value in zip(cq.output_vars, row)}
    return ConjunctiveQuery(tuple(atom.substitute(mapping) for atom in cq.atoms))


def _oracle_boolean(instance, sigma, bound, params, atom_cap, report):
    levels = max(bound, params.n_steps)
    found = entails(instance.db, sigma, instance.query, levels, atom_cap)
    if found.holds:
        report.oracle = "true"
        return True, max(bound, found.witness_length + WITNESS_SLACK)
    if found.truncated:
        return None, levels
    report.oracle = "false"
    return False, levels


def _oracle_answers(instance, sigma, bound, params, atom_cap, report):
    """Oracle answers whose witnesses fit in the chosen N, and every answer within its levels."""
    levels = max(bound, params.n_steps)
    found = certain_answers_oracle(instance.db, sigma, instance.query, levels, atom_cap)
    lengths = {}
    for row in found:
        boolean = [_substitute(cq, row) for cq in disjuncts_of(instance.query)]
        best = min(
            (entails(instance.db, sigma, cq, levels, atom_cap) for cq in boolean),
            key=lambda entailment: entailment.witness_length if entailment.holds else float("inf"),
        )
        lengths[row] = best.witness_length
    n_steps = max([levels] + [length + WITNESS_SLACK for length in lengths.values()])
    if n_steps > levels:
        found = certain_answers_oracle(instance.db, sigma, instance.query, n_steps, atom_cap)
    report.oracle = f"{len(lengths)} answers"
    return (set(lengths), found), n_steps


def _compare(variant: str, expected, answer, report: VerificationReport) -> None:
    if answer is None:
        report.failures.append(f"{variant}: resource limit")
        return
    if isinstance(expected, tuple):
        required, allowed = expected
        if not answer <= allowed:
            report.failures.append(f"{variant}: answers outside the chase {sorted(answer - allowed)}")
        if not required <= answer:
            report.failures.append(f"{variant}: missing answers {sorted(required - answer)}")
        return
    if expected is None:
        if answer:
            report.failures.append(f"{variant}: true while the oracle gave no verdict")
        else:
            report.notes.append(f"{variant}: vacuous false")
        return
    if answer != expected:
        kind = "unsound" if answer else "incomplete"
        report.failures.append(f"{variant}: {kind}, program {_render(answer)} vs oracle {_render(expected)}")


def verify(
    instance: Instance,
    params: RewriteParams,
    variants: Iterable = tuple(Variant),
    sql: bool = False,
    timeout: Optional[float] = None,
    atom_cap: int = DEFAULT_ATOM_CAP,
    max_width: int = 16,
    materialize_limit: int = 20000,
) -> VerificationReport:
    """Compare the oracle with each program variant on one instance."""
    report = VerificationReport(instance.seed, input_size=joint_size(instance.sigma, instance.query))
    try:
        sigma, _ = to_normal_form(instance.sigma)
        u = uniformize(sigma, instance.query)
    except OntoQueryError as exc:
        report.failures.append(f"input: {exc}")
        return report
    bound = _bound(u)
    if instance.query.is_boolean:
        expected, n_steps = _oracle_boolean(instance, sigma, bound, params, atom_cap, report)
    else:
        expected, n_steps = _oracle_answers(instance, sigma, bound, params, atom_cap, report)
    report.n_steps = n_steps
    padded = u.pad(instance.db)
    rewrite = build_program if instance.query.is_boolean else rewrite_certain_answers

    results = {}
    for variant in (Variant.parse(v) for v in variants):
        name = variant.value
        started = time.perf_counter()
        try:
            program = rewrite(u, RewriteParams(n_steps, variant), max_width)
            stats = program_stats(program)
            stats["expected_arity"] = expected_arity(program)
            report.sizes[name] = stats
            exact = variant is not Variant.BITVEC
            limit = stats["expected_arity"]
            if (stats["max_arity"] != limit) if exact else (stats["max_arity"] > limit):
                report.failures.append(f"{name}: arity {stats['max_arity']} against {limit}")
            answer = evaluate(program, padded, timeout=timeout, materialize_limit=materialize_limit)
        except ResourceLimitExceeded:
            answer = None
        except OntoQueryError as exc:
            report.failures.append(f"{name}: {exc}")
            continue
        report.millis[name] = round((time.perf_counter() - started) * 1000, 1)
        report.answers[name] = _render(answer)
        results[name] = answer
        _compare(name, expected, answer, report)

    known = {name: answer for name, answer in results.items() if answer is not None}
    if len({_freeze(answer) for answer in known.values()}) > 1:
        report.failures.append("variants disagree: " + ", ".join(f"{k}={_render(v)}" for k, v in known.items()))

    if sql:
        _check_sql(u, n_steps, padded, results.get(Variant.REDUCED.value), report)
    logger.info("seed %d: oracle %s, N=%d, %s", instance.seed, report.oracle, n_steps,
                "agree" if report.agree else "; ".join(report.failures))
    return report


def _freeze(answer):
    return answer if isinstance(answer, bool) else frozenset(answer)


def _check_sql(u, n_steps, padded, reference, report) -> None:
    try:
        program = build_program(u, RewriteParams(n_steps, Variant.REDUCED))
        if reference is None:
            reference = evaluate(program, padded)
        answer = execute_sql(program, padded)
    except ResourceLimitExceeded:
        report.failures.append("sql: resource limit")
        return
    except OntoQueryError as exc:
        report.failures.append(f"sql: {exc}")
        return
    report.sql = "agree" if _freeze(answer) == _freeze(reference) else "disagree"
    if report.sql == "disagree":
        report.failures.append(f"sql: {_render(answer)} vs evaluator {_render(reference)}")


def _verify_seed(job) -> VerificationReport:
    seed, profile, params, variants, sql, options = job
    return verify(gen_instance(seed, profile), params, variants, sql, **options)


def run_suite(
    seeds: Iterable[int],
    profile: Profile,
    params: RewriteParams,
    variants: Iterable = tuple(Variant),
    workers: int = 1,
    sql: bool = False,
    report_path: Optional[str] = None,
    **options,
) -> List[VerificationReport]:
    """Verify one generated instance per seed; reports come back sorted by seed."""
    variants = tuple(Variant.parse(v) for v in variants)
    jobs = [(seed, profile, params, variants, sql, options) for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_verify_seed, jobs))
    else:
        reports = [_verify_seed(job) for job in jobs]
    reports.sort(key=lambda report: report.seed)
    if report_path:
        write_report(reports, report_path)
    summary = summarize(reports)
    logger.info(
        "suite: %d instances, %d agree, %d failed, %d out of resources",
        summary["instances"],
        summary["agree"],
        summary["failed"],
        summary["resource"],
    )
    return reports


def write_report(reports: Sequence[VerificationReport], path: str) -> None:
    with open(path, "w") as handle:
        for report in reports:
            handle.write(json.dumps(report.as_dict(), sort_keys=True) + "\n")


def summarize(reports: Sequence[VerificationReport]) -> Dict[str, int]:
    return {
        "instances": len(reports),
        "agree": sum(1 for report in reports if report.agree),
        "failed": sum(1 for report in reports if not report.agree),
        "positive": sum(1 for report in reports if report.oracle == "true"),
        "vacuous": sum(1 for report in reports if any("vacuous" in note for note in report.notes)),
        "resource": sum(1 for report in reports if any("resource limit" in failure for failure in report.failures)),
    }

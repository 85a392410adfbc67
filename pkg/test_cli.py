#!/usr/bin/env python3
"""
Tests for the command line
"""

import pytest

from conftest import SAMPLES
from main import main, parse_args
from ontoquery.config import Settings, timeout_seconds
from ontoquery.errors import ConfigError
from ontoquery_cli import EXIT_FALSE, EXIT_OK, EXIT_USAGE, parse_seeds

FIG1 = [
    "--tgds", str(SAMPLES / "fig1.tgd"),
    "--query", str(SAMPLES / "fig1.cq"),
]
PADDED_FACTS = "R1(a, b, a). R1(c, d, c). R2(e, g, e). R3(g, a, g). R3(g, h, g).\n"


def test_answer(capsys):
    code = main(["answer", *FIG1, "--facts", str(SAMPLES / "fig1.facts"), "--steps", "6"])
    assert code == EXIT_OK
    assert capsys.readouterr().out == "true\n"


def test_answer_with_oracle_steps(capsys):
    code = main(["answer", *FIG1, "--facts", str(SAMPLES / "fig1.facts"), "--auto-n", "--variant", "reduced"])
    assert code == EXIT_OK
    assert capsys.readouterr().out == "true\n"


def test_answer_trace_prints_the_encoding(capsys):
    main(["answer", *FIG1, "--facts", str(SAMPLES / "fig1.facts"), "--steps", "6", "--trace"])
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "true"
    assert lines[1].split() == ["%", "i", "r", "f", "x1", "x2", "x3", "s", "c1", "c2"]
    assert len(lines) == 8


def test_certain_answers(capsys):
    args = ["answer", "--tgds", str(SAMPLES / "fig1.tgd"), "--query", str(SAMPLES / "fig1_answers.cq")]
    code = main(args + ["--facts", str(SAMPLES / "fig1.facts"), "--steps", "6"])
    assert code == EXIT_OK
    assert capsys.readouterr().out == "a\n"


def test_rewrite_with_stats(capsys):
    assert main(["rewrite", *FIG1, "--steps", "6", "--stats"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("%@ goal goal/0\n")
    assert "%@ variant wide" in out
    assert "% max_arity=9\n" in out


def test_rewrite_to_file_then_eval(tmp_path, capsys):
    program = tmp_path / "fig1.dl"
    facts = tmp_path / "fig1_padded.facts"
    facts.write_text(PADDED_FACTS)
    assert main(["rewrite", *FIG1, "--steps", "6", "--variant", "reduced", "-o", str(program), "--stats"]) == 0
    assert "max_arity=4\n" in capsys.readouterr().out
    assert program.read_text().startswith("%@ goal goal/0\n")
    assert main(["eval", "--program", str(program), "--facts", str(facts)]) == EXIT_OK
    assert capsys.readouterr().out == "true\n"


def test_rewrite_emits_sql_and_formulas(capsys):
    main(["rewrite", *FIG1, "--emit", "sql"])
    sql = capsys.readouterr().out
    assert sql.startswith("-- goal goal/0")
    assert "CREATE VIEW goal AS" in sql
    main(["rewrite", *FIG1, "--emit", "fo"])
    assert capsys.readouterr().out.startswith("exists ")


def test_eval_exit_status(tmp_path, capsys):
    program = tmp_path / "empty.dl"
    program.write_text("%@ goal goal/0\n")
    facts = tmp_path / "one.facts"
    facts.write_text("E(a).\n")
    assert main(["eval", "--program", str(program), "--facts", str(facts), "--exit-status"]) == EXIT_FALSE
    assert capsys.readouterr().out == "false\n"
    assert main(["eval", "--program", str(program), "--facts", str(facts)]) == EXIT_OK


def test_chase_witness(capsys):
    main(["chase", "--tgds", str(SAMPLES / "fig1.tgd"), "--facts", str(SAMPLES / "fig1.facts"),
          "--query", str(SAMPLES / "fig1.cq"), "--max-steps", "3"])
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "true"
    assert lines[1] == "1\tR1(a,b)\tdb\t-"
    assert len(lines) == 7


def test_chase_levels(capsys):
    main(["chase", "--tgds", str(SAMPLES / "fig1.tgd"), "--facts", str(SAMPLES / "fig1.facts"), "--level", "0"])
    assert len(capsys.readouterr().out.splitlines()) == 5


def test_compile_tbox(capsys):
    assert main(["compile-tbox", "--tbox", str(SAMPLES / "university.dlt")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Professor(X) -> exists Y: teaches(X,Y).\n" in out
    assert out.endswith("% violation ? :- Course(X), Person(X).\n")


def test_normalize(tmp_path, capsys):
    tgds = tmp_path / "heads.tgd"
    tgds.write_text("A(X) -> B(X), C(X).\n")
    assert main(["normalize", "--tgds", str(tgds)]) == EXIT_OK
    assert capsys.readouterr().out == "A(X) -> B(X).\nA(X) -> C(X).\n"


def test_verify(capsys):
    code = main(["verify", "--seeds", "1,2", "--variants", "reduced", "--steps", "2", "--timeout-ms", "5000"])
    assert code in (EXIT_OK, EXIT_FALSE)
    assert capsys.readouterr().out.splitlines()[-1].startswith("instances=2 ")


def test_input_errors(tmp_path, capsys):
    assert main(["normalize", "--tgds", str(tmp_path / "missing.tgd")]) == EXIT_USAGE
    assert capsys.readouterr().err.startswith("error: ")
    broken = tmp_path / "broken.tgd"
    broken.write_text("A(X) -> -> B(X).\n")
    assert main(["normalize", "--tgds", str(broken)]) == EXIT_USAGE
    assert main(["rewrite", *FIG1, "--steps", "2"]) == EXIT_USAGE
    assert "N=2" in capsys.readouterr().err


def test_usage_errors():
    with pytest.raises(SystemExit) as excinfo:
        main(["rewrite", "--tgds", "x.tgd"])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit):
        main(["rewrite", *FIG1, "--variant", "narrow"])


def test_malformed_environment_is_a_usage_error(monkeypatch, capsys):
    monkeypatch.setenv("ONTOQUERY_TIMEOUT_MS", "soon")
    with pytest.raises(SystemExit) as excinfo:
        main(["normalize", "--tgds", str(SAMPLES / "fig1.tgd")])
    assert excinfo.value.code == EXIT_USAGE
    assert "ONTOQUERY_TIMEOUT_MS must be an integer" in capsys.readouterr().err


def test_environment_supplies_defaults(monkeypatch):
    monkeypatch.setenv("ONTOQUERY_VARIANT", "Reduced")
    monkeypatch.setenv("ONTOQUERY_TIMEOUT_MS", "0")
    args = parse_args(["answer", *FIG1, "--facts", "x.facts"])
    assert args.variant == "reduced"
    assert timeout_seconds(args.timeout_ms) is None
    explicit = parse_args(["answer", *FIG1, "--facts", "x.facts", "--timeout-ms", "250"])
    assert timeout_seconds(explicit.timeout_ms) == 0.25
    monkeypatch.setenv("ONTOQUERY_EMIT", "xml")
    with pytest.raises(ConfigError):
        Settings.from_env()


def test_seed_ranges():
    assert parse_seeds("3-5") == [3, 4, 5]
    assert parse_seeds("2,7") == [2, 7]
    assert parse_seeds("3") == [1, 2, 3]


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))

"""Front-end tests: exit codes, worked examples, JSON determinism."""

import json
import subprocess
import sys
from pathlib import Path

from lamc.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
WILD = str(FIXTURES / "wild.json")
HALT_LOOP = str(FIXTURES / "halt_loop.json")
HALT3 = str(FIXTURES / "halt_halt3.json")
EXTRA = str(FIXTURES / "extra_formulae.json")


def run_cli(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


### eval

def test_eval_reports_a_cycle(capsys):
    rc, out, _ = run_cli(capsys, "eval",
                         r"(\x.x) * ((\x. x x) (\x. x x)) . a0",
                         "--steps", "10")
    assert rc == 0
    assert "cycle(entry=1, period=2)" in out


def test_eval_trace_of_a_two_step_stuck_run(capsys):
    rc, out, _ = run_cli(capsys, "eval", r"(\x.x) (\x.x) * a0", "--trace")
    assert rc == 0
    lines = out.strip().splitlines()
    assert lines[-2] == r"step 2: (\x. x) * a0"
    assert lines[-1] == "terminal: stuck"
    assert len(lines) == 4


def test_eval_control_grabs_the_stack_in_one_step(capsys):
    rc, out, _ = run_cli(capsys, "eval", r"cc * (\x.x) . a0", "--trace")
    assert rc == 0
    assert r"step 1: (\x. x) * k[a0] . a0" in out


def test_eval_parse_error_names_the_position(capsys):
    rc, _, err = run_cli(capsys, "eval", r"(\x. * a0")
    assert rc == 2
    assert "column" in err


def test_eval_budget_can_come_from_the_environment(capsys, monkeypatch):
    monkeypatch.setenv("LAMC_STEPS", "1")
    rc, out, _ = run_cli(capsys, "eval",
                         r"(\x.x) * ((\x. x x) (\x. x x)) . a0")
    assert rc == 0
    assert "terminal: budget" in out
    monkeypatch.setenv("LAMC_STEPS", "zero")
    rc, _, err = run_cli(capsys, "eval", r"(\x.x) * a0")
    assert rc == 2
    assert "LAMC_STEPS" in err


def test_eval_json_is_deterministic(capsys):
    args = ("eval", r"(\x.x) * ((\x. x x) (\x. x x)) . a0",
            "--steps", "10", "--json")
    rc1, out1, _ = run_cli(capsys, *args)
    rc2, out2, _ = run_cli(capsys, *args)
    assert rc1 == rc2 == 0
    assert out1 == out2
    payload = json.loads(out1)
    assert payload["terminal"] == {"kind": "cycle", "entry": 1, "period": 2}
    assert payload["rules"][1:3] == ["Grab", "Push"]


### match

def test_match_wild_script_beats_the_single_thread_game(capsys):
    rc, out, _ = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_leq", "--formula", "leq",
                         "--abelard", WILD)
    assert rc == 1
    assert "verdict: AbelardWin" in out


def test_match_wild_script_loses_the_keep_everything_game(capsys):
    rc, out, _ = run_cli(capsys, "match", "--game", "g2",
                         "--realizer", "t_leq", "--formula", "leq",
                         "--abelard", WILD)
    assert rc == 0
    assert "verdict: EloiseWin" in out


def test_match_universal_strategy_beats_a_seeded_random_adversary(capsys):
    rc, out, _ = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_phi_leq", "--formula", "leq",
                         "--abelard", "random", "--seed", "7")
    assert rc == 0
    assert "verdict: EloiseWin" in out


def test_match_halting_fixtures(capsys):
    rc, out, _ = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_halt", "--formula", "halt",
                         "--abelard", HALT_LOOP)
    assert rc == 0
    assert "move 0: entry 0 + (m=0, n=7)" in out
    rc, out, _ = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_halt", "--formula", "halt",
                         "--abelard", HALT3)
    assert rc == 0
    assert "move 0: entry 0 + (m=0, n=5)" in out
    assert "move 1: entry 0 + (m=5, n=9)" in out


def test_match_fresh_adversary_with_answers(capsys):
    rc, out, _ = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_phi_phi4", "--formula", "phi4",
                         "--abelard", "fresh", "--answers", "0,2,0,0,0,0")
    assert rc == 0
    assert "verdict: EloiseWin" in out


def test_match_numbers_only_game(capsys):
    rc, out, _ = run_cli(capsys, "match", "--game", "g0",
                         "--formula", "phi4", "--bound", "2")
    assert rc == 0
    assert "verdict: EloiseWin" in out
    rc, out, _ = run_cli(capsys, "match", "--game", "g0",
                         "--formula", "never", "--formula-file", EXTRA,
                         "--bound", "1")
    assert rc == 1
    assert "verdict: AbelardWin" in out


def test_match_interactive_adversary_retries_bad_input(capsys, monkeypatch):
    feed = iter(["not a reply at all", "2, c_a, a1"])
    monkeypatch.setattr("builtins.input", lambda prompt="": next(feed))
    rc, out, _ = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_phi_leq", "--formula", "leq",
                         "--abelard", "interactive")
    assert rc == 0
    assert "could not read that reply" in out
    assert "verdict: EloiseWin" in out


def test_match_config_errors(capsys, tmp_path):
    rc, _, err = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "no_such", "--formula", "leq",
                         "--abelard", "random")
    assert rc == 2 and "unknown realizer" in err
    rc, _, err = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_leq", "--formula", "no_such",
                         "--abelard", "random")
    assert rc == 2 and "unknown formula" in err
    rc, _, err = run_cli(capsys, "match", "--game", "g0",
                         "--formula", "leq", "--realizer", "t_leq")
    assert rc == 2 and "numbers-only" in err
    rc, _, err = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_leq", "--formula", "leq",
                         "--abelard", "fresh")
    assert rc == 2 and "--answers" in err
    rc, _, err = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_leq", "--formula", "leq",
                         "--abelard", str(tmp_path / "missing.json"))
    assert rc == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc, _, err = run_cli(capsys, "match", "--game", "g1",
                         "--realizer", "t_leq", "--formula", "leq",
                         "--abelard", str(bad))
    assert rc == 2


def test_match_json_is_deterministic_and_structured(capsys):
    args = ("match", "--game", "g2", "--realizer", "t_leq",
            "--formula", "leq", "--abelard", WILD, "--json")
    rc1, out1, _ = run_cli(capsys, *args)
    rc2, out2, _ = run_cli(capsys, *args)
    assert rc1 == rc2 == 0
    assert out1 == out2
    payload = json.loads(out1)
    assert payload["verdict"] == "EloiseWin"
    assert payload["entries"][1]["ms"] == [0]
    assert payload["moves"][0]["thread"] == 0


### scheme

def test_scheme_toy_two_line_extraction(capsys):
    rc, out, _ = run_cli(capsys, "scheme", "--realizer", "play_zero",
                         "--formula", "leq", "--answers", "4")
    assert rc == 0
    lines = out.strip().splitlines()
    assert len(lines) == 2
    assert "finish on 1" in lines[1]
    assert "m=0 n=4" in lines[0]


def test_scheme_demo_tree(capsys):
    rc, out, _ = run_cli(capsys, "scheme", "--realizer", "scheme_demo",
                         "--formula", "phi4", "--answers", "0,2,0,0,0,0")
    assert rc == 0
    lines = out.strip().splitlines()
    assert len(lines) == 7
    assert "finish on 4" in lines[-1]
    rc, out, _ = run_cli(capsys, "scheme", "--realizer", "scheme_demo",
                         "--formula", "phi4", "--answers", "0,2,0,0,0,0",
                         "--dot")
    assert rc == 0
    assert "n2 -> n4" in out


def test_scheme_exhausted_answers_fail_with_partial_tree(capsys):
    rc, out, _ = run_cli(capsys, "scheme", "--realizer", "scheme_demo",
                         "--formula", "phi4", "--answers", "0,2")
    assert rc == 1
    assert "extraction failed (budget)" in out
    assert "node 2: path=[1] m=2 n=2 parent=0" in out


def test_scheme_refuses_code_inspecting_realizers(capsys):
    rc, _, err = run_cli(capsys, "scheme", "--realizer", "t_leq",
                         "--formula", "leq", "--answers", "4")
    assert rc == 2
    assert "quote" in err


def test_scheme_accepts_raw_term_text(capsys):
    rc, out, _ = run_cli(capsys, "scheme", "--term", r"\u. u #3 (\n v. v)",
                         "--formula", "leq", "--answers", "9")
    assert rc == 0
    assert "m=3 n=9" in out


def test_scheme_json_is_deterministic(capsys):
    args = ("scheme", "--realizer", "scheme_demo", "--formula", "phi4",
            "--answers", "0,2,0,0,0,0", "--json")
    rc1, out1, _ = run_cli(capsys, *args)
    rc2, out2, _ = run_cli(capsys, *args)
    assert rc1 == rc2 == 0
    assert out1 == out2
    payload = json.loads(out1)
    assert payload["final"] == {"f": 6, "s": 4}
    assert payload["nodes"][4]["path"] == [1, 1]


### oracle

def test_oracle_worked_examples(capsys):
    rc, out, _ = run_cli(capsys, "oracle", "--formula", "leq", "--bound", "5")
    assert rc == 0
    assert out.splitlines()[0] == "win"
    rc, out, _ = run_cli(capsys, "oracle", "--formula", "phi4", "--bound", "3")
    assert rc == 0
    assert out.splitlines()[0] == "win"
    rc, out, _ = run_cli(capsys, "oracle", "--formula", "never",
                         "--formula-file", EXTRA, "--bound", "4")
    assert rc == 0
    assert out.splitlines()[0] == "lose"
    assert "caveat" in out


def test_oracle_caveat_unknown_and_leading(capsys):
    rc, out, _ = run_cli(capsys, "oracle", "--formula", "never",
                         "--formula-file", EXTRA, "--bound", "4",
                         "--caveat-unknown")
    assert rc == 0
    assert out.splitlines()[0] == "unknown"
    rc, out, _ = run_cli(capsys, "oracle", "--formula", "halt",
                         "--bound", "6", "--leading", "3343")
    assert rc == 0
    assert out.splitlines()[0] == "win"
    rc, _, err = run_cli(capsys, "oracle", "--formula", "halt", "--bound", "6")
    assert rc == 2
    assert "leading" in err


def test_oracle_json_is_deterministic(capsys):
    args = ("oracle", "--formula", "phi4", "--bound", "3", "--json")
    rc1, out1, _ = run_cli(capsys, *args)
    rc2, out2, _ = run_cli(capsys, *args)
    assert rc1 == rc2 == 0
    assert out1 == out2
    payload = json.loads(out1)
    assert payload["verdict"] == "win"
    assert payload["bound"] == 3


### list

def test_list_names_everything(capsys):
    rc, out, _ = run_cli(capsys, "list")
    assert rc == 0
    for needle in ("phi4", "t_leq", "t_phi_phi4", "scheme_demo"):
        assert needle in out


def test_list_json_includes_file_formulae(capsys):
    rc, out, _ = run_cli(capsys, "list", "--formula-file", EXTRA, "--json")
    assert rc == 0
    payload = json.loads(out)
    assert payload["formulae"]["never"] == {"leadingForalls": 0, "rounds": 1}
    assert "t_halt" in payload["realizers"]


### fixtures stay in sync with the builders they were generated from

def test_fixture_texts_match_their_builders():
    from lamc.formula import IDX_HALT3, IDX_LOOP
    from lamc.machine import MachineConfig
    from lamc.realizers import IDENT, leq_round_opener
    from lamc.syntax import term_to_text

    reg = MachineConfig(quote=True, eq=True, eq_nat=True,
                        inert_consts=("c_a", "c_b", "c_u", "c_v")).build()
    wild = json.loads(Path(WILD).read_text())
    assert wild["replies"][0]["u"] == term_to_text(leq_round_opener(reg, IDENT, 0))
    assert wild["replies"][0]["n"] == 0
    assert json.loads(Path(HALT_LOOP).read_text())["leading"] == [IDX_LOOP]
    assert json.loads(Path(HALT3).read_text())["leading"] == [IDX_HALT3]


### the installed entry point

def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "lamc.cli", "eval", r"(\x.x) (\x.x) * a0"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "terminal: stuck" in proc.stdout

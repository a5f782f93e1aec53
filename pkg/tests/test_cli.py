from __future__ import annotations

import json

import pytest

from lib.cli import EXIT_ENV, EXIT_ERROR, EXIT_SYS, EXIT_UNKNOWN, EXIT_UNSUPPORTED, main
from lib.counter_machines import format_cm
from lib.formula import format_document
from lib.formula_parser import load_formula
from lib.report_service import REPORT_KEYS


@pytest.fixture
def scheduler_file(write, scheduler):
    return write("scheduler.lrv", format_document(*scheduler))


@pytest.fixture
def tautology_file(write, tautology):
    return write("tautology.lrv", format_document(*tautology))


def _report(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_parse(scheduler_file, scheduler, capsys):
    assert main(["parse", scheduler_file]) == 0
    assert capsys.readouterr().out.strip() == format_document(*scheduler).strip()


def test_classify_json(scheduler_file, capsys):
    assert main(["classify", scheduler_file, "--json"]) == 0
    report = _report(capsys)
    assert list(report)[: len(REPORT_KEYS)] == list(REPORT_KEYS)
    assert report["command"] == "classify"
    assert report["flags"]["fragment"] == "LRV[⊤,≈,←,→]"


class TestSolve:
    def test_environment_wins(self, scheduler_file, capsys):
        assert main(["solve", scheduler_file]) == EXIT_ENV
        assert capsys.readouterr().out.startswith("EnvironmentWins")

    def test_system_wins(self, tautology_file, capsys):
        assert main(["solve", tautology_file]) == EXIT_SYS
        assert capsys.readouterr().out.startswith("SystemWins (cap 0)")

    def test_json_report(self, tautology_file, capsys):
        assert main(["solve", tautology_file, "--json", "--cap-schedule", "1,2"]) == EXIT_SYS
        report = _report(capsys)
        assert list(report)[:6] == ["command", "inputs", "verdict", "cap", "stats", "wall_time"]
        assert report["verdict"] == "SystemWins"
        assert report["cap"] == 1
        assert report["inputs"] == {"file": tautology_file}
        assert report["wall_time"] >= 0

    def test_single_cap(self, tautology_file, capsys):
        assert main(["solve", tautology_file, "--cap", "2"]) == EXIT_SYS
        assert "(cap 2)" in capsys.readouterr().out

    def test_future_obligations_unsupported(self, write, capsys):
        path = write("future.lrv", "sys data x;\nformula: G(E+(x, x; true))\n")
        assert main(["solve", path]) == EXIT_UNSUPPORTED
        assert "no_fut_obl" in capsys.readouterr().err

    def test_bad_schedule(self, tautology_file, capsys):
        assert main(["solve", tautology_file, "--cap-schedule", "2,1"]) == EXIT_ERROR
        assert "strictly increasing" in capsys.readouterr().err


def test_syntax_error_shows_grammar(write, capsys):
    path = write("bad.lrv", "env bool p;\nformula: G(p &)\n")
    assert main(["parse", path]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert "line 2" in err
    assert "formula grammar" in err


def test_missing_file(tmp_path, capsys):
    assert main(["parse", str(tmp_path / "missing.lrv")]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("error:")


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == EXIT_ERROR
    assert "formula grammar" in capsys.readouterr().err


def test_bad_log_level(scheduler_file, monkeypatch, capsys):
    monkeypatch.setenv("LRVG_LOG_LEVEL", "chatty")
    assert main(["parse", scheduler_file]) == EXIT_ERROR
    assert "LRVG_LOG_LEVEL" in capsys.readouterr().err


def test_frames_and_automaton(scheduler_file, capsys):
    assert main(["frames", scheduler_file]) == 0
    capsys.readouterr()
    assert main(["automaton", scheduler_file]) == 0
    assert capsys.readouterr().out.startswith("digraph")


def test_reduce_then_solve_vass(tautology_file, tmp_path, capsys):
    out = tmp_path / "game.json"
    assert main(["reduce", "lrv2vass", tautology_file, "-o", str(out)]) == 0
    assert main(["vass", "validate", str(out)]) == 0
    capsys.readouterr()
    assert main(["vass", "solve", str(out), "--json"]) == EXIT_SYS
    assert _report(capsys)["verdict"] == "SystemWins"


class TestMachines:
    def test_encode(self, write, five_step, tmp_path, capsys):
        machine = write("five.cm", format_cm(five_step))
        out = tmp_path / "five.lrv"
        assert main(["encode", "bool", machine, "-o", str(out), "--json"]) == 0
        assert _report(capsys)["fragment"] == "LRV[⊤,≈,←]"
        sig, _ = load_formula(out)
        assert "p_t6" in sig.env_bools

    def test_data_labels_need_future_or_lossy(self, write, five_step, capsys):
        machine = write("five.cm", format_cm(five_step))
        assert main(["encode", "bool", machine, "--data-labels"]) == EXIT_ERROR
        assert "--data-labels" in capsys.readouterr().err

    def test_run(self, write, five_step, capsys):
        machine = write("five.cm", format_cm(five_step))
        assert main(["machine", "run", machine, "--json"]) == 0
        report = _report(capsys)
        assert [row["state"] for row in report["stats"]] == ["q0", "q1", "q2", "q3", "q2", "qf"]


class TestPlays:
    def test_broken_handover(self, scheduler_file, capsys):
        code = main(["play", scheduler_file, "--env-script", "const", "--sys-script", "fresh_all", "--rounds", "2"])
        assert code == EXIT_ENV
        assert capsys.readouterr().out.strip().endswith("definitely-false")

    def test_honest_handover_stays_open(self, scheduler_file, capsys):
        code = main(
            ["play", scheduler_file, "--env-script", "set:lf=1", "--sys-script", "copy_prev:proc:log", "--rounds", "3"]
        )
        assert code == EXIT_UNKNOWN
        assert capsys.readouterr().out.strip().endswith("undetermined")

    def test_oracle(self, scheduler_file, tautology_file, capsys):
        assert main(["oracle", "minimax", scheduler_file, "--horizon", "3"]) == EXIT_ENV
        assert capsys.readouterr().out.strip() == "EnvForcesFalseBy(2)"
        assert main(["oracle", "minimax", tautology_file, "--horizon", "2", "--json"]) == EXIT_UNKNOWN
        report = _report(capsys)
        assert report["verdict"] == "SysCanAvoidLossUpTo"
        assert report["stats"] == {"horizon": 2}


@pytest.mark.parametrize("argv", [["solve", "--help"], ["vass", "--help"]])
def test_cap_schedule_help_names_the_default(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 0
    text = " ".join(capsys.readouterr().out.split())
    assert "default 0,1,2,4" in text
    assert "(cap+1)^counters" in text

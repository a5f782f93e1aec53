from __future__ import annotations

import pytest

from lib.counter_machines import (
    DEC,
    INC,
    ZERO,
    IfzDec,
    Inc,
    MachineConfig,
    add_final_increment_loop,
    apply,
    format_cm,
    is_deterministic,
    load_cm,
    parse_cm,
    resettable,
    run_bounded,
    run_transitions,
    step,
    step_lossy,
    step_transition,
    with_lossy_start,
)
from lib.errors import MachineFormatError


def test_parse_five_step(five_step):
    assert five_step.counters == 2
    assert five_step.initial == "q0"
    assert five_step.final == "qf"
    assert five_step.instructions[0] == Inc("q0", 1, "q1")
    assert five_step.instructions[2] == IfzDec("q2", 1, "qf", "q3")
    assert not five_step.lossy


def test_transitions_split_zero_tests(five_step):
    ts = five_step.transitions
    assert [t.name for t in ts] == ["t0", "t1", "t2", "t3", "t4", "t5"]
    assert [(t.op, t.counter) for t in ts] == [
        (INC, 1), (INC, 2), (ZERO, 1), (DEC, 1), (ZERO, 2), (DEC, 2),
    ]
    assert ts[3].describe() == "q2 -dec1-> q3"


def test_states_sorted(five_step):
    assert five_step.states == ("q0", "q1", "q2", "q3", "qf")


def test_comments_and_blank_lines_ignored():
    cm = parse_cm("# a machine\n\ncounters: 1  # one\ninit: a\nfinal: b\n\na: inc 1 goto b\n")
    assert cm.instructions == (Inc("a", 1, "b"),)


def test_format_parses_back(five_step, lossy_machine):
    assert parse_cm(format_cm(five_step)) == five_step
    assert parse_cm(format_cm(lossy_machine)) == lossy_machine
    assert "lossy: reset" in format_cm(lossy_machine)


def test_load_cm(write, five_step):
    assert load_cm(write("m.cm", format_cm(five_step))) == five_step


@pytest.mark.parametrize(
    "text, message",
    [
        ("counters: 2\ninit: a\nfinal: b\na: jump b\n", "cannot parse"),
        ("counters: 2\ninit: a\n", "missing header 'final'"),
        ("counters: two\ninit: a\nfinal: b\n", "expected an integer"),
        ("counters: 0\ninit: a\nfinal: b\n", "at least one counter"),
        ("counters: 1\ninit: a\ninit: c\nfinal: b\n", "duplicate header"),
        ("counters: 1\ninit: a\nfinal: b\nlossy: drop\n", "only 'reset'"),
        ("counters: 1\ninit: a\nfinal: b\na: inc 2 goto b\n", "outside 1..1"),
    ],
)
def test_malformed_machines(text, message):
    with pytest.raises(MachineFormatError, match=message):
        parse_cm(text)


def test_lossy_header(lossy_machine):
    assert lossy_machine.lossy
    assert lossy_machine.counters == 4


class TestRun:
    def test_five_step_run(self, five_step):
        assert [t.name for t in run_transitions(five_step, 50)] == ["t0", "t1", "t3", "t5", "t2"]

    def test_table(self, five_step):
        table = run_bounded(five_step, 50)
        assert list(table.columns) == ["step", "state", "transition", "c1", "c2"]
        assert table["state"].tolist() == ["q0", "q1", "q2", "q3", "q2", "qf"]
        assert table["c1"].tolist() == [0, 1, 1, 0, 0, 0]
        assert table["c2"].tolist() == [0, 0, 1, 1, 0, 0]
        assert table["transition"].iloc[0] == -1

    def test_step_budget(self, five_step):
        table = run_bounded(five_step, 2)
        assert len(table) == 3
        assert table["state"].iloc[-1] == "q2"

    def test_stops_at_final(self, five_step):
        assert len(run_bounded(five_step, 1000)) == 6

    def test_halted_state_has_no_successor(self, five_step):
        with pytest.raises(ValueError, match="no successor"):
            step(five_step, MachineConfig("qf", (0, 0)))

    def test_zero_branch(self, five_step):
        t = step_transition(five_step, MachineConfig("q2", (0, 3)))
        assert (t.op, t.target) == (ZERO, "qf")

    def test_apply_rejects_bad_moves(self, five_step):
        ts = five_step.transitions
        with pytest.raises(ValueError, match="decrement a zero counter"):
            apply(ts[3], MachineConfig("q2", (0, 0)))
        with pytest.raises(ValueError, match="non-zero counter"):
            apply(ts[2], MachineConfig("q2", (1, 0)))

    def test_negative_config(self):
        with pytest.raises(ValueError, match="non-negative"):
            MachineConfig("q0", (0, -1))


class TestDeterminism:
    def test_five_step_is_deterministic(self, five_step):
        assert is_deterministic(five_step)

    def test_pick_required(self):
        cm = parse_cm("counters: 1\ninit: a\nfinal: b\na: inc 1 goto b\na: inc 1 goto a\n")
        assert not is_deterministic(cm)
        with pytest.raises(ValueError, match="pass pick"):
            step_transition(cm, MachineConfig.start(cm))
        assert step(cm, MachineConfig.start(cm), pick=1) == MachineConfig("a", (1,))
        assert step(cm, MachineConfig.start(cm), pick=0) == MachineConfig("b", (1,))


class TestFinalLoop:
    def test_appended_once(self, five_step):
        looped = add_final_increment_loop(five_step)
        assert looped.instructions[-1] == Inc("qf", 1, "qf")
        assert looped.transitions[-1].name == "t6"
        assert add_final_increment_loop(looped) is looped

    def test_run_unchanged(self, five_step):
        looped = add_final_increment_loop(five_step)
        assert [t.name for t in run_transitions(looped, 50)] == ["t0", "t1", "t3", "t5", "t2"]


class TestLossy:
    def test_resettable(self, lossy_machine):
        assert resettable(lossy_machine, "p1") == {1}
        assert resettable(lossy_machine, "p0") == set()

    def test_legal_reset(self, lossy_machine):
        after = step_lossy(lossy_machine, MachineConfig("p1", (3, 0, 0, 0)), [True, False, False, False])
        assert after == MachineConfig("p0", (0, 0, 0, 0))

    def test_no_reset_decrements(self, lossy_machine):
        after = step_lossy(lossy_machine, MachineConfig("p1", (3, 0, 0, 0)), [False] * 4)
        assert after == MachineConfig("p0", (2, 0, 0, 0))

    def test_illegal_reset(self, lossy_machine):
        with pytest.raises(ValueError, match="illegal reset of c2"):
            step_lossy(lossy_machine, MachineConfig("p1", (3, 1, 0, 0)), [False, True, False, False])

    def test_flag_count(self, lossy_machine):
        with pytest.raises(ValueError, match="expected 4 reset flag"):
            step_lossy(lossy_machine, MachineConfig("p1", (0, 0, 0, 0)), [True])

    def test_lossy_start(self, lossy_machine):
        cm = with_lossy_start(lossy_machine)
        assert cm.initial == "q_s"
        assert cm.instructions[:2] == (Inc("q_s", 4, "q_s"), IfzDec("q_s", 4, "p0", "p0"))
        assert resettable(cm, "q_s") == {4}
        assert not is_deterministic(cm)
        assert step(cm, MachineConfig.start(cm), pick=1) == MachineConfig("p0", (0, 0, 0, 0))
        config = step(cm, MachineConfig.start(cm), pick=0)
        assert config == MachineConfig("q_s", (0, 0, 0, 1))

    def test_lossy_start_avoids_clash(self):
        cm = parse_cm("counters: 1\ninit: q_s\nfinal: b\nq_s: inc 1 goto b\n")
        assert with_lossy_start(cm).initial == "q_s_"


def test_lossy_text_header_order(lossy_machine):
    assert format_cm(lossy_machine).startswith("counters: 4\ninit: p0\nfinal: p1\nlossy: reset\n")

from __future__ import annotations

import pytest

from lib.energy_service import EnvironmentWins, SystemWins, solve_energy
from lib.formula import BoolVar, subformulas, variables
from lib.fragments import classify_fragment
from lib.realizability_service import realizability
from lib.rewrites import check_single_sided
from lib.vass import ENV, SYS, Transition, VassGame, VassState
from lib.vass_to_lrv import CT_S, counter_vars, normalize_vass_for_lrv, vass_to_lrv


def alternating(sys_updates=(0,), colors=(2, 2), init=0) -> VassGame:
    return VassGame(
        (VassState("q0", ENV, colors[0]), VassState("q1", SYS, colors[1])),
        ("c",),
        (Transition("q0", "q1", (0,)),) + tuple(Transition("q1", "q0", (u,)) for u in sys_updates),
        "q0",
        (init,),
    )


def increment_first() -> VassGame:
    """Visiting the even state q0 costs a decrement that only the detour through q2 pays for."""

    return VassGame(
        (VassState("q0", ENV, 2), VassState("q1", SYS, 0), VassState("q2", ENV, 1)),
        ("c",),
        (
            Transition("q0", "q1", (0,)),
            Transition("q2", "q1", (0,)),
            Transition("q1", "q0", (-1,)),
            Transition("q1", "q2", (1,)),
        ),
        "q0",
        (0,),
    )


def decrement_on_demand() -> VassGame:
    """The environment may always send the system to the state whose only move decrements."""

    return VassGame(
        (VassState("q0", ENV, 2), VassState("q1", SYS, 2), VassState("q2", SYS, 2)),
        ("c",),
        (
            Transition("q0", "q1", (0,)),
            Transition("q0", "q2", (0,)),
            Transition("q1", "q0", (-1,)),
            Transition("q2", "q0", (1,)),
        ),
        "q0",
        (0,),
    )


class TestNormalize:
    def test_already_normalized(self):
        game = alternating()
        assert normalize_vass_for_lrv(game) == game

    def test_system_to_system_edge(self):
        game = VassGame(
            (VassState("s0", SYS, 2), VassState("s1", SYS, 3)),
            ("c",),
            (Transition("s0", "s1", (1,)), Transition("s1", "s0", (0,))),
            "s0",
            (0,),
        )
        out = normalize_vass_for_lrv(game)
        assert out.owner(out.initial_state) == ENV
        for t in out.transitions:
            assert out.owner(t.source) != out.owner(t.target)
        mids = [s for s in out.states if s.name.startswith("__mid_s0_s1")]
        assert len(mids) == 1
        assert mids[0].owner == ENV and mids[0].color == 2

    def test_initial_credit_becomes_a_preamble(self):
        game = alternating(sys_updates=(-1,), init=2)
        out = normalize_vass_for_lrv(game)
        assert out.initial_counters == (0,)
        assert sum(1 for t in out.transitions if t.update == (1,)) == 2
        before, after = solve_energy(game).verdict, solve_energy(out).verdict
        assert type(before) is type(after)

    def test_environment_update_rejected(self):
        game = VassGame((VassState("q", ENV, 0),), ("c",), (Transition("q", "q", (1,)),), "q", (0,))
        with pytest.raises(ValueError):
            normalize_vass_for_lrv(game)


class TestFormula:
    def test_signature(self):
        sig, _ = vass_to_lrv(alternating(sys_updates=(0, 1)))
        assert sig.env_bools == {"p_0"}
        assert sig.sys_datas == {"t_1", "t_2", CT_S, *counter_vars("c")}
        assert check_single_sided(sig)

    def test_fragment(self):
        sig, f = vass_to_lrv(alternating(sys_updates=(1, -1)))
        flags = classify_fragment(f, sig)
        assert flags.name == "LRV[⊤,≈,←]"
        assert flags.single_sided

    def test_environment_transitions_are_booleans(self):
        sig, f = vass_to_lrv(alternating())
        assert {g.name for g in subformulas(f) if isinstance(g, BoolVar)} == {"p_0"}

    def test_counter_names_are_identifiers(self):
        assert counter_vars("c-1") == ("x_c_1", "xbar_c_1")

    def test_needs_normalization(self):
        with pytest.raises(ValueError):
            vass_to_lrv(alternating(init=1))


class TestCounterGadgets:
    def test_increment_before_decrement(self):
        result = solve_energy(increment_first())
        assert isinstance(result.verdict, SystemWins)
        assert result.verdict.cap == 1

    def test_decrement_on_zero(self):
        verdict = solve_energy(decrement_on_demand()).verdict
        assert isinstance(verdict, EnvironmentWins)
        assert verdict.certificate == "omega arena"

    @pytest.mark.parametrize("game", [increment_first(), decrement_on_demand()], ids=["increment-first", "on-demand"])
    def test_translation_uses_both_counter_copies(self, game):
        sig, f = vass_to_lrv(game)
        assert classify_fragment(f, sig).name == "LRV[⊤,≈,←]"
        assert set(counter_vars("c")) <= variables(f)


@pytest.mark.slow
class TestRoundTrip:
    @pytest.mark.parametrize(
        "game, expected",
        [
            (alternating(), SystemWins),
            (alternating(sys_updates=(-1,), colors=(2, 2)), EnvironmentWins),
            (alternating(sys_updates=(0,), colors=(1, 1)), EnvironmentWins),
            (increment_first(), SystemWins),
            (decrement_on_demand(), EnvironmentWins),
        ],
        ids=["untouched", "forced-decrement", "odd", "increment-first", "forced-decrement-on-zero"],
    )
    def test_verdicts_agree(self, game, expected):
        direct = solve_energy(game).verdict
        sig, f = vass_to_lrv(normalize_vass_for_lrv(game))
        through = realizability(f, sig, caps=(0, 1, 2, 4)).verdict
        assert isinstance(direct, expected)
        assert type(through) is type(direct)

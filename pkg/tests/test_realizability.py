from __future__ import annotations

import pytest

from lib.energy_service import EnvironmentWins, SystemWins
from lib.errors import UnsupportedFragmentError
from lib.formula import TRUE, FutEq, Signature
from lib.formula_parser import parse_formula
from lib.realizability_service import prepare, realizability, reduce_formula


def test_scheduler_is_not_realizable(scheduler):
    sig, f = scheduler
    result = realizability(f, sig)
    assert isinstance(result.verdict, EnvironmentWins)
    assert result.fragment.name == "LRV[⊤,≈,←,→]"


def test_tautology(tautology):
    sig, f = tautology
    result = realizability(f, sig)
    assert result.verdict == SystemWins(0, result.verdict.strategy)


def test_renaming_keeps_the_verdict():
    sig, f = parse_formula(
        "env bool ready; sys data a, b; formula: G(eq(a, 1, b)) & G(!ready -> !eq(b, -1, a))"
    )
    assert isinstance(realizability(f, sig).verdict, EnvironmentWins)


def test_future_obligations_are_rejected():
    with pytest.raises(UnsupportedFragmentError) as info:
        realizability(FutEq("x", "y", TRUE), Signature.of(sys_datas=["x", "y"]))
    assert info.value.restriction == "no_fut_obl"


def test_two_sided_games_are_rejected():
    sig, f = parse_formula("env data x; sys data y; formula: G(eq(x, 0, y))")
    with pytest.raises(UnsupportedFragmentError):
        realizability(f, sig)


def test_prepare_moves_tests_forward(scheduler):
    sig, f = scheduler
    sig2, g = prepare(f, sig)
    assert sig2 == sig
    assert "-1" not in str(g)


def test_reduction_result_carries_the_game(scheduler):
    sig, f = scheduler
    _, _, flags, game, trace = reduce_formula(f, sig)
    assert flags.single_sided
    assert game.is_single_sided
    assert set(trace.states) <= {s.name for s in game.states}


@pytest.mark.slow
def test_disequality_is_witnessed():
    sig, f = parse_formula("sys data x; formula: G(Y true -> D-(x, x; true))")
    result = realizability(f, sig)
    assert "x__neq_past__x" in result.signature.sys_datas
    assert isinstance(result.verdict, SystemWins)

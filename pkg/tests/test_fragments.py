from __future__ import annotations

import pytest

from lib.formula import TRUE, BoolVar, Eventually, FutEq, FutNeq, LocalEq, Next, PastEq, PastNeq, Prev, Signature, Since
from lib.formula_parser import parse_formula
from lib.fragments import classify_fragment, first_violation


@pytest.mark.parametrize(
    "f, name",
    [
        (PastEq("x", "y", TRUE), "LRV[⊤,≈,←]"),
        (FutEq("x", "y", TRUE), "LRV[⊤,≈,→]"),
        (FutNeq("x", "y", TRUE), "LRV[⊤,→]"),
        (PastNeq("x", "y", TRUE), "LRV[⊤,←]"),
        (Eventually(BoolVar("p")), "LRV[⊤,≈,←,→]"),
    ],
)
def test_names(f, name):
    assert classify_fragment(f).name == name


def test_nested_past_body():
    flags = classify_fragment(PastEq("x", "y", Since(BoolVar("p"), LocalEq("x", -1, "y"))))
    assert not flags.no_nested
    assert flags.nested_past_only
    assert flags.name == "LRV[⟨X⁻¹,S⟩,≈,←]"


def test_eventually_in_body():
    flags = classify_fragment(PastEq("x", "y", Eventually(BoolVar("p"))))
    assert not flags.nested_past_only
    assert flags.nested_F_allowed
    assert flags.name == "LRV[⟨F⟩,≈,←]"


def test_future_body_leaves_every_nested_fragment():
    flags = classify_fragment(PastEq("x", "y", Next(BoolVar("p"))))
    assert not flags.nested_past_only
    assert not flags.nested_F_allowed
    assert flags.name == "LRV[≈,←]"


def test_forward_local_test_in_body():
    assert not classify_fragment(PastEq("x", "y", LocalEq("x", 1, "y"))).nested_past_only


def test_single_sidedness_reported(scheduler):
    sig, f = scheduler
    flags = classify_fragment(f, sig)
    assert flags.single_sided
    assert flags.as_dict()["fragment"] == "LRV[⊤,≈,←,→]"
    two_sided = Signature.of(env_datas=["x"], sys_datas=["y"])
    assert not classify_fragment(PastEq("x", "y", TRUE), two_sided).single_sided


def test_first_violation():
    bad = FutEq("x", "y", TRUE)
    assert first_violation(Prev(bad), "no_fut_obl") == bad
    assert first_violation(PastEq("x", "y", TRUE), "no_fut_obl") is None
    nested = PastEq("x", "y", BoolVar("p"))
    assert first_violation(nested, "no_nested") == nested


def test_parsed_document():
    sig, f = parse_formula("env bool p; sys data x; formula: G(p -> E-(x, x; true))")
    assert classify_fragment(f, sig).name == "LRV[⊤,≈,←]"

from __future__ import annotations

import random

import pytest

from lib.formula import (
    TRUE,
    Always,
    BoolVar,
    Eventually,
    FutEq,
    LocalEq,
    Model,
    Next,
    Not,
    PastEq,
    PastNeq,
    Prev,
    Since,
    Until,
    Valuation,
    WeakNext,
)
from lib.semantics import evaluate, evaluate_lasso


def xs(*values: int) -> Model:
    return Model.from_columns(datas={"x": list(values)})


def test_past_obligation_needs_an_earlier_position():
    assert not evaluate(xs(4), 1, PastEq("x", "x", TRUE))


def test_local_test_stays_inside_the_model():
    m = xs(5, 5)
    assert evaluate(m, 1, LocalEq("x", 1, "x"))
    assert not evaluate(m, 2, LocalEq("x", 1, "x"))
    assert not evaluate(m, 1, LocalEq("x", -1, "x"))


def test_past_disequality():
    assert evaluate(xs(1, 2, 1), 3, PastNeq("x", "x", TRUE))
    assert not evaluate(xs(1, 1, 1), 3, PastNeq("x", "x", TRUE))


def test_future_obligation_with_body():
    m = Model.from_columns(bools={"p": [False, False, True]}, datas={"x": [7, 7, 7]})
    assert evaluate(m, 1, FutEq("x", "x", BoolVar("p")))
    assert not evaluate(m, 3, FutEq("x", "x", TRUE))


def test_next_and_weak_next_at_the_end():
    m = Model.from_columns(bools={"a": [True, True]})
    assert not evaluate(m, 2, Next(BoolVar("a")))
    assert evaluate(m, 2, WeakNext(Not(BoolVar("a"))))


def test_until_and_since():
    m = Model.from_columns(bools={"a": [True, True, False], "b": [False, False, True]})
    assert evaluate(m, 1, Until(BoolVar("a"), BoolVar("b")))
    assert evaluate(m, 3, Since(BoolVar("a"), BoolVar("b")))
    assert not evaluate(m, 1, Since(BoolVar("a"), BoolVar("b")))


def test_always_holds_at_the_last_position():
    m = Model.from_columns(bools={"a": [False, True]})
    assert evaluate(m, 2, Always(BoolVar("a")))
    assert not evaluate(m, 1, Always(BoolVar("a")))


def test_position_out_of_range():
    with pytest.raises(ValueError):
        evaluate(xs(1), 2, TRUE)


def test_missing_variable_is_an_error():
    with pytest.raises(ValueError):
        evaluate(xs(1), 1, LocalEq("x", 0, "y"))


class TestLasso:
    """Ultimately periodic words u·v^ω."""

    def test_eventually_in_the_cycle(self):
        u = [Valuation({"p": False}, {})]
        v = [Valuation({"p": False}, {}), Valuation({"p": True}, {})]
        assert evaluate_lasso(u, v, Always(Eventually(BoolVar("p"))))
        assert not evaluate_lasso(u, v, Always(BoolVar("p")))

    def test_future_repetition_wraps_around(self):
        u = [Valuation({}, {"x": 1})]
        v = [Valuation({}, {"x": 2}), Valuation({}, {"x": 3})]
        assert evaluate_lasso(u, v, Next(FutEq("x", "x", TRUE)))
        assert not evaluate_lasso(u, v, FutEq("x", "x", TRUE))

    def test_previous_of_first_position(self):
        v = [Valuation({"p": True}, {})]
        assert not evaluate_lasso([], v, Prev(TRUE))
        assert evaluate_lasso([], v, Next(Prev(TRUE)))

    def test_empty_cycle_rejected(self):
        with pytest.raises(ValueError):
            evaluate_lasso([Valuation({"p": True}, {})], [], TRUE)


def test_equality_is_the_only_observable():
    rng = random.Random(7)
    formulas = [
        PastEq("x", "y", TRUE),
        PastNeq("y", "x", TRUE),
        FutEq("x", "y", BoolVar("p")),
        Always(Not(LocalEq("x", 1, "y"))),
        Eventually(LocalEq("y", -1, "x")),
    ]
    for _ in range(200):
        n = rng.randint(1, 5)
        xs_ = [rng.randint(0, 2) for _ in range(n)]
        ys_ = [rng.randint(0, 2) for _ in range(n)]
        ps = [rng.random() < 0.5 for _ in range(n)]
        recode = dict(zip(range(3), rng.sample(range(100, 200), 3)))
        m1 = Model.from_columns(bools={"p": ps}, datas={"x": xs_, "y": ys_})
        m2 = Model.from_columns(bools={"p": ps}, datas={"x": [recode[v] for v in xs_], "y": [recode[v] for v in ys_]})
        i = rng.randint(1, n)
        for f in formulas:
            assert evaluate(m1, i, f) == evaluate(m2, i, f)

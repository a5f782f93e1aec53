from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from itertools import chain, combinations

import pytest

from lib.errors import ContractViolation
from lib.formula import TRUE, BoolVar, Model, Signature, Valuation
from lib.frames import (
    BOTTOM,
    NESTED,
    BoolAt,
    EqAt,
    Frame,
    FrameContext,
    OblAt,
    check_sequence,
    constraint_universe,
    counter_key,
    enumerate_frames,
    frame_counts,
    frame_extract,
    frame_sequence,
    is_valid_frame,
    one_step_consistent,
    points_of_decrement,
    points_of_increment,
    simple_counters,
)
from lib.game_sim import ConstScript, CopyPrevScript, FreshAllScript, play

X = FrameContext(dvars=("x",), bvars=())
X1 = FrameContext(dvars=("x",), bvars=(), l=1)
XY1 = FrameContext(dvars=("x", "y"), bvars=(), l=1)


def brute_force_count(ctx: FrameContext, e: int) -> int:
    universe = [c for c in constraint_universe(ctx) if (max(c.i, c.j) if isinstance(c, EqAt) else c.i) <= e]
    subsets = chain.from_iterable(combinations(universe, r) for r in range(len(universe) + 1))
    return sum(1 for s in subsets if is_valid_frame(ctx, Frame(e=e, omega=frozenset(s))))


def random_model(rng: random.Random, n: int, dvars=("x", "y"), bools=()) -> Model:
    return Model.from_columns(
        bools={q: [rng.random() < 0.5 for _ in range(n)] for q in bools},
        datas={x: [rng.randint(0, 2) for _ in range(n)] for x in dvars},
    )


@dataclass(frozen=True)
class MixedScript:
    """Fresh values, copies of the previous position, or an older value brought back."""

    rng: random.Random
    scripts: tuple = (FreshAllScript((), ("x", "y")), CopyPrevScript((), ("x", "y"), "y", "x"))

    def __call__(self, history: Model, env_move: Valuation | None) -> Valuation:
        move = self.rng.choice(self.scripts)(history, env_move)
        datas = dict(move.datas)
        if len(history) and self.rng.random() < 0.5:
            old = history.at(self.rng.randint(1, len(history)))
            datas[self.rng.choice(("x", "y"))] = old.datas[self.rng.choice(("x", "y"))]
        return Valuation(dict(move.bools), datas)


def live_classes(model: Model, j: int, ctx: FrameContext) -> dict[str, int]:
    """Values seen before the window of frame j and absent from it, by the variables that held them."""

    anchor = max(1, j - ctx.l)
    window = {model.at(p).datas[x] for p in range(anchor, j + 1) for x in ctx.dvars}
    holders: dict[int, set[str]] = {}
    for p in range(1, anchor):
        for x in ctx.dvars:
            holders.setdefault(model.at(p).datas[x], set()).add(x)
    return dict(Counter(counter_key(frozenset(xs)) for d, xs in holders.items() if d not in window))


class TestUniverse:
    def test_single_level(self):
        assert constraint_universe(X) == [EqAt(0, "x", 0, "x"), OblAt(0, "x", "x", TRUE)]

    def test_two_levels(self):
        u = constraint_universe(X1)
        assert {c for c in u if isinstance(c, EqAt)} == {EqAt(i, "x", j, "x") for i in (0, 1) for j in (0, 1)}
        assert {c for c in u if isinstance(c, OblAt)} == {OblAt(0, "x", "x", TRUE), OblAt(1, "x", "x", TRUE)}
        assert len(u) == 6

    def test_booleans(self):
        u = constraint_universe(FrameContext(dvars=("x",), bvars=("q",), l=1))
        assert {BoolAt(0, "q"), BoolAt(1, "q")} <= set(u)


class TestEnumeration:
    def test_counts(self):
        assert frame_counts(X)["frames"].tolist() == [2]
        assert frame_counts(X1)["frames"].tolist() == [2, 6]

    @pytest.mark.parametrize(
        "ctx, e",
        [(X1, 0), (X1, 1), (FrameContext(dvars=("x", "y"), bvars=()), 0)],
    )
    def test_agrees_with_subset_search(self, ctx, e):
        assert sum(1 for _ in enumerate_frames(ctx, e)) == brute_force_count(ctx, e)

    def test_frames_are_valid_and_distinct(self):
        frames = list(enumerate_frames(XY1, 1))
        assert len(set(frames)) == len(frames)
        assert all(is_valid_frame(XY1, fr) for fr in frames)

    def test_level_out_of_range(self):
        with pytest.raises(ValueError):
            list(enumerate_frames(X1, 2))


class TestValidity:
    def test_reflexivity(self):
        check = is_valid_frame(X, Frame(e=0, omega=frozenset()))
        assert not check
        assert check.condition == "reflexive"

    def test_forward_reference_needs_an_obligation(self):
        omega = frozenset({EqAt(i, "x", j, "x") for i in (0, 1) for j in (0, 1)})
        check = is_valid_frame(X1, Frame(e=1, omega=omega))
        assert check.condition == "past-obligations"
        assert is_valid_frame(X1, Frame(e=1, omega=omega | {OblAt(1, "x", "x", TRUE)}))

    def test_level_outside_context(self):
        with pytest.raises(ContractViolation):
            is_valid_frame(X, Frame(e=1, omega=frozenset()))

    def test_nested_history_must_match(self):
        ctx = FrameContext(dvars=("x",), bvars=("p",), nested=(TRUE, BoolVar("p")), mode=NESTED)
        model = Model.from_columns(bools={"p": [True, False]}, datas={"x": [1, 1]})
        fr = frame_extract(model, 2, ctx)
        assert is_valid_frame(ctx, fr)
        broken = Frame(e=0, omega=fr.omega, phi_fr=fr.phi_fr, h_fr=(("x", 0, frozenset()),))
        assert is_valid_frame(ctx, broken).condition == "history-match"


class TestExtraction:
    def test_single_position(self):
        assert frame_extract(Model.from_columns(datas={"x": [7]}), 1, X1) == Frame(
            e=0, omega=frozenset({EqAt(0, "x", 0, "x")})
        )

    def test_repeated_value(self):
        fr = frame_extract(Model.from_columns(datas={"x": [7, 7]}), 2, X1)
        assert fr.e == 1
        assert EqAt(0, "x", 1, "x") in fr.omega
        assert OblAt(1, "x", "x", TRUE) in fr.omega

    def test_position_out_of_range(self):
        with pytest.raises(ValueError):
            frame_extract(Model.from_columns(datas={"x": [7]}), 2, X1)

    def test_extracted_sequences_are_consistent(self):
        rng = random.Random(11)
        for _ in range(40):
            model = random_model(rng, rng.randint(1, 6))
            frames = frame_sequence(model, XY1)
            assert all(is_valid_frame(XY1, fr) for fr in frames)
            assert check_sequence(XY1, frames)


class TestConsistency:
    def test_bottom_precedes_any_zero_frame(self):
        assert all(one_step_consistent(X1, BOTTOM, fr) for fr in enumerate_frames(X1, 0))

    def test_dropped_obligation_breaks_the_shift(self):
        frames = frame_sequence(Model.from_columns(datas={"x": [1, 1, 2]}), X1)
        assert one_step_consistent(X1, frames[1], frames[2])
        assert OblAt(0, "x", "x", TRUE) in frames[2].omega
        perturbed = Frame(e=1, omega=frames[2].omega - {OblAt(0, "x", "x", TRUE)})
        assert not one_step_consistent(X1, frames[1], perturbed)

    def test_uncovered_level_pair(self):
        fr = next(iter(enumerate_frames(X1, 0)))
        with pytest.raises(ContractViolation):
            one_step_consistent(X1, fr, fr)


class TestCounters:
    def test_counter_names(self):
        assert simple_counters(XY1) == ["{x}", "{y}", "{x,y}"]

    def test_zero_frame_without_obligation(self):
        assert points_of_decrement(X1, Frame(e=0, omega=frozenset({EqAt(0, "x", 0, "x")}))) == Counter()

    def test_unreferenced_class_is_an_increment(self):
        frames = frame_sequence(Model.from_columns(datas={"x": [1, 2]}), X1)
        assert points_of_increment(X1, frames[1]) == Counter({"{x}": 1})

    def test_no_increment_below_the_last_level(self):
        frames = frame_sequence(Model.from_columns(datas={"x": [1, 2]}), X1)
        assert points_of_increment(X1, frames[0]) == Counter()

    def test_backward_reference_is_not_a_decrement(self):
        frames = frame_sequence(Model.from_columns(datas={"x": [1, 1]}), X1)
        assert points_of_decrement(X1, frames[1]) == Counter()

    def test_repeat_beyond_the_window_is_a_decrement(self):
        frames = frame_sequence(Model.from_columns(datas={"x": [1, 2, 1]}), X1)
        assert points_of_decrement(X1, frames[2]) == Counter({"{x}": 1})

    @pytest.mark.parametrize("l", [0, 1, 2])
    def test_running_balance_along_played_games(self, l):
        sig = Signature.of(env_bools=["p"], sys_datas=["x", "y"])
        ctx = FrameContext(dvars=("x", "y"), bvars=(), l=l)
        for seed in range(500):
            rng = random.Random(seed)
            model = play(sig, ConstScript(("p",), ()), MixedScript(rng), rng.randint(2, 9))
            frames = frame_sequence(model, ctx)
            inc: Counter[str] = Counter()
            dec = Counter(points_of_decrement(ctx, frames[0]))
            for k in range(len(frames) - 1):
                inc.update(points_of_increment(ctx, frames[k]))
                dec.update(points_of_decrement(ctx, frames[k + 1]))
                balance = {key: inc[key] - dec[key] for key in inc | dec}
                assert all(n >= 0 for n in balance.values()), (seed, model, k)
                assert {key: n for key, n in balance.items() if n} == live_classes(model, k + 2, ctx), (seed, model, k)

from __future__ import annotations

import itertools

import pytest

from lib.counter_machines import parse_cm
from lib.encoders import (
    BEGIN,
    BIS,
    ENV_MISTAKES,
    LABEL_REF,
    LOSSY_ENV,
    LOSSY_SYS,
    SYS_DUTIES,
    TURN,
    BlockLayout,
    encode_future_singlesided,
    encode_lossy,
    encode_reach_blocks,
    encode_reach_bool,
    encode_reach_bounded,
    shift_turns,
    sys_bools_as_data,
)
from lib.formula import (
    Always,
    And,
    BoolVar,
    LocalEq,
    Model,
    Next,
    PastEq,
    Signature,
    Valuation,
    children,
    format_document,
    subformulas,
)
from lib.formula_parser import parse_formula
from lib.fragments import classify_fragment
from lib.rewrites import normalize_local, x_length
from lib.semantics import evaluate

NONDETERMINISTIC = """\
counters: 2
init: a
final: b
a: inc 1 goto b
a: inc 2 goto b
"""

THREE_COUNTERS = """\
counters: 3
init: a
final: b
a: inc 3 goto b
"""


def _max_offset(f):
    return max(abs(g.j) for g in subformulas(f) if isinstance(g, LocalEq))


class TestReachBool:
    def test_signature(self, five_step):
        enc = encode_reach_bool(five_step)
        assert enc.signature.env_bools == {f"p_t{i}" for i in range(7)}
        assert enc.signature.env_datas == {"x"}
        assert enc.signature.sys_datas == {"y"}
        assert not enc.signature.sys_bools

    def test_final_loop_added(self, five_step):
        enc = encode_reach_bool(five_step)
        assert enc.machine.transitions[-1].describe() == "qf -inc1-> qf"

    def test_parts(self, five_step):
        enc = encode_reach_bool(five_step)
        assert enc.env_parts == ENV_MISTAKES
        assert enc.sys_parts == SYS_DUTIES
        assert set(enc.parts) == set(ENV_MISTAKES) | set(SYS_DUTIES)
        assert enc.layout is None

    def test_fragment(self, five_step):
        enc = encode_reach_bool(five_step)
        flags = classify_fragment(enc.formula, enc.signature)
        assert flags.name == "LRV[⊤,≈,←]"
        assert not flags.single_sided

    def test_document_parses_back(self, five_step):
        enc = encode_reach_bool(five_step)
        sig, f = parse_formula(format_document(enc.signature, enc.formula))
        assert sig == enc.signature
        assert f == enc.formula

    @pytest.mark.parametrize("encode", [encode_reach_bool, encode_reach_blocks, encode_reach_bounded])
    def test_machine_checks(self, encode):
        with pytest.raises(ValueError, match="2-counter"):
            encode(parse_cm(THREE_COUNTERS))
        with pytest.raises(ValueError, match="deterministic"):
            encode(parse_cm(NONDETERMINISTIC))


class TestBlocks:
    def test_one_data_variable_each(self, five_step):
        for encode in (encode_reach_blocks, encode_reach_bounded):
            enc = encode(five_step)
            assert enc.signature.sys_datas == {"y"}
            assert enc.signature.env_datas == {"x"}
            assert not enc.signature.bools

    def test_layout_labels(self, five_step):
        enc = encode_reach_blocks(five_step)
        assert enc.layout.labels == (BEGIN, *(f"t{i}" for i in range(7)))
        assert enc.layout.m == 9
        assert enc.layout.length == 12
        assert enc.env_parts[0] == "block_shape"
        assert enc.sys_parts[0] == "block_copy"

    def test_bounded_look_ahead(self, five_step):
        enc = encode_reach_bounded(five_step)
        assert enc.layout.length == 28
        assert _max_offset(enc.formula) == 3
        assert x_length(normalize_local(enc.formula)) <= 3

    def test_plain_look_ahead_grows(self, five_step):
        enc = encode_reach_blocks(five_step)
        assert _max_offset(enc.formula) == enc.layout.m + 3


def _block_model(layout: BlockLayout, label: str, *, blocks: int = 3, extra_label: str | None = None) -> Model:
    fresh = itertools.count(10)
    marked = {layout.index(label) + 1}
    if extra_label is not None:
        marked.add(layout.index(extra_label) + 1)
    values: list[int] = []
    for _ in range(blocks):
        d1 = next(fresh)
        for role in layout.roles():
            if role == "d":
                values.append(0)
            elif role == "d1":
                values.append(d1)
            elif role == "payload":
                values.append(next(fresh))
            else:
                values.append(d1 if int(role[1:]) in marked else next(fresh))
    return Model(tuple(Valuation({}, {"x": v, "y": v}) for v in values))


LAYOUTS = [
    BlockLayout((BEGIN, "t0", "t1")),
    BlockLayout((BEGIN, "t0", "t1"), bounded=True),
    BlockLayout((BEGIN, "t0", "t1", "t2", "t3")),
    BlockLayout((BEGIN, "t0", "t1", "t2", "t3"), bounded=True),
]


class TestBlockLayout:
    def test_plain_roles(self):
        layout = BlockLayout((BEGIN, "t0", "t1"))
        assert layout.roles() == ["d", "d", "d1", "d2", "d3", "d4", "payload"]

    def test_bounded_roles(self):
        layout = BlockLayout((BEGIN, "t0"), bounded=True)
        assert layout.roles() == ["d", "d", "d1", "d2", "d", "d1", "d3", "d", "d1", "payload"]

    @pytest.mark.parametrize("layout", LAYOUTS)
    def test_every_offset_has_a_role(self, layout):
        roles = layout.roles()
        assert len(roles) == layout.length
        assert "" not in roles
        assert roles[-1] == "payload"
        for k in range(2, layout.m + 1):
            assert roles.count(f"d{k}") == 1

    @pytest.mark.parametrize("layout", LAYOUTS)
    def test_well_formed_block(self, layout):
        for label in layout.labels:
            model = _block_model(layout, label)
            assert evaluate(model, 1, layout.block_step("x"))
            assert evaluate(model, 1, layout.block0("x"))
            assert [evaluate(model, 1, layout.label_test("x", n)) for n in layout.labels] == [
                n == label for n in layout.labels
            ]

    @pytest.mark.parametrize("layout", LAYOUTS)
    def test_two_labels_break_the_shape(self, layout):
        model = _block_model(layout, BEGIN, extra_label="t0")
        assert not evaluate(model, 1, layout.one_label("x"))
        assert not evaluate(model, 1, layout.block_step("x"))

    @pytest.mark.parametrize("layout", LAYOUTS)
    def test_block_starts_only_at_offset_zero(self, layout):
        model = _block_model(layout, "t0")
        starts = [i for i in range(1, 2 * layout.length + 1) if evaluate(model, i, layout.block0("x"))]
        assert starts == [1, layout.length + 1]

    @pytest.mark.parametrize("layout", LAYOUTS)
    def test_copy(self, layout):
        model = _block_model(layout, "t0")
        assert evaluate(model, 1, layout.copy("x", "y"))
        rows = list(model.valuations)
        rows[1] = Valuation({}, {"x": rows[1].datas["x"], "y": 999})
        assert not evaluate(Model(tuple(rows)), 1, layout.copy("x", "y"))

    @pytest.mark.parametrize("layout", LAYOUTS)
    def test_payload_is_free(self, layout):
        model = _block_model(layout, "t0")
        rows = list(model.valuations)
        p = layout.payload
        rows[p] = Valuation({}, {"x": rows[p].datas["x"], "y": 999})
        assert evaluate(Model(tuple(rows)), 1, layout.copy("x", "y"))


class TestFuture:
    def test_signature(self, five_step):
        enc = encode_future_singlesided(five_step)
        assert enc.signature.env_bools == {TURN}
        assert enc.signature.sys_bools == {f"l_t{i}" for i in range(7)} | {BIS}
        assert enc.signature.sys_datas == {"x", "y", "z"}
        assert enc.env_parts == ()

    def test_boolean_labels_are_two_sided(self, five_step):
        enc = encode_future_singlesided(five_step)
        flags = classify_fragment(enc.formula, enc.signature)
        assert flags.name == "LRV[⊤,≈,→]"
        assert not flags.single_sided

    def test_data_labels(self, five_step):
        enc = encode_future_singlesided(five_step, data_labels=True)
        flags = classify_fragment(enc.formula, enc.signature)
        assert flags.name == "LRV[⊤,≈,→]"
        assert flags.single_sided
        assert LABEL_REF in enc.signature.sys_datas
        assert not any(isinstance(g, BoolVar) and g.name == BIS for g in subformulas(enc.formula))

    def test_turn_read_one_position_late(self, five_step):
        enc = encode_future_singlesided(five_step)
        b = BoolVar(TURN)
        parents = [g for g in subformulas(enc.formula) if b in children(g)]
        assert parents
        assert all(isinstance(g, Next) for g in parents)

    def test_formula_is_sys_conjunction(self, five_step):
        enc = encode_future_singlesided(five_step)
        assert len(enc.sys_parts) == 10
        assert all(k in enc.parts for k in enc.sys_parts)
        assert "zero_challenge_c1" in enc.parts


class TestLossy:
    def test_signature(self, lossy_machine):
        enc = encode_lossy(lossy_machine)
        assert enc.machine.initial == "q_s"
        assert enc.signature.env_bools == {TURN}
        assert enc.signature.sys_datas == {"x1", "x2", "x3", "x4"}
        assert enc.env_parts == LOSSY_ENV
        assert enc.sys_parts == LOSSY_SYS
        assert set(enc.parts) == set(LOSSY_ENV) | set(LOSSY_SYS)

    def test_fragment(self, lossy_machine):
        enc = encode_lossy(lossy_machine)
        assert classify_fragment(enc.formula).name == "LRV[⟨F⟩,≈,←]"
        enc = encode_lossy(lossy_machine, data_labels=True)
        flags = classify_fragment(enc.formula, enc.signature)
        assert flags.name == "LRV[⟨F⟩,≈,←]"
        assert flags.single_sided

    def test_four_counters_required(self, five_step):
        with pytest.raises(ValueError, match="4-counter"):
            encode_lossy(five_step)

    def test_value_used_three_times(self, lossy_machine):
        single_reuse = encode_lossy(lossy_machine).parts["single_reuse"]

        def model(*x1):
            return Model(
                tuple(Valuation({}, {"x1": v, "x2": 100 + i, "x3": 200 + i, "x4": 300 + i}) for i, v in enumerate(x1))
            )

        assert evaluate(model(5, 6, 7), 1, single_reuse)
        assert evaluate(model(5, 5, 7), 1, single_reuse)
        assert not evaluate(model(5, 5, 5), 1, single_reuse)
        assert not evaluate(model(5, 6, 5, 5), 1, single_reuse)

    def test_finite_plays_are_not_infinite(self, lossy_machine):
        enc = encode_lossy(lossy_machine)
        model = Model((Valuation({}, {"x1": 1, "x2": 2, "x3": 3, "x4": 4}),))
        assert not evaluate(model, 1, enc.parts["infinite"])


class TestRewriting:
    def test_shift_turns(self):
        assert shift_turns(Always(BoolVar(TURN))) == Always(Next(BoolVar(TURN)))
        assert shift_turns(Always(BoolVar("p"))) == Always(BoolVar("p"))

    def test_sys_bools_as_data(self):
        sig = Signature.of(env_bools=["e"], sys_bools=["q"], sys_datas=["v"])
        new_sig, f = sys_bools_as_data(sig, And(BoolVar("q"), BoolVar("e")))
        assert f == And(LocalEq("q", 0, LABEL_REF), BoolVar("e"))
        assert new_sig.sys_datas == {"v", "q", LABEL_REF}
        assert not new_sig.sys_bools

    def test_reference_clash(self):
        sig = Signature.of(sys_bools=["q"], sys_datas=[LABEL_REF])
        with pytest.raises(ValueError, match="already declared"):
            sys_bools_as_data(sig, BoolVar("q"))

    def test_obligation_bodies_rewritten(self):
        sig = Signature.of(sys_bools=["q"], sys_datas=["v"])
        _, f = sys_bools_as_data(sig, PastEq("v", "v", BoolVar("q")))
        assert f == PastEq("v", "v", LocalEq("q", 0, LABEL_REF))

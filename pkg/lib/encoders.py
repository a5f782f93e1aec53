"""Formula builders that make games simulate counter machine runs.

Each builder returns an Encoding: the signature, the winning condition and
its named top-level parts. Environment parts are disjuncts (a true one is an
environment mistake, so the system wins); system parts are conjuncts the
system has to keep.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations

from lib.counter_machines import (
    DEC,
    INC,
    ZERO,
    CounterMachine,
    MachineTransition,
    add_final_increment_loop,
    is_deterministic,
    with_lossy_start,
)
from lib.formula import (
    TRUE,
    Always,
    BoolVar,
    Eventually,
    Formula,
    FutEq,
    Implies,
    LocalEq,
    Next,
    Not,
    PastEq,
    Signature,
    Until,
    conj,
    disj,
    neg,
    next_n,
    prev_n,
    transform,
)

logger = logging.getLogger(__name__)

X_VAR = "x"
Y_VAR = "y"
Z_VAR = "z"
TURN = "b"
BIS = "bis"
BEGIN = "begin"
LABEL_REF = "lbl"


@dataclass(frozen=True)
class Encoding:
    signature: Signature
    formula: Formula
    parts: dict[str, Formula]
    env_parts: tuple[str, ...] = ()
    sys_parts: tuple[str, ...] = ()
    layout: BlockLayout | None = None
    machine: CounterMachine | None = None  # after the encoder's own preprocessing


def _combine(parts: dict[str, Formula], env: tuple[str, ...], sys: tuple[str, ...]) -> Formula:
    return disj([parts[k] for k in env], conj([parts[k] for k in sys]))


def _two_counter(cm: CounterMachine) -> CounterMachine:
    if cm.counters != 2:
        raise ValueError(f"expected a 2-counter machine, got {cm.counters} counter(s)")
    out = add_final_increment_loop(cm)
    if not is_deterministic(out):
        raise ValueError("the machine (with its final loop) must be deterministic")
    return out


def _of(transitions: tuple[MachineTransition, ...], op: str, counter: int) -> list[MachineTransition]:
    return [t for t in transitions if t.op == op and t.counter == counter]


def shift_turns(f: Formula, name: str = TURN) -> Formula:
    """Every read of the environment boolean moves one position right."""

    target = BoolVar(name)
    return transform(f, lambda g: Next(g) if g == target else g)


def sys_bools_as_data(sig: Signature, f: Formula, ref: str = LABEL_REF) -> tuple[Signature, Formula]:
    """Replace each system boolean q by the test q ≈ ref on system data."""

    if ref in sig.names:
        raise ValueError(f"reference variable {ref!r} is already declared")
    names = sig.sys_bools
    out = transform(f, lambda g: LocalEq(g.name, 0, ref) if isinstance(g, BoolVar) and g.name in names else g)
    new_sig = Signature(sig.env_bools, frozenset(), sig.env_datas, sig.sys_datas | names | {ref})
    return new_sig, out


# --------------------------------------------------------------------------- positions


class _Positions:
    """Where a run step lives: one position per transition, labels as booleans."""

    def __init__(self, labels: dict[str, Formula]) -> None:
        self.labels = labels

    def label(self, name: str) -> Formula:
        return self.labels[name]

    def step(self, f: Formula, k: int = 1) -> Formula:
        return next_n(f, k)

    def exists(self, f: Formula) -> Formula:
        return Eventually(f)

    def forall(self, f: Formula) -> Formula:
        return Always(f)

    def start(self, f: Formula) -> Formula:
        return f


class _BlockPositions(_Positions):
    """One block per transition; formulas are read at payload positions."""

    def __init__(self, layout: BlockLayout, x: str) -> None:
        super().__init__({})
        self.layout = layout
        self.x = x
        self.guard = prev_n(layout.block0(x), layout.payload)

    def label(self, name: str) -> Formula:
        return prev_n(self.layout.label_test(self.x, name), self.layout.payload)

    def step(self, f: Formula, k: int = 1) -> Formula:
        return next_n(f, k * self.layout.length)

    def exists(self, f: Formula) -> Formula:
        return Eventually(conj(self.guard, f))

    def forall(self, f: Formula) -> Formula:
        return Always(Implies(self.guard, f))

    def start(self, f: Formula) -> Formula:
        return next_n(f, self.layout.payload)


# --------------------------------------------------------------------------- blocks


@dataclass(frozen=True)
class BlockLayout:
    """Offsets of a label block on the environment's data variable.

    Plain blocks read d d d1 d2 .. dm payload; the k-th label puts d_{k+1}
    equal to d1, every other d_k is fresh. Bounded blocks interleave d, d1
    so that no local test looks further than three positions.
    """

    labels: tuple[str, ...]
    bounded: bool = False

    @property
    def m(self) -> int:
        return len(self.labels) + 1

    @property
    def length(self) -> int:
        return 3 * self.m + 1 if self.bounded else self.m + 3

    @property
    def payload(self) -> int:
        return self.length - 1

    def index(self, name: str) -> int:
        return self.labels.index(name) + 1

    def d_offsets(self) -> list[int]:
        if not self.bounded:
            return [0, 1]
        return [0, 1] + [3 * k - 5 for k in range(3, self.m + 1)] + [3 * self.m - 2]

    def d1_offsets(self) -> list[int]:
        if not self.bounded:
            return [2]
        return [2] + [3 * k - 4 for k in range(3, self.m + 1)] + [3 * self.m - 1]

    def dk_offset(self, k: int) -> int:
        """Offset of d_k, 2 <= k <= m."""

        return 3 * (k - 1) if self.bounded else k + 1

    def roles(self) -> list[str]:
        out = [""] * self.length
        for o in self.d_offsets():
            out[o] = "d"
        for o in self.d1_offsets():
            out[o] = "d1"
        for k in range(2, self.m + 1):
            out[self.dk_offset(k)] = f"d{k}"
        out[self.payload] = "payload"
        return out

    def block0(self, x: str) -> Formula:
        if self.bounded:
            return conj(LocalEq(x, 1, x), Not(LocalEq(x, 2, x)), Next(LocalEq(x, 3, x)))
        return conj(LocalEq(x, self.m + 3, x), LocalEq(x, 1, x))

    def label_test(self, x: str, name: str) -> Formula:
        i = self.index(name)
        if self.bounded:
            return conj(self.block0(x), next_n(LocalEq(x, -1, x), 3 * i))
        return conj(self.block0(x), next_n(LocalEq(x, i, x), 2))

    def one_label(self, x: str) -> Formula:
        tests = [self.label_test(x, name) for name in self.labels]
        return conj(disj(tests), neg(disj(conj(a, b) for a, b in combinations(tests, 2))))

    def structure(self, x: str) -> Formula:
        fresh = Not(PastEq(x, x, TRUE))
        parts: list[Formula] = [next_n(fresh, 2)]
        if self.bounded:
            for k in range(2, self.m + 1):
                parts.append(next_n(disj(LocalEq(x, -1, x), fresh), self.dk_offset(k)))
            for chain in (self.d_offsets()[1:] + [self.length], self.d1_offsets()):
                for a, b in zip(chain, chain[1:]):
                    parts.append(next_n(LocalEq(x, b - a, x), a))
        else:
            for i in range(3, self.m + 2):
                parts.append(next_n(disj(LocalEq(x, 2 - i, x), fresh), i))
        parts.append(self.one_label(x))
        parts.append(next_n(LocalEq(x, 1, x), self.length))
        return conj(parts)

    def block_step(self, x: str) -> Formula:
        """A block start forces its own shape and the next block start."""

        b0 = self.block0(x)
        return Implies(b0, conj(self.structure(x), next_n(b0, self.length)))

    def shape(self, x: str) -> Formula:
        return conj(self.block0(x), Always(self.block_step(x)))

    def copy(self, x: str, y: str) -> Formula:
        b0 = self.block0(x)
        return Always(conj(Implies(prev_n(b0, i), LocalEq(x, 0, y)) for i in range(self.length) if i != self.payload))


# --------------------------------------------------------------------------- reachability


ENV_MISTAKES = (
    "first_position",
    "bad_start",
    "not_one",
    "incompatible",
    "inc1_old",
    "dec1_bad",
    "inc2_new",
    "dec2_bad",
    "zero1_witness",
    "zero2_witness",
)
SYS_DUTIES = ("inc1_reply", "inc2_reply", "copy_reply", "halt")


def _reach_parts(cm: CounterMachine, pos: _Positions, x: str, y: str) -> dict[str, Formula]:
    T = cm.transitions
    lab = pos.label
    X, F, G = pos.step, pos.exists, pos.forall

    def some(ts) -> Formula:
        return disj(lab(t.name) for t in ts)

    xx, xy, yx, yy = PastEq(x, x, TRUE), PastEq(x, y, TRUE), PastEq(y, x, TRUE), PastEq(y, y, TRUE)
    inc1, dec1, zero1 = some(_of(T, INC, 1)), some(_of(T, DEC, 1)), some(_of(T, ZERO, 1))
    inc2, dec2, zero2 = some(_of(T, INC, 2)), some(_of(T, DEC, 2)), some(_of(T, ZERO, 2))

    parts = {
        "first_position": some(T),
        "bad_start": X(some(t for t in T if t.source != cm.initial)),
        "not_one": X(
            F(
                disj(
                    disj(conj(lab(a.name), lab(b.name)) for a, b in combinations(T, 2)),
                    conj(neg(lab(t.name)) for t in T),
                )
            )
        ),
        "incompatible": X(F(disj(conj(lab(t.name), X(lab(u.name))) for t in T for u in T if u.source != t.target))),
        "inc1_old": X(F(conj(inc1, disj(xx, xy)))),
        "dec1_bad": X(F(conj(dec1, disj(Not(xx), xy)))),
        "inc2_new": X(F(conj(inc2, disj(Not(xx), Not(xy))))),
        # read as a disjunction over the decrementing transitions
        "dec2_bad": X(F(conj(dec2, disj(Not(xy), xx)))),
        "zero1_witness": X(F(conj(zero1, yx, Not(yy)))),
        "zero2_witness": X(F(conj(zero2, yy, Not(yx)))),
        "inc1_reply": X(G(conj(Implies(lab(t.name), conj(yx, yy)) for t in _of(T, INC, 1)))),
        "inc2_reply": X(
            G(conj(Implies(lab(t.name), conj(Not(LocalEq(y, 0, x)), Not(yx), Not(yy))) for t in _of(T, INC, 2)))
        ),
        "copy_reply": X(G(conj(Implies(lab(t.name), LocalEq(y, 0, x)) for t in T if t.op in (DEC, ZERO)))),
        "halt": X(F(some(t for t in T if t.target == cm.final))),
    }
    return {k: pos.start(v) for k, v in parts.items()}


def label_var(t: MachineTransition) -> str:
    return f"p_{t.name}"


def encode_reach_bool(cm: CounterMachine) -> Encoding:
    """The environment picks transitions as booleans and plays x; the system answers on y."""

    cm = _two_counter(cm)
    labels = {t.name: BoolVar(label_var(t)) for t in cm.transitions}
    parts = _reach_parts(cm, _Positions(labels), X_VAR, Y_VAR)
    sig = Signature.of(env_bools=[b.name for b in labels.values()], env_datas=[X_VAR], sys_datas=[Y_VAR])
    f = _combine(parts, ENV_MISTAKES, SYS_DUTIES)
    logger.info("Boolean-label reachability encoding over %d transition(s)", len(labels))
    return Encoding(sig, f, parts, ENV_MISTAKES, SYS_DUTIES, machine=cm)


def _encode_blocks(cm: CounterMachine, *, bounded: bool) -> Encoding:
    cm = _two_counter(cm)
    layout = BlockLayout((BEGIN, *(t.name for t in cm.transitions)), bounded=bounded)
    parts = _reach_parts(cm, _BlockPositions(layout, X_VAR), X_VAR, Y_VAR)
    parts["block_shape"] = neg(layout.shape(X_VAR))
    parts["block_copy"] = layout.copy(X_VAR, Y_VAR)
    env = ("block_shape", *ENV_MISTAKES)
    sys = ("block_copy", *SYS_DUTIES)
    sig = Signature.of(env_datas=[X_VAR], sys_datas=[Y_VAR])
    logger.info("Block encoding: %d label(s), block length %d", len(layout.labels), layout.length)
    return Encoding(sig, _combine(parts, env, sys), parts, env, sys, layout, cm)


def encode_reach_blocks(cm: CounterMachine) -> Encoding:
    return _encode_blocks(cm, bounded=False)


def encode_reach_bounded(cm: CounterMachine) -> Encoding:
    return _encode_blocks(cm, bounded=True)


# --------------------------------------------------------------------------- future obligations


def _labels_of(labels: dict[str, Formula], T: tuple[MachineTransition, ...], op: str, k: int) -> Formula:
    return disj(labels[t.name] for t in _of(T, op, k))


def _counter_move(op: str, a: str, o: str) -> Formula:
    if op == INC:
        return conj(LocalEq(a, 0, o), LocalEq(a, 1, a), LocalEq(o, 1, o), Not(Next(FutEq(a, o, TRUE))))
    if op == DEC:
        return conj(
            Not(LocalEq(a, 0, o)),
            Not(FutEq(a, a, TRUE)),
            Not(FutEq(a, o, TRUE)),
            LocalEq(o, 1, o),
            LocalEq(o, 1, a),
        )
    return conj(LocalEq(a, 0, o), LocalEq(a, 1, a), LocalEq(o, 1, o))


def _z_moves(a: str, b: Formula, *, wait_for_turn: bool) -> Formula:
    z = Z_VAR
    keep = LocalEq(z, 1, z)
    change = conj(Not(keep), Not(b), Next(b) if wait_for_turn else TRUE, LocalEq(a, 1, z), Next(Always(keep)))
    return conj(Not(disj(FutEq(z, X_VAR, TRUE), FutEq(z, Y_VAR, TRUE))), Until(keep, change))


def encode_future_singlesided(cm: CounterMachine, *, data_labels: bool = False) -> Encoding:
    """System labels transitions interleaved with `bis`; the environment's b denounces illegal moves."""

    cm = _two_counter(cm)
    T = cm.transitions
    labels = {t.name: BoolVar(f"l_{t.name}") for t in T}
    bis = BoolVar(BIS)
    b = BoolVar(TURN)
    every = [*labels.values(), bis]
    var = {1: X_VAR, 2: Y_VAR}

    parts: dict[str, Formula] = {
        "lab_one": Always(conj(disj(every), neg(disj(conj(p, q) for p, q in combinations(every, 2))))),
        "lab_start": disj(labels[t.name] for t in T if t.source == cm.initial),
        "lab_alternate": Always(conj(Implies(bis, Next(Not(bis))), Implies(Not(bis), Next(bis)))),
        "lab_follow": Always(
            conj(
                Implies(labels[t.name], next_n(disj(labels[u.name] for u in T if u.source == t.target), 2))
                for t in T
            )
        ),
        "lab_final": Eventually(disj(labels[t.name] for t in T if t.target == cm.final)),
        "counter_moves": Always(
            conj(
                Implies(_labels_of(labels, T, op, k), _counter_move(op, var[k], var[3 - k]))
                for k in (1, 2)
                for op in (INC, DEC, ZERO)
            )
        ),
    }
    for k in (1, 2):
        a = var[k]
        inc, dec, zero = (_labels_of(labels, T, op, k) for op in (INC, DEC, ZERO))
        witnessed = Eventually(conj(inc, FutEq(a, Z_VAR, TRUE)))
        pieces = {
            "inc_before_zero_repeats": Always(Implies(conj(inc, Eventually(zero)), FutEq(a, a, TRUE))),
            "zero_challenge": Until(b, conj(Not(b), zero, Next(Until(Not(b), dec)))),
            "zero_challenge_paid": Eventually(conj(inc, Not(b), FutEq(a, Z_VAR, TRUE))),
            "zero_marker": _z_moves(a, b, wait_for_turn=True),
            "zero_marker_paid": witnessed,
            "dec_challenge": Until(b, conj(Not(b), dec, Next(Always(b)))),
            "dec_marker": _z_moves(a, b, wait_for_turn=False),
            "dec_marker_paid": witnessed,
        }
        for name, f in pieces.items():
            parts[f"{name}_c{k}"] = f
        parts[f"zero_reply_c{k}"] = conj(
            pieces["inc_before_zero_repeats"],
            Implies(
                conj(pieces["zero_challenge"], Not(pieces["zero_challenge_paid"])),
                conj(pieces["zero_marker"], Not(pieces["zero_marker_paid"])),
            ),
        )
        parts[f"dec_reply_c{k}"] = Implies(pieces["dec_challenge"], conj(pieces["dec_marker"], pieces["dec_marker_paid"]))

    # the environment moves first in each round, so its reads shift one position right
    parts = {name: shift_turns(f) for name, f in parts.items()}
    sys_parts = (
        "lab_one",
        "lab_start",
        "lab_alternate",
        "lab_follow",
        "lab_final",
        "counter_moves",
        "zero_reply_c1",
        "zero_reply_c2",
        "dec_reply_c1",
        "dec_reply_c2",
    )
    sig = Signature.of(env_bools=[TURN], sys_bools=[p.name for p in every], sys_datas=[X_VAR, Y_VAR, Z_VAR])
    f = conj(parts[k] for k in sys_parts)
    if data_labels:
        sig, f = sys_bools_as_data(sig, f)
        parts = {k: sys_bools_as_data(Signature.of(sys_bools=[p.name for p in every]), g)[1] for k, g in parts.items()}
    logger.info("Future-obligation encoding over %d transition(s)", len(T))
    return Encoding(sig, f, parts, (), sys_parts, machine=cm)


# --------------------------------------------------------------------------- reset-lossy machines


LOSSY_ENV = ("alarm_off_decrement", "alarm_on_matched_decrement")
LOSSY_SYS = (
    "one_label",
    "start",
    "follow",
    "back_to_start",
    "fresh_increment",
    "decrement_matches_increment",
    "single_reuse",
    "alarm_means_unreset",
    "infinite",
)


def encode_lossy(lcm: CounterMachine, *, data_labels: bool = False) -> Encoding:
    """Infinite runs of a 4-counter reset-lossy machine from (q0, 0, 0, 0, n) for some n."""

    if lcm.counters != 4:
        raise ValueError(f"expected a 4-counter machine, got {lcm.counters} counter(s)")
    q0 = lcm.initial
    cm = with_lossy_start(lcm)
    T = cm.transitions
    p = {t.name: BoolVar(label_var(t)) for t in T}
    b = BoolVar(TURN)
    xs = {k: f"x{k}" for k in range(1, 5)}

    def some(ts) -> Formula:
        return disj(p[t.name] for t in ts)

    def inc(k: int) -> Formula:
        return some(_of(T, INC, k))

    def dec(k: int) -> Formula:
        return some(_of(T, DEC, k))

    def zero(k: int) -> Formula:
        return some(_of(T, ZERO, k))

    def obl(k: int, body: Formula) -> Formula:
        return PastEq(xs[k], xs[k], body)

    parts: dict[str, Formula] = {
        "alarm_off_decrement": Eventually(conj(Not(b), some(t for t in T if t.op != DEC))),
        "alarm_on_matched_decrement": Eventually(
            conj(Not(b), disj(conj(dec(k), obl(k, conj(inc(k), Not(Eventually(zero(k)))))) for k in xs))
        ),
        "one_label": Always(conj(some(T), conj(disj(Not(p[s.name]), Not(p[t.name])) for s, t in combinations(T, 2)))),
        "start": some(t for t in T if t.source == cm.initial),
        "follow": Always(disj(conj(p[t.name], Next(p[u.name])) for t in T for u in T if u.source == t.target)),
        "back_to_start": Eventually(some(t for t in T if t.target == q0)),
        "fresh_increment": conj(Always(Implies(p[t.name], Not(obl(k, TRUE)))) for k in xs for t in _of(T, INC, k)),
        "decrement_matches_increment": conj(Always(Implies(p[t.name], obl(k, inc(k)))) for k in xs for t in _of(T, DEC, k)),
        "single_reuse": Not(disj(Eventually(obl(k, obl(k, TRUE))) for k in xs)),
        "alarm_means_unreset": conj(Always(Implies(conj(Not(b), dec(k)), obl(k, Not(Eventually(zero(k)))))) for k in xs),
        "infinite": Always(Next(TRUE)),
    }
    parts = {name: shift_turns(f) for name, f in parts.items()}
    sig = Signature.of(env_bools=[TURN], sys_bools=[v.name for v in p.values()], sys_datas=xs.values())
    f = _combine(parts, LOSSY_ENV, LOSSY_SYS)
    if data_labels:
        label_sig = Signature.of(sys_bools=[v.name for v in p.values()])
        sig, f = sys_bools_as_data(sig, f)
        parts = {k: sys_bools_as_data(label_sig, g)[1] for k, g in parts.items()}
    logger.info("Reset-lossy encoding over %d transition(s)", len(T))
    return Encoding(sig, f, parts, LOSSY_ENV, LOSSY_SYS, machine=cm)

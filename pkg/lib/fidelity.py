"""Scripted machine-simulation plays for the encoders, and part-by-part checks on them."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import pandas as pd

from lib.counter_machines import (
    DEC,
    INC,
    ZERO,
    CounterMachine,
    IfzDec,
    MachineConfig,
    MachineTransition,
    apply,
    run_transitions,
    step_transition,
)
from lib.encoders import BIS, TURN, X_VAR, Y_VAR, Z_VAR, Encoding, label_var
from lib.formula import Model, Valuation
from lib.game_sim import TableScript
from lib.semantics import evaluate, evaluate_lasso

logger = logging.getLogger(__name__)

VIOLATIONS = (
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

D0 = 0


class _Tape:
    """Data bookkeeping of a faithful reachability play: d0 plus one pool per counter."""

    def __init__(self) -> None:
        self.next = D0 + 1
        self.pools: dict[int, list[int]] = {1: [], 2: []}

    def fresh(self) -> int:
        self.next += 1
        return self.next - 1

    def faithful(self, t: MachineTransition) -> tuple[int, int]:
        if t.op == INC:
            d = self.fresh()
            self.pools[t.counter].append(d)
            return (d, D0) if t.counter == 1 else (D0, d)
        if t.op == DEC:
            if not self.pools[t.counter]:
                raise ValueError(f"{t.describe()}: counter {t.counter} has no value to release")
            d = self.pools[t.counter].pop()
            return d, d
        return D0, D0


def _row(cm: CounterMachine, labels: set[str], x: int, y: int) -> Valuation:
    return Valuation({label_var(t): t.name in labels for t in cm.transitions}, {X_VAR: x, Y_VAR: y})


def _require_bool_labels(encoding: Encoding) -> CounterMachine:
    cm = encoding.machine
    if cm is None or any(label_var(t) not in encoding.signature.env_bools for t in cm.transitions):
        raise ValueError("machine-simulation plays need the boolean-label reachability encoding")
    return cm


def faithful_reach_model(encoding: Encoding, steps: int) -> Model:
    """Both players simulate the run honestly; position 1 carries no transition."""

    cm = _require_bool_labels(encoding)
    tape = _Tape()
    rows = [_row(cm, set(), D0, D0)]
    for t in run_transitions(cm, steps):
        rows.append(_row(cm, {t.name}, *tape.faithful(t)))
    logger.debug("Faithful play of %d position(s)", len(rows))
    return Model(tuple(rows))


def _first(ts, what: str, pred) -> MachineTransition:
    for t in ts:
        if pred(t):
            return t
    raise ValueError(f"the machine has no {what}")


def inject_violation(encoding: Encoding, kind: str, steps: int = 50) -> Model:
    """A faithful play cut short by one environment mistake of the given kind."""

    if kind not in VIOLATIONS:
        raise ValueError(f"unknown violation {kind!r}; expected one of {', '.join(VIOLATIONS)}")
    cm = _require_bool_labels(encoding)
    T = cm.transitions
    run = run_transitions(cm, steps)
    if not run:
        raise ValueError("the machine run is empty")
    tape = _Tape()
    rows = [_row(cm, set(), D0, D0)]

    if kind == "first_position":
        return Model((_row(cm, {run[0].name}, D0, D0),))
    if kind in ("bad_start", "incompatible"):
        if kind == "incompatible":
            rows.append(_row(cm, {run[0].name}, *tape.faithful(run[0])))
            expected = run[0].target
        else:
            expected = cm.initial
        t = _first(T, f"non-decrementing transition leaving a state other than {expected}",
                   lambda u: u.source != expected and u.op != DEC)
        rows.append(_row(cm, {t.name}, *tape.faithful(t)))
        return Model(tuple(rows))
    if kind == "not_one":
        rows.append(_row(cm, {run[0].name}, *tape.faithful(run[0])))
        rows.append(_row(cm, set(), D0, D0))
        return Model(tuple(rows))

    config = MachineConfig.start(cm)
    op, counter = {
        "inc1_old": (INC, 1),
        "dec1_bad": (DEC, 1),
        "inc2_new": (INC, 2),
        "dec2_bad": (DEC, 2),
        "zero1_witness": (ZERO, 1),
        "zero2_witness": (ZERO, 2),
    }[kind]
    for t in run:
        if op in (INC, DEC) and t.op == op and t.counter == counter:
            if kind == "inc1_old":
                x, y = D0, D0
            elif kind == "dec1_bad":
                x, y = D0, D0
            elif kind == "inc2_new":
                x, y = tape.fresh(), tape.fresh()
            else:
                x = tape.fresh()
                y = x
            rows.append(_row(cm, {t.name}, x, y))
            return Model(tuple(rows))
        if op == ZERO and config.values[counter - 1] > 0:
            zero = _zero_branch(cm, config.state, counter)
            if zero is not None and tape.pools[counter]:
                witness = tape.pools[counter][-1]
                rows.append(_row(cm, {zero.name}, D0, witness))
                return Model(tuple(rows))
        rows.append(_row(cm, {t.name}, *tape.faithful(t)))
        config = apply(t, config)
    raise ValueError(f"the run of {steps} step(s) never offers a {kind} mistake")


def _zero_branch(cm: CounterMachine, state: str, counter: int) -> MachineTransition | None:
    ins = [i for i in cm.instructions_from(state) if isinstance(i, IfzDec) and i.counter == counter]
    if not ins:
        return None
    return _first(cm.transitions, "zero branch", lambda t: t.source == state and t.op == ZERO and t.counter == counter)


def two_transitions_model(encoding: Encoding) -> Model:
    """The environment labels its first move with two transitions."""

    cm = _require_bool_labels(encoding)
    if len(cm.transitions) < 2:
        raise ValueError("the machine needs at least two transitions")
    first = step_transition(cm, MachineConfig.start(cm))
    other = _first(cm.transitions, "second transition", lambda t: t != first)
    return Model((_row(cm, set(), D0, D0), _row(cm, {first.name, other.name}, D0, D0)))


def machine_scripts(encoding: Encoding, model: Model) -> tuple[TableScript, TableScript]:
    """Environment and system table scripts that replay the model round by round."""

    sig = encoding.signature
    env = TableScript.from_model(model, sig.env_bools | sig.env_datas)
    sys = TableScript.from_model(model, sig.sys_bools | sig.sys_datas)
    return env, sys


def cheating_decrement_lasso(encoding: Encoding) -> tuple[tuple[Valuation, ...], tuple[Valuation, ...]]:
    """System decrements an empty first counter with a fresh value; the environment denounces it at once.

    The machine must decrement counter 1 out of its initial state straight
    into the final state. Afterwards the final loop and `bis` alternate on
    constant data while z keeps the denounced value.
    """

    cm = encoding.machine
    if cm is None or BIS not in encoding.signature.sys_bools:
        raise ValueError("denouncement plays need the boolean-label future encoding")
    dec = _first(cm.transitions, "decrement of counter 1 from the initial state",
                 lambda t: t.op == DEC and t.counter == 1 and t.source == cm.initial and t.target == cm.final)
    loop = _first(cm.transitions, "final loop", lambda t: t.op == INC and t.source == t.target == cm.final)
    names = [f"l_{t.name}" for t in cm.transitions]

    def row(label: str | None, b: bool, x: int, y: int, z: int) -> Valuation:
        bools = {n: n == label for n in names}
        bools[BIS] = label == BIS
        bools[TURN] = b
        return Valuation(bools, {X_VAR: x, Y_VAR: y, Z_VAR: z})

    cheat, settled, start = 1, 2, 0
    prefix = (
        row(f"l_{dec.name}", True, cheat, settled, start),
        row(BIS, False, settled, settled, cheat),
    )
    cycle = (
        row(f"l_{loop.name}", True, settled, settled, cheat),
        row(BIS, True, settled, settled, cheat),
    )
    return prefix, cycle


@dataclass(frozen=True)
class FidelityReport:
    data: pd.DataFrame  # columns: part, role, value

    def tripped(self) -> list[str]:
        d = self.data
        return d.loc[(d["role"] == "env") & d["value"], "part"].tolist()

    def broken(self) -> list[str]:
        d = self.data
        return d.loc[(d["role"] == "sys") & ~d["value"], "part"].tolist()

    def value(self, part: str) -> bool:
        rows = self.data.loc[self.data["part"] == part, "value"]
        if rows.empty:
            raise KeyError(part)
        return bool(rows.iloc[0])


def fidelity_check(encoding: Encoding, model: Model, *, cycle: Model | None = None) -> FidelityReport:
    """Every named part at position 1 of the finite play, or of model·cycle^ω."""

    rows = []
    for name, f in encoding.parts.items():
        if name in encoding.env_parts:
            role = "env"
        elif name in encoding.sys_parts:
            role = "sys"
        else:
            role = "piece"
        if cycle is None:
            value = evaluate(model, 1, f)
        else:
            value = evaluate_lasso(model.valuations, cycle.valuations, f)
        rows.append({"part": name, "role": role, "value": value})
    report = FidelityReport(pd.DataFrame(rows, columns=["part", "role", "value"]))
    logger.info("Fidelity: tripped %s, broken %s", report.tripped(), report.broken())
    return report

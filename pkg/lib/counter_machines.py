"""n-counter machines and their reset-lossy variant.

Text format, one declaration or instruction per line, `#` starts a comment:

    counters: 2
    init: q0
    final: qf
    q0: inc 1 goto q1
    q1: ifz 2 goto qf else dec goto q0

A `lossy: reset` header marks a reset-lossy machine.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import pandas as pd

from lib.errors import MachineFormatError

logger = logging.getLogger(__name__)

INC = "inc"
DEC = "dec"
ZERO = "zero"


@dataclass(frozen=True)
class Inc:
    state: str
    counter: int  # 1-based
    target: str


@dataclass(frozen=True)
class IfzDec:
    state: str
    counter: int
    zero_target: str
    dec_target: str


Instruction = Inc | IfzDec


@dataclass(frozen=True)
class MachineTransition:
    """One edge of the machine: an increment, a zero branch or a decrement branch."""

    index: int
    source: str
    op: str  # inc | dec | zero
    counter: int
    target: str

    @property
    def name(self) -> str:
        return f"t{self.index}"

    def describe(self) -> str:
        return f"{self.source} -{self.op}{self.counter}-> {self.target}"


@dataclass(frozen=True)
class CounterMachine:
    counters: int
    initial: str
    final: str
    instructions: tuple[Instruction, ...]
    lossy: bool = False

    @property
    def states(self) -> tuple[str, ...]:
        names = {self.initial, self.final}
        for ins in self.instructions:
            names.add(ins.state)
            if isinstance(ins, Inc):
                names.add(ins.target)
            else:
                names.update((ins.zero_target, ins.dec_target))
        return tuple(sorted(names))

    @property
    def transitions(self) -> tuple[MachineTransition, ...]:
        out: list[MachineTransition] = []
        for ins in self.instructions:
            if isinstance(ins, Inc):
                out.append(MachineTransition(len(out), ins.state, INC, ins.counter, ins.target))
            else:
                out.append(MachineTransition(len(out), ins.state, ZERO, ins.counter, ins.zero_target))
                out.append(MachineTransition(len(out), ins.state, DEC, ins.counter, ins.dec_target))
        return tuple(out)

    def instructions_from(self, state: str) -> tuple[Instruction, ...]:
        return tuple(ins for ins in self.instructions if ins.state == state)


@dataclass(frozen=True)
class MachineConfig:
    state: str
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(v < 0 for v in self.values):
            raise ValueError(f"counter values must be non-negative, got {self.values}")

    @classmethod
    def start(cls, cm: CounterMachine) -> MachineConfig:
        return cls(cm.initial, (0,) * cm.counters)


# --------------------------------------------------------------------------- parsing

_HEADER = re.compile(r"^(counters|init|final|lossy)\s*:\s*(\S+)$")
_INC = re.compile(r"^(\w+)\s*:\s*inc\s+(\d+)\s+goto\s+(\w+)$")
_IFZ = re.compile(r"^(\w+)\s*:\s*ifz\s+(\d+)\s+goto\s+(\w+)\s+else\s+dec\s+goto\s+(\w+)$")


def parse_cm(text: str) -> CounterMachine:
    headers: dict[str, str] = {}
    instructions: list[Instruction] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _HEADER.match(line):
            key, value = m.groups()
            if key in headers:
                raise MachineFormatError(f"line {lineno}: duplicate header {key!r}")
            headers[key] = value
        elif m := _INC.match(line):
            instructions.append(Inc(m.group(1), int(m.group(2)), m.group(3)))
        elif m := _IFZ.match(line):
            instructions.append(IfzDec(m.group(1), int(m.group(2)), m.group(3), m.group(4)))
        else:
            raise MachineFormatError(f"line {lineno}: cannot parse {raw.strip()!r}")

    for key in ("counters", "init", "final"):
        if key not in headers:
            raise MachineFormatError(f"missing header {key!r}")
    try:
        n = int(headers["counters"])
    except ValueError:
        raise MachineFormatError(f"counters: expected an integer, got {headers['counters']!r}") from None
    if n < 1:
        raise MachineFormatError("a machine needs at least one counter")
    lossy = headers.get("lossy")
    if lossy not in (None, "reset"):
        raise MachineFormatError(f"lossy: only 'reset' is supported, got {lossy!r}")
    for ins in instructions:
        if not 1 <= ins.counter <= n:
            raise MachineFormatError(f"instruction from {ins.state} uses counter {ins.counter} outside 1..{n}")

    cm = CounterMachine(n, headers["init"], headers["final"], tuple(instructions), lossy=lossy == "reset")
    logger.debug("Parsed %d-counter machine with %d instruction(s)", n, len(instructions))
    return cm


def load_cm(path: str | Path) -> CounterMachine:
    return parse_cm(Path(path).read_text(encoding="utf-8"))


def format_cm(cm: CounterMachine) -> str:
    lines = [f"counters: {cm.counters}", f"init: {cm.initial}", f"final: {cm.final}"]
    if cm.lossy:
        lines.append("lossy: reset")
    for ins in cm.instructions:
        if isinstance(ins, Inc):
            lines.append(f"{ins.state}: inc {ins.counter} goto {ins.target}")
        else:
            lines.append(f"{ins.state}: ifz {ins.counter} goto {ins.zero_target} else dec goto {ins.dec_target}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- structure


def is_deterministic(cm: CounterMachine) -> bool:
    """At most one instruction leaves each state."""

    seen: set[str] = set()
    for ins in cm.instructions:
        if ins.state in seen:
            return False
        seen.add(ins.state)
    return True


def final_loop(cm: CounterMachine) -> Inc:
    return Inc(cm.final, 1, cm.final)


def add_final_increment_loop(cm: CounterMachine) -> CounterMachine:
    loop = final_loop(cm)
    if loop in cm.instructions:
        return cm
    return replace(cm, instructions=cm.instructions + (loop,))


# --------------------------------------------------------------------------- semantics


def _fire(ins: Instruction, transitions: Sequence[MachineTransition], values: tuple[int, ...]) -> MachineTransition:
    k = ins.counter - 1
    if isinstance(ins, Inc):
        op = INC
    else:
        op = ZERO if values[k] == 0 else DEC
    for t in transitions:
        if t.source == ins.state and t.op == op and t.counter == ins.counter:
            if op == INC and t.target != ins.target:
                continue
            if op == ZERO and t.target != ins.zero_target:
                continue
            if op == DEC and t.target != ins.dec_target:
                continue
            return t
    raise AssertionError(f"no transition for {ins}")


def apply(t: MachineTransition, config: MachineConfig) -> MachineConfig:
    values = list(config.values)
    k = t.counter - 1
    if t.op == INC:
        values[k] += 1
    elif t.op == DEC:
        if values[k] == 0:
            raise ValueError(f"{t.describe()} would decrement a zero counter")
        values[k] -= 1
    elif values[k] != 0:
        raise ValueError(f"{t.describe()} tests a non-zero counter")
    return MachineConfig(t.target, tuple(values))


def step_transition(cm: CounterMachine, config: MachineConfig, *, pick: int | None = None) -> MachineTransition:
    """The transition fired from config; `pick` chooses among several instructions."""

    options = cm.instructions_from(config.state)
    if not options:
        raise ValueError(f"no successor: state {config.state} has no instruction")
    if len(options) > 1 and pick is None:
        raise ValueError(f"state {config.state} has {len(options)} instructions; pass pick")
    ins = options[pick or 0]
    return _fire(ins, cm.transitions, config.values)


def step(cm: CounterMachine, config: MachineConfig, *, pick: int | None = None) -> MachineConfig:
    return apply(step_transition(cm, config, pick=pick), config)


def run_bounded(cm: CounterMachine, steps: int) -> pd.DataFrame:
    """Run from the initial configuration for at most `steps` steps or until the final state."""

    config = MachineConfig.start(cm)
    names = [f"c{k + 1}" for k in range(cm.counters)]
    rows = [{"step": 0, "state": config.state, "transition": -1, **dict(zip(names, config.values))}]
    for n in range(1, steps + 1):
        if config.state == cm.final:
            break
        t = step_transition(cm, config)
        config = apply(t, config)
        rows.append({"step": n, "state": config.state, "transition": t.index, **dict(zip(names, config.values))})
    logger.info("Ran %d step(s), stopped in %s", len(rows) - 1, config.state)
    return pd.DataFrame(rows, columns=["step", "state", "transition", *names])


def run_transitions(cm: CounterMachine, steps: int) -> list[MachineTransition]:
    table = run_bounded(cm, steps)
    by_index = cm.transitions
    return [by_index[k] for k in table["transition"].tolist()[1:]]


def resettable(cm: CounterMachine, state: str) -> set[int]:
    """Counters (1-based) with a zero test leaving `state`."""

    return {ins.counter for ins in cm.instructions_from(state) if isinstance(ins, IfzDec)}


def step_lossy(
    cm: CounterMachine,
    config: MachineConfig,
    resets: Sequence[bool],
    *,
    pick: int | None = None,
) -> MachineConfig:
    """A reset step on the counters flagged in `resets`, then a normal step."""

    if len(resets) != cm.counters:
        raise ValueError(f"expected {cm.counters} reset flag(s), got {len(resets)}")
    allowed = resettable(cm, config.state)
    values = list(config.values)
    for k, flag in enumerate(resets):
        if not flag:
            continue
        if k + 1 not in allowed:
            raise ValueError(f"illegal reset of c{k + 1}: no zero test on it leaves {config.state}")
        values[k] = 0
    return step(cm, MachineConfig(config.state, tuple(values)), pick=pick)


def with_lossy_start(cm: CounterMachine, start: str = "q_s") -> CounterMachine:
    """New initial state that pumps the last counter, then zero-tests it into the old start."""

    taken = set(cm.states)
    name = start
    while name in taken:
        name += "_"
    c = cm.counters
    pumped = (Inc(name, c, name), IfzDec(name, c, cm.initial, cm.initial))
    return replace(cm, initial=name, instructions=pumped + cm.instructions)

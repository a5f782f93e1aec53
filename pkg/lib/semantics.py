"""Satisfaction of formulas on finite models and on lassos u·v^ω.

Every subformula gets a numpy bool vector over the positions of the trace,
computed children first. Past operators run forward, future operators run
backward. A lasso is unrolled into enough copies of its cycle that all past
subformulas are periodic on the last copy; future operators take a fixpoint
on that copy, whose successor is its own first position.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from lib.formula import (
    Always,
    And,
    BoolVar,
    Const,
    Eventually,
    Formula,
    FutEq,
    Historically,
    Implies,
    LocalEq,
    Model,
    Next,
    Not,
    Obligation,
    Once,
    Or,
    PastEq,
    Prev,
    Release,
    Since,
    Trigger,
    Until,
    Valuation,
    WeakNext,
    WeakPrev,
    subformulas,
)


@dataclass(frozen=True)
class Trace:
    valuations: tuple[Valuation, ...]
    loop_start: int | None = None  # 0-based start of the cycle; None for finite traces

    def __post_init__(self) -> None:
        if self.loop_start is not None and not 0 <= self.loop_start < len(self.valuations):
            raise ValueError("loop_start must index into the trace")

    @classmethod
    def finite(cls, model: Model) -> Trace:
        return cls(tuple(model.valuations))

    @classmethod
    def lasso(cls, prefix: Sequence[Valuation], cycle: Sequence[Valuation]) -> Trace:
        if not cycle:
            raise ValueError("A lasso needs a nonempty cycle")
        return cls(tuple(prefix) + tuple(cycle), len(prefix))


class _Evaluator:
    def __init__(self, trace: Trace, formula: Formula) -> None:
        self.trace = trace
        self.nodes = subformulas(formula)
        vals = trace.valuations
        if trace.loop_start is None:
            self.positions = list(vals)
            self.last_copy = None
        else:
            prefix = list(vals[: trace.loop_start])
            cycle = list(vals[trace.loop_start :])
            copies = len(self.nodes) + 2
            self.positions = prefix + cycle * copies
            self.last_copy = len(self.positions) - len(cycle)
        self.n = len(self.positions)
        self.values: dict[Formula, np.ndarray] = {}

    # -- position helpers

    def succ(self, i: int) -> int | None:
        if i + 1 < self.n:
            return i + 1
        return self.last_copy

    def shifted_index(self, i: int, j: int) -> int | None:
        t = i + j
        if t < 0:
            return None
        if t < self.n:
            return t
        if self.last_copy is None:
            return None
        period = self.n - self.last_copy
        return self.last_copy + (t - self.last_copy) % period

    def data(self, name: str, i: int) -> int:
        try:
            return self.positions[i].datas[name]
        except KeyError:
            raise ValueError(f"Valuation at position {i + 1} has no data value for {name!r}") from None

    # -- evaluation

    def run(self) -> None:
        for node in self.nodes:
            self.values[node] = self.compute(node)

    def compute(self, f: Formula) -> np.ndarray:
        n = self.n
        if isinstance(f, Const):
            return np.full(n, f.value, dtype=bool)
        if isinstance(f, BoolVar):
            try:
                return np.array([bool(p.bools[f.name]) for p in self.positions], dtype=bool)
            except KeyError:
                raise ValueError(f"Valuation has no boolean value for {f.name!r}") from None
        if isinstance(f, LocalEq):
            out = np.zeros(n, dtype=bool)
            for i in range(n):
                t = self.shifted_index(i, f.j)
                out[i] = t is not None and self.data(f.x, i) == self.data(f.y, t)
            return out
        if isinstance(f, Not):
            return ~self.values[f.arg]
        if isinstance(f, And):
            return self.values[f.left] & self.values[f.right]
        if isinstance(f, Or):
            return self.values[f.left] | self.values[f.right]
        if isinstance(f, Implies):
            return ~self.values[f.left] | self.values[f.right]
        if isinstance(f, (Next, WeakNext)):
            a = self.values[f.arg]
            out = np.empty(n, dtype=bool)
            for i in range(n):
                s = self.succ(i)
                out[i] = a[s] if s is not None else isinstance(f, WeakNext)
            return out
        if isinstance(f, (Prev, WeakPrev)):
            a = self.values[f.arg]
            out = np.empty(n, dtype=bool)
            out[0] = isinstance(f, WeakPrev)
            out[1:] = a[:-1]
            return out
        if isinstance(f, Once):
            return np.logical_or.accumulate(self.values[f.arg])
        if isinstance(f, Historically):
            return np.logical_and.accumulate(self.values[f.arg])
        if isinstance(f, (Since, Trigger)):
            a, b = self.values[f.left], self.values[f.right]
            out = np.empty(n, dtype=bool)
            out[0] = b[0]
            for i in range(1, n):
                if isinstance(f, Since):
                    out[i] = b[i] or (a[i] and out[i - 1])
                else:
                    out[i] = b[i] and (a[i] or out[i - 1])
            return out
        if isinstance(f, (Eventually, Always, Until, Release)):
            return self.future(f)
        if isinstance(f, Obligation):
            return self.past_obligation(f) if f.past else self.future_obligation(f)
        raise TypeError(f"Cannot evaluate {f!r}")

    def future(self, f: Formula) -> np.ndarray:
        if isinstance(f, Eventually):
            a, b, least = np.ones(self.n, dtype=bool), self.values[f.arg], True
        elif isinstance(f, Always):
            a, b, least = self.values[f.arg], np.zeros(self.n, dtype=bool), False
        elif isinstance(f, Until):
            a, b, least = self.values[f.left], self.values[f.right], True
        else:
            a, b, least = self.values[f.left], self.values[f.right], False

        always = isinstance(f, Always)

        def step(i: int, nxt: bool) -> bool:
            if least:
                return bool(b[i] or (a[i] and nxt))
            if always:
                return bool(a[i] and nxt)
            return bool(b[i] and (a[i] or nxt))

        out = np.zeros(self.n, dtype=bool)
        if self.last_copy is None:
            tail = not least
            for i in range(self.n - 1, -1, -1):
                out[i] = step(i, tail if i == self.n - 1 else out[i + 1])
            return out

        start = self.last_copy
        out[start:] = not least
        changed = True
        while changed:
            changed = False
            for i in range(self.n - 1, start - 1, -1):
                s = self.succ(i)
                v = step(i, bool(out[s]))
                if v != out[i]:
                    out[i] = v
                    changed = True
        for i in range(start - 1, -1, -1):
            out[i] = step(i, bool(out[i + 1]))
        return out

    def past_obligation(self, f: Obligation) -> np.ndarray:
        body = self.values[f.body]
        out = np.zeros(self.n, dtype=bool)
        seen: set[int] = set()
        for i in range(self.n):
            out[i] = _witness(seen, self.data(f.x, i), equal=isinstance(f, PastEq))
            if body[i]:
                seen.add(self.data(f.y, i))
        return out

    def future_obligation(self, f: Obligation) -> np.ndarray:
        body = self.values[f.body]
        out = np.zeros(self.n, dtype=bool)
        seen: set[int] = set()
        if self.last_copy is not None:
            seen = {self.data(f.y, k) for k in range(self.last_copy, self.n) if body[k]}
        for i in range(self.n - 1, -1, -1):
            out[i] = _witness(seen, self.data(f.x, i), equal=isinstance(f, FutEq))
            if body[i]:
                seen.add(self.data(f.y, i))
        return out


def _witness(seen: set[int], value: int, *, equal: bool) -> bool:
    if equal:
        return value in seen
    return len(seen) > 1 or (len(seen) == 1 and value not in seen)


# --------------------------------------------------------------------------- API


def truth_table(trace: Trace, f: Formula) -> np.ndarray:
    """Truth value of f at every position of a finite trace, or of the lasso's unrolling."""

    ev = _Evaluator(trace, f)
    ev.run()
    return ev.values[f]


def evaluate(model: Model, i: int, f: Formula) -> bool:
    """σ, i ⊨ f on a finite model (1-based position)."""

    if not 1 <= i <= len(model):
        raise ValueError(f"position {i} outside 1..{len(model)}")
    return bool(truth_table(Trace.finite(model), f)[i - 1])


def evaluate_lasso(prefix: Sequence[Valuation], cycle: Sequence[Valuation], f: Formula, *, i: int = 1) -> bool:
    """u·v^ω, i ⊨ f for a position i inside u·v."""

    trace = Trace.lasso(prefix, cycle)
    if not 1 <= i <= len(trace.valuations):
        raise ValueError(f"position {i} outside 1..{len(trace.valuations)}")
    return bool(truth_table(trace, f)[i - 1])


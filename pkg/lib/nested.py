"""Closure sets, consistency of formula sets and repetition histories.

Formula sets are explicit: a member ψ and its negation ¬ψ are both part of
the closure, and ¬¬ψ is identified with ψ.
"""

from __future__ import annotations

from collections.abc import Iterable
from itertools import combinations

from lib.formula import (
    TRUE,
    And,
    Formula,
    Historically,
    Implies,
    LocalEq,
    Not,
    Once,
    Or,
    Prev,
    Since,
    Trigger,
    WeakPrev,
    children,
)

HistoryElement = tuple[frozenset[str], frozenset[Formula]]
RepetitionHistory = frozenset[HistoryElement]
PastObligation = frozenset[tuple[str, Formula]]

_PAST_MEMORY = (Prev, WeakPrev, Since, Trigger, Once, Historically)


def negate(f: Formula) -> Formula:
    return f.arg if isinstance(f, Not) else Not(f)


def positive(f: Formula) -> Formula:
    while isinstance(f, Not):
        f = f.arg
    return f


def closure(phis: Iterable[Formula]) -> frozenset[Formula]:
    """cl(Φ): closed under Boolean and past subformulas and under negation."""

    out: set[Formula] = set()
    stack = [positive(f) for f in phis]
    while stack:
        f = stack.pop()
        if f in out:
            continue
        out.add(f)
        if isinstance(f, (And, Or, Implies, Not) + _PAST_MEMORY):
            stack.extend(positive(c) for c in children(f))
    return frozenset(out | {Not(f) for f in out})


def positive_members(cl: Iterable[Formula]) -> list[Formula]:
    """Non-negated closure members, children before parents, deterministic order."""

    members = {positive(f) for f in cl}
    order: list[Formula] = []
    seen: set[Formula] = set()

    def visit(f: Formula) -> None:
        if f in seen:
            return
        seen.add(f)
        if isinstance(f, (And, Or, Implies) + _PAST_MEMORY):
            for c in children(f):
                visit(positive(c))
        order.append(f)

    for f in sorted(members, key=str):
        visit(f)
    return order


def complete(true_positives: Iterable[Formula], cl: frozenset[Formula]) -> frozenset[Formula]:
    """Explicit set from the positive members that hold."""

    pos = set(true_positives)
    out = set(pos)
    for f in cl:
        if not isinstance(f, Not) and f not in pos:
            out.add(Not(f))
    return frozenset(out)


def holds(f: Formula, s: frozenset[Formula]) -> bool:
    """Membership, reading ¬ψ as 'ψ absent' for members stored positively."""

    if isinstance(f, Not):
        return not holds(f.arg, s)
    return f in s


def boolean_consistent(s: frozenset[Formula], cl: frozenset[Formula]) -> bool:
    if TRUE not in s:
        return False
    for f in cl:
        if isinstance(f, And) and (f in s) != (holds(f.left, s) and holds(f.right, s)):
            return False
        if isinstance(f, Or) and (f in s) != (holds(f.left, s) or holds(f.right, s)):
            return False
        if isinstance(f, Implies) and (f in s) != ((not holds(f.left, s)) or holds(f.right, s)):
            return False
        if isinstance(f, Not) and (f in s) == (f.arg in s):
            return False
    return True


def one_step_consistent_sets(s1: frozenset[Formula], s2: frozenset[Formula], cl: frozenset[Formula]) -> bool:
    """s1 holds at some position and s2 at the next one."""

    for f in cl:
        if isinstance(f, (Prev, WeakPrev)) and (f in s2) != holds(f.arg, s1):
            return False
        if isinstance(f, Since):
            want = holds(f.right, s2) or (holds(f.left, s2) and f in s1)
            if (f in s2) != want:
                return False
        if isinstance(f, Trigger):
            want = holds(f.right, s2) and (holds(f.left, s2) or f in s1)
            if (f in s2) != want:
                return False
        if isinstance(f, Once) and (f in s2) != (holds(f.arg, s2) or f in s1):
            return False
        if isinstance(f, Historically) and (f in s2) != (holds(f.arg, s2) and f in s1):
            return False
    return True


def initially_consistent_set(s: frozenset[Formula], cl: frozenset[Formula]) -> bool:
    """s can hold at position 1."""

    if not boolean_consistent(s, cl):
        return False
    for f in cl:
        if isinstance(f, Prev) and f in s:
            return False
        if isinstance(f, WeakPrev) and f not in s:
            return False
        if isinstance(f, (Since, Trigger)) and (f in s) != holds(f.right, s):
            return False
        if isinstance(f, (Once, Historically)) and (f in s) != holds(f.arg, s):
            return False
        # nothing precedes position 1
        if isinstance(f, LocalEq) and f.j < 0 and f in s:
            return False
    return True


def cover(h: RepetitionHistory) -> PastObligation:
    return frozenset((x, psi) for (vs, phis) in h for x in vs for psi in phis)


def matches(h: RepetitionHistory, o: PastObligation) -> bool:
    """Whether some m: O -> H sends every (x, ψ) to an element containing both,
    with every element of H fully used by O."""

    elements = sorted(h, key=lambda el: (sorted(el[0]), sorted(map(str, el[1]))))
    for vs, phis in elements:
        for x in vs:
            for psi in phis:
                if (x, psi) not in o:
                    return False
    # each obligation needs an image; the choice for one never constrains another
    for x, psi in o:
        if not any(x in vs and psi in phis for vs, phis in elements):
            return False
    return True


def history_universe(dvars: Iterable[str], phis: Iterable[Formula]) -> list[HistoryElement]:
    """Elements (V', Φ') that a past position can contribute: V' nonempty, ⊤ ∈ Φ'."""

    dv = sorted(dvars)
    rest = sorted((p for p in phis if p != TRUE), key=str)
    var_sets = [frozenset(c) for r in range(1, len(dv) + 1) for c in combinations(dv, r)]
    phi_sets = [frozenset((TRUE, *c)) for r in range(len(rest) + 1) for c in combinations(rest, r)]
    return [(v, p) for v in var_sets for p in phi_sets]


def format_history(h: RepetitionHistory) -> str:
    parts = sorted(
        f"({','.join(sorted(vs))}|{','.join(sorted(str(p) for p in phis))})" for vs, phis in h
    )
    return "{" + ";".join(parts) + "}"

"""Normalizing rewrites applied before the reduction to VASS games."""

from __future__ import annotations

import logging

from lib.errors import ContractViolation, UnsupportedFragmentError
from lib.formula import (
    TRUE,
    Always,
    And,
    BoolVar,
    Const,
    Eventually,
    Formula,
    FutEq,
    FutNeq,
    Historically,
    Implies,
    LocalEq,
    Next,
    Not,
    Obligation,
    Once,
    Or,
    PastEq,
    PastNeq,
    Prev,
    Release,
    Signature,
    Since,
    Trigger,
    Until,
    WeakNext,
    WeakPrev,
    children,
    neg,
    prev_n,
    rebuild,
    subformulas,
)

logger = logging.getLogger(__name__)

_DUAL_UNARY = {
    Next: WeakNext,
    WeakNext: Next,
    Prev: WeakPrev,
    WeakPrev: Prev,
    Eventually: Always,
    Always: Eventually,
    Once: Historically,
    Historically: Once,
}
_DUAL_BINARY = {Until: Release, Release: Until, Since: Trigger, Trigger: Since}


def normalize_local(f: Formula) -> Formula:
    """Rewrite x ≈ X^-j y as Y^j (y ≈ X^j x) so local tests only look forward.

    Obligation bodies are left alone: nested formulas keep their backward
    tests, which the nested frames evaluate directly.
    """

    if isinstance(f, LocalEq):
        if f.j < 0:
            return prev_n(LocalEq(f.y, -f.j, f.x), -f.j)
        return f
    if isinstance(f, Obligation):
        return f
    kids = children(f)
    if not kids:
        return f
    return rebuild(f, [normalize_local(c) for c in kids])


def to_nnf(f: Formula) -> Formula:
    """Push negations down to atoms, introducing the dual temporal operators."""

    if isinstance(f, (Const, BoolVar, LocalEq)):
        return f
    if isinstance(f, Obligation):
        return type(f)(f.x, f.y, to_nnf(f.body))
    if isinstance(f, Implies):
        return Or(_negated(f.left), to_nnf(f.right))
    if isinstance(f, Not):
        return _negated(f.arg)
    kids = children(f)
    return rebuild(f, [to_nnf(c) for c in kids])


def _negated(f: Formula) -> Formula:
    """NNF of ¬f."""

    if isinstance(f, Const):
        return neg(f)
    if isinstance(f, (BoolVar, LocalEq)):
        return Not(f)
    if isinstance(f, Obligation):
        return Not(type(f)(f.x, f.y, to_nnf(f.body)))
    if isinstance(f, Not):
        return to_nnf(f.arg)
    if isinstance(f, And):
        return Or(_negated(f.left), _negated(f.right))
    if isinstance(f, Or):
        return And(_negated(f.left), _negated(f.right))
    if isinstance(f, Implies):
        return And(to_nnf(f.left), _negated(f.right))
    if type(f) in _DUAL_UNARY:
        return _DUAL_UNARY[type(f)](_negated(f.arg))
    if type(f) in _DUAL_BINARY:
        return _DUAL_BINARY[type(f)](_negated(f.left), _negated(f.right))
    raise TypeError(f"Cannot negate {f!r}")


def remove_disequalities(f: Formula, sig: Signature) -> tuple[Signature, Formula]:
    """Eliminate past disequality obligations from a formula in NNF.

    A negated ⟨x ≉ ◇⁻¹ y⟩ says every earlier y equals the current x; it is
    expressed with local tests. A positive one is witnessed by a fresh data
    variable of x's owner that must differ from x and repeat some earlier y.
    """

    for g in subformulas(f):
        if isinstance(g, (FutEq, FutNeq)):
            raise UnsupportedFragmentError("future obligations cannot be removed", g)
        if isinstance(g, PastNeq) and g.body != TRUE:
            raise UnsupportedFragmentError("disequality obligations need the nested formula true", g)

    fresh: dict[tuple[str, str], str] = {}
    new_sig = sig

    def witness(x: str, y: str) -> str:
        nonlocal new_sig
        if (x, y) not in fresh:
            base = f"{x}__neq_past__{y}"
            name, n = base, 1
            while name in new_sig.names:
                n += 1
                name = f"{base}{n}"
            new_sig = new_sig.with_data(name, owner=sig.owner(x))
            fresh[(x, y)] = name
            logger.debug("Introduced %s (owner %s) for D-(%s, %s; true)", name, sig.owner(x), x, y)
        return fresh[(x, y)]

    def rewrite(g: Formula) -> Formula:
        if isinstance(g, Not) and isinstance(g.arg, PastNeq):
            x, y = g.arg.x, g.arg.y
            first = Not(Prev(TRUE))
            constant = Historically(Or(first, LocalEq(y, -1, y)))
            return Or(first, And(LocalEq(x, -1, y), Prev(constant)))
        if isinstance(g, PastNeq):
            w = witness(g.x, g.y)
            return And(Not(LocalEq(g.x, 0, w)), PastEq(w, g.y, TRUE))
        if isinstance(g, Obligation):
            return g
        kids = children(g)
        if not kids:
            return g
        return rebuild(g, [rewrite(c) for c in kids])

    out = normalize_local(rewrite(f))
    if fresh:
        logger.info("Removed disequalities with %d fresh variable(s)", len(fresh))
    return new_sig, out


def x_length(f: Formula) -> int:
    """Largest look-ahead of a local test; backward tests inside nested formulas count by distance."""

    best = 0
    for g in subformulas(f):
        if isinstance(g, LocalEq):
            if g.j < 0 and not _inside_body(f, g):
                raise ContractViolation(f"{g} has a negative offset; apply normalize_local first")
            best = max(best, abs(g.j))
    return best


def _inside_body(root: Formula, target: Formula) -> bool:
    """Whether every occurrence of target sits inside some obligation body."""

    def visit(g: Formula, in_body: bool) -> bool:
        if g == target:
            return in_body
        if isinstance(g, Obligation):
            return visit(g.body, True)
        return all(visit(c, in_body) for c in children(g))

    return visit(root, False)


def check_single_sided(sig: Signature) -> bool:
    return not sig.env_datas and not sig.sys_bools

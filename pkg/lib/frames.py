"""Frames: finite abstractions of l+1 consecutive positions.

A frame is stored as its constraint set (omega) plus, in nested mode, the
formula sets per level (phi_fr) and the repetition histories per cell
(h_fr). Internally frames are generated from a compact layout: the
partition of the cells (level, variable) into equal-value classes, the
booleans per level, the past obligations per cell and, in nested mode, the
positive formula sets and the histories. Every valid frame has exactly one
layout, and the layout is all the enumeration and the reduction need.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from itertools import chain, combinations, product

import pandas as pd

from lib.errors import ContractViolation, UnsupportedFragmentError
from lib.formula import (
    TRUE,
    And,
    BoolVar,
    Const,
    Formula,
    Historically,
    Implies,
    LocalEq,
    Model,
    Not,
    Obligation,
    Once,
    Or,
    PastEq,
    Prev,
    Signature,
    Since,
    Trigger,
    WeakPrev,
    subformulas,
    variables,
)
from lib.nested import (
    PastObligation,
    RepetitionHistory,
    boolean_consistent,
    closure,
    complete,
    cover,
    format_history,
    history_universe,
    initially_consistent_set,
    matches,
    one_step_consistent_sets,
    positive_members,
)
from lib.rewrites import x_length
from lib.semantics import Trace, truth_table

logger = logging.getLogger(__name__)

SIMPLE = "simple"
NESTED = "nested"


# --------------------------------------------------------------------------- context


@dataclass(frozen=True)
class FrameContext:
    dvars: tuple[str, ...]
    bvars: tuple[str, ...]
    nested: tuple[Formula, ...] = (TRUE,)
    l: int = 0
    mode: str = SIMPLE

    def __post_init__(self) -> None:
        if self.l < 0:
            raise ValueError("X-length must be non-negative")
        if TRUE not in self.nested:
            raise ValueError("The nested formula set always contains true")
        if self.mode == SIMPLE and tuple(self.nested) != (TRUE,):
            raise ValueError("Simple mode only allows the nested formula true")
        if self.mode not in {SIMPLE, NESTED}:
            raise ValueError(f"Unknown frame mode {self.mode!r}")

    @classmethod
    def for_formula(cls, f: Formula, sig: Signature | None = None, *, mode: str | None = None) -> FrameContext:
        names = variables(f)
        if sig is not None:
            dvars = tuple(sorted(n for n in names if n in sig.datas))
            bvars = tuple(sorted(n for n in names if n in sig.bools))
        else:
            dvars = tuple(sorted({n for g in subformulas(f) for n in _data_names(g)}))
            bvars = tuple(sorted({g.name for g in subformulas(f) if isinstance(g, BoolVar)}))
        bodies = {g.body for g in subformulas(f) if isinstance(g, Obligation)}
        for body in bodies:
            for g in subformulas(body):
                if isinstance(g, LocalEq) and g.j > 0:
                    raise UnsupportedFragmentError("forward local test inside a nested formula", g)
        nested = (TRUE, *sorted(bodies - {TRUE}, key=str))
        if mode is None:
            mode = SIMPLE if nested == (TRUE,) else NESTED
        return cls(dvars=dvars, bvars=bvars, nested=nested, l=x_length(f), mode=mode)

    @cached_property
    def closure(self) -> frozenset[Formula]:
        return closure(self.nested) if self.mode == NESTED else frozenset()

    @cached_property
    def members(self) -> tuple[Formula, ...]:
        return tuple(positive_members(self.closure)) if self.mode == NESTED else ()

    @cached_property
    def history_elements(self) -> tuple:
        return tuple(history_universe(self.dvars, self.nested))

    @cached_property
    def nested_set(self) -> frozenset[Formula]:
        return frozenset(self.nested)


def _data_names(g: Formula) -> tuple[str, ...]:
    if isinstance(g, (LocalEq, Obligation)):
        return (g.x, g.y)
    return ()


# --------------------------------------------------------------------------- constraints


@dataclass(frozen=True)
class BoolAt:
    i: int
    q: str

    def __str__(self) -> str:
        return f"X^{self.i} {self.q}"


@dataclass(frozen=True)
class EqAt:
    i: int
    x: str
    j: int
    y: str

    def __str__(self) -> str:
        return f"X^{self.i} {self.x} = X^{self.j} {self.y}"


@dataclass(frozen=True)
class OblAt:
    i: int
    x: str
    y: str
    psi: Formula = TRUE

    def __str__(self) -> str:
        return f"X^{self.i} <{self.x} = <>^-1 {self.y} ? {self.psi}>"


Constraint = BoolAt | EqAt | OblAt


def constraint_key(c: Constraint) -> tuple:
    if isinstance(c, BoolAt):
        return (0, c.i, c.q, 0, "", "")
    if isinstance(c, EqAt):
        return (1, c.i, c.x, c.j, c.y, "")
    return (2, c.i, c.x, 0, c.y, str(c.psi))


def constraint_universe(ctx: FrameContext) -> list[Constraint]:
    levels = range(ctx.l + 1)
    out: list[Constraint] = [BoolAt(i, q) for i in levels for q in ctx.bvars]
    out += [EqAt(i, x, j, y) for i in levels for x in ctx.dvars for j in levels for y in ctx.dvars]
    out += [OblAt(i, x, y, psi) for i in levels for x in ctx.dvars for y in ctx.dvars for psi in ctx.nested]
    return sorted(out, key=constraint_key)


# --------------------------------------------------------------------------- layouts


@dataclass(frozen=True)
class _Layout:
    classes: tuple[tuple[int, ...], ...] = ()
    bools: tuple[frozenset[str], ...] = ()
    po: tuple[tuple[PastObligation, ...], ...] = ()
    phi: tuple[frozenset[Formula], ...] = ()
    hist: tuple[tuple[RepetitionHistory, ...], ...] = ()

    @property
    def levels(self) -> int:
        return len(self.classes)

    def canonical(self) -> _Layout:
        mapping: dict[int, int] = {}
        for row in self.classes:
            for cid in row:
                if cid not in mapping:
                    mapping[cid] = len(mapping)
        return _Layout(
            classes=tuple(tuple(mapping[c] for c in row) for row in self.classes),
            bools=self.bools,
            po=self.po,
            phi=self.phi,
            hist=self.hist,
        )

    def drop_first(self) -> _Layout:
        return _Layout(
            classes=self.classes[1:],
            bools=self.bools[1:],
            po=self.po[1:],
            phi=self.phi[1:],
            hist=self.hist[1:],
        ).canonical()


_EMPTY = _Layout()


# --------------------------------------------------------------------------- frames


@dataclass(frozen=True)
class Frame:
    e: int
    omega: frozenset = frozenset()
    phi_fr: tuple[frozenset[Formula], ...] = ()
    h_fr: tuple[tuple[str, int, RepetitionHistory], ...] = ()
    layout: _Layout | None = field(default=None, compare=False, hash=False, repr=False)

    @property
    def is_bottom(self) -> bool:
        return self.e == -1

    def history(self, x: str, i: int) -> RepetitionHistory:
        for name, level, h in self.h_fr:
            if name == x and level == i:
                return h
        return frozenset()

    def restricted(self, up_to: int) -> frozenset:
        return frozenset(c for c in self.omega if _max_index(c) <= up_to)


BOTTOM = Frame(e=-1)


def _max_index(c: Constraint) -> int:
    return max(c.i, c.j) if isinstance(c, EqAt) else c.i


def _frame_from_layout(ctx: FrameContext, lay: _Layout) -> Frame:
    omega: set[Constraint] = set()
    levels = lay.levels
    for t in range(levels):
        for q in lay.bools[t]:
            omega.add(BoolAt(t, q))
        for k, x in enumerate(ctx.dvars):
            for (y, psi) in lay.po[t][k]:
                omega.add(OblAt(t, x, y, psi))
            cid = lay.classes[t][k]
            for s in range(levels):
                for m, y in enumerate(ctx.dvars):
                    if lay.classes[s][m] == cid:
                        omega.add(EqAt(t, x, s, y))
    phi_fr: tuple[frozenset[Formula], ...] = ()
    h_fr: tuple = ()
    if ctx.mode == NESTED:
        phi_fr = tuple(complete(p, ctx.closure) for p in lay.phi)
        h_fr = tuple(
            sorted(((x, t, lay.hist[t][k]) for k, x in enumerate(ctx.dvars) for t in range(levels)), key=lambda it: it[:2])
        )
    return Frame(e=levels - 1, omega=frozenset(omega), phi_fr=phi_fr, h_fr=h_fr, layout=lay)


def layout_of(ctx: FrameContext, fr: Frame) -> _Layout:
    """Layout of a frame; frames built by this module carry it already."""

    if fr.layout is not None:
        return fr.layout
    if fr.is_bottom:
        return _EMPTY
    levels = fr.e + 1
    raw: dict[tuple[int, int], int] = {}
    classes = []
    for t in range(levels):
        row = []
        for k, x in enumerate(ctx.dvars):
            cid = None
            for (s, m), c in raw.items():
                if EqAt(t, x, s, ctx.dvars[m]) in fr.omega:
                    cid = c
                    break
            if cid is None:
                cid = len(set(raw.values()))
            raw[(t, k)] = cid
            row.append(cid)
        classes.append(tuple(row))
    bools = tuple(frozenset(q for q in ctx.bvars if BoolAt(t, q) in fr.omega) for t in range(levels))
    po = tuple(
        tuple(
            frozenset((c.y, c.psi) for c in fr.omega if isinstance(c, OblAt) and c.i == t and c.x == x)
            for x in ctx.dvars
        )
        for t in range(levels)
    )
    phi: tuple = ()
    hist: tuple = ()
    if ctx.mode == NESTED:
        phi = tuple(frozenset(f for f in ctx.members if f in s) for s in fr.phi_fr)
        hist = tuple(tuple(fr.history(x, t) for x in ctx.dvars) for t in range(levels))
    return _Layout(tuple(classes), bools, po, phi, hist).canonical()


def format_frame(fr: Frame) -> str:
    """Canonical text: sorted constraints, then formula sets and histories."""

    if fr.is_bottom:
        return "bottom"
    lines = [f"level {fr.e}"]
    lines += [str(c) for c in sorted(fr.omega, key=constraint_key)]
    for t, s in enumerate(fr.phi_fr):
        pos = sorted(str(f) for f in s if not isinstance(f, Not))
        lines.append(f"phi[{t}] = {{{', '.join(pos)}}}")
    for x, t, h in fr.h_fr:
        lines.append(f"H({x},{t}) = {format_history(h)}")
    return "\n".join(lines)


# --------------------------------------------------------------------------- extension


def _subsets(items: Sequence) -> list[frozenset]:
    return [frozenset(c) for r in range(len(items) + 1) for c in combinations(items, r)]


def _class_assignments(existing: list[int], count: int, next_id: int) -> Iterator[tuple[int, ...]]:
    def rec(k: int, fresh_used: int, acc: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if k == count:
            yield acc
            return
        for cid in existing:
            yield from rec(k + 1, fresh_used, acc + (cid,))
        for m in range(fresh_used):
            yield from rec(k + 1, fresh_used, acc + (next_id + m,))
        yield from rec(k + 1, fresh_used + 1, acc + (next_id + fresh_used,))

    yield from rec(0, 0, ())


def _derive_phi(
    ctx: FrameContext,
    lay: _Layout,
    t: int,
    row: tuple[int, ...],
    bools: frozenset[str],
    po_row: tuple[PastObligation, ...],
    prev_phi: frozenset[Formula] | None,
    *,
    at_start: bool,
) -> Iterator[frozenset[Formula]]:
    """Positive closure members true at new level t.

    Members whose value is not fixed by the frame are branched on, unless the
    window starts at position 1, where they take their initial values.
    """

    index = {x: k for k, x in enumerate(ctx.dvars)}
    fixed: dict[Formula, bool] = {}
    free: list[Formula] = []

    def value(f: Formula, vals: dict[Formula, bool]) -> bool:
        if isinstance(f, Not):
            return not value(f.arg, vals)
        return vals[f]

    order = ctx.members
    for f in order:
        if isinstance(f, Const):
            fixed[f] = f.value
        elif isinstance(f, BoolVar):
            fixed[f] = f.name in bools
        elif isinstance(f, PastEq):
            fixed[f] = (f.y, f.body) in po_row[index[f.x]]
        elif isinstance(f, LocalEq):
            d = -f.j
            if t - d >= 0:
                other = row if d == 0 else lay.classes[t - d]
                fixed[f] = row[index[f.x]] == other[index[f.y]]
            elif at_start:
                fixed[f] = False
            else:
                free.append(f)
        elif isinstance(f, (Prev, WeakPrev, Since, Trigger, Once, Historically)) and prev_phi is None:
            if not at_start:
                free.append(f)
        elif not isinstance(f, (And, Or, Implies, Prev, WeakPrev, Since, Trigger, Once, Historically)):
            raise UnsupportedFragmentError("operator not allowed in nested formulas", f)

    for bits in product((False, True), repeat=len(free)):
        vals = dict(fixed)
        vals.update(zip(free, bits))
        for f in order:
            if f in vals:
                continue
            if isinstance(f, And):
                vals[f] = value(f.left, vals) and value(f.right, vals)
            elif isinstance(f, Or):
                vals[f] = value(f.left, vals) or value(f.right, vals)
            elif isinstance(f, Implies):
                vals[f] = (not value(f.left, vals)) or value(f.right, vals)
            elif prev_phi is None:
                # position 1
                if isinstance(f, Prev):
                    vals[f] = False
                elif isinstance(f, WeakPrev):
                    vals[f] = True
                elif isinstance(f, (Since, Trigger)):
                    vals[f] = value(f.right, vals)
                else:
                    vals[f] = value(f.arg, vals)
            else:
                before = _holds_positive(prev_phi)
                if isinstance(f, (Prev, WeakPrev)):
                    vals[f] = before(f.arg)
                elif isinstance(f, Since):
                    vals[f] = value(f.right, vals) or (value(f.left, vals) and before(f))
                elif isinstance(f, Trigger):
                    vals[f] = value(f.right, vals) and (value(f.left, vals) or before(f))
                elif isinstance(f, Once):
                    vals[f] = value(f.arg, vals) or before(f)
                else:
                    vals[f] = value(f.arg, vals) and before(f)
        yield frozenset(f for f in order if vals[f])


def _holds_positive(pos: frozenset[Formula]):
    def check(f: Formula) -> bool:
        if isinstance(f, Not):
            return not check(f.arg)
        return f in pos

    return check


def _extend(
    ctx: FrameContext,
    lay: _Layout,
    v: frozenset[str] | None,
    prev_phi: frozenset[Formula] | None,
    *,
    at_start: bool,
) -> Iterator[_Layout]:
    t = lay.levels
    nd = len(ctx.dvars)
    nested = ctx.mode == NESTED
    existing = sorted({c for row in lay.classes for c in row})
    next_id = (max(existing) + 1) if existing else 0
    bool_choices = [frozenset(v)] if v is not None else _subsets(ctx.bvars)
    all_po = [frozenset((y, TRUE) for y in s) for s in _subsets(ctx.dvars)]
    all_hist = [frozenset(h) for h in _subsets(ctx.history_elements)] if nested else []

    for row in _class_assignments(existing, nd, next_id):
        groups: dict[int, list[int]] = {}
        for k, cid in enumerate(row):
            groups.setdefault(cid, []).append(k)
        options: list[list[tuple[PastObligation, RepetitionHistory]]] = []
        for cid, members in groups.items():
            last = max((s for s in range(t) if cid in lay.classes[s]), default=None)
            if last is None:
                if nested:
                    options.append([(cover(h), h) for h in all_hist])
                else:
                    options.append([(po, frozenset()) for po in all_po])
                continue
            k0 = lay.classes[last].index(cid)
            vars_there = frozenset(ctx.dvars[m] for m, c in enumerate(lay.classes[last]) if c == cid)
            if nested:
                h = lay.hist[last][k0] | {(vars_there, lay.phi[last] & ctx.nested_set)}
                options.append([(cover(h), h)])
            else:
                options.append([(lay.po[last][k0] | {(y, TRUE) for y in vars_there}, frozenset())])
        cids = list(groups)
        for combo in product(*options):
            po_row = [frozenset()] * nd
            hist_row = [frozenset()] * nd
            for cid, (po, h) in zip(cids, combo):
                for k in groups[cid]:
                    po_row[k] = po
                    hist_row[k] = h
            po_t = tuple(po_row)
            for bools in bool_choices:
                phis = (
                    _derive_phi(ctx, lay, t, row, bools, po_t, prev_phi, at_start=at_start)
                    if nested
                    else [None]
                )
                for phi_t in phis:
                    yield _Layout(
                        classes=lay.classes + (row,),
                        bools=lay.bools + (bools,),
                        po=lay.po + (po_t,),
                        phi=lay.phi + ((phi_t,) if nested else ()),
                        hist=lay.hist + ((tuple(hist_row),) if nested else ()),
                    ).canonical()


def successors(ctx: FrameContext, fr: Frame, v: frozenset[str] | None = None) -> list[Frame]:
    """Frames fr' with (fr, fr') one-step consistent whose newest booleans are v (any when None)."""

    lay = layout_of(ctx, fr)
    prev_phi = lay.phi[-1] if (ctx.mode == NESTED and lay.levels) else None
    if fr.e < ctx.l:
        base, at_start = lay, True
    else:
        base, at_start = lay.drop_first(), False
    return [_frame_from_layout(ctx, new) for new in _extend(ctx, base, v, prev_phi, at_start=at_start)]


def enumerate_frames(ctx: FrameContext, e: int) -> Iterator[Frame]:
    """All valid (e, φ)-frames, each once, in a deterministic order."""

    if not 0 <= e <= ctx.l:
        raise ValueError(f"level {e} outside 0..{ctx.l}")
    layouts: list[_Layout] = [_EMPTY]
    for _ in range(e + 1):
        nxt: dict[_Layout, None] = {}
        for lay in layouts:
            prev_phi = lay.phi[-1] if (ctx.mode == NESTED and lay.levels) else None
            for new in _extend(ctx, lay, None, prev_phi, at_start=False):
                nxt.setdefault(new, None)
        layouts = list(nxt)
    for lay in layouts:
        yield _frame_from_layout(ctx, lay)


def frame_counts(ctx: FrameContext) -> pd.DataFrame:
    rows = [{"level": e, "frames": sum(1 for _ in enumerate_frames(ctx, e))} for e in range(ctx.l + 1)]
    return pd.DataFrame(rows, columns=["level", "frames"])


# --------------------------------------------------------------------------- validity


@dataclass(frozen=True)
class FrameCheck:
    ok: bool
    condition: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _fail(condition: str, detail: str) -> FrameCheck:
    return FrameCheck(False, condition, detail)


def is_valid_frame(ctx: FrameContext, fr: Frame) -> FrameCheck:
    """Check the equality conditions, plus histories and formula sets in nested mode; report the first violation."""

    if not 0 <= fr.e <= ctx.l:
        raise ContractViolation(f"frame level {fr.e} outside 0..{ctx.l}")
    e = fr.e
    levels = range(e + 1)
    om = fr.omega
    nested = ctx.mode == NESTED
    universe = set(constraint_universe(ctx))

    for c in om:
        if c not in universe or _max_index(c) > e:
            return _fail("level-range", f"{c} outside the level range")
    for i in levels:
        for x in ctx.dvars:
            if EqAt(i, x, i, x) not in om:
                return _fail("reflexive", f"missing X^{i} {x} = X^{i} {x}")
    eqs = [c for c in om if isinstance(c, EqAt)]
    for c in eqs:
        if EqAt(c.j, c.y, c.i, c.x) not in om:
            return _fail("symmetric", f"{c} without its mirror")
    for a in eqs:
        for b in eqs:
            if (a.j, a.y) == (b.i, b.x) and EqAt(a.i, a.x, b.j, b.y) not in om:
                return _fail("transitive", f"{a} and {b} without transitivity")

    def po(x: str, i: int) -> frozenset[tuple[str, Formula]]:
        return frozenset((c.y, c.psi) for c in om if isinstance(c, OblAt) and c.i == i and c.x == x)

    def phi_nested(i: int) -> frozenset[Formula]:
        if not nested:
            return frozenset({TRUE})
        return frozenset(f for f in fr.phi_fr[i] if f in ctx.nested_set)

    if nested and len(fr.phi_fr) != e + 1:
        return _fail("formula-sets", "formula sets missing for some level")

    for c in eqs:
        i, x, j, y = c.i, c.x, c.j, c.y
        if i == j:
            if po(x, i) != po(y, j):
                return _fail("past-obligations", f"{c} but different past obligations")
        elif i < j:
            need = {(x, psi) for psi in phi_nested(i)}
            if not need <= po(y, j):
                return _fail("past-obligations", f"{c} but X^{j} <{y} = <>^-1 {x}> missing")
            expected = set(po(x, i))
            for jp in range(i, j):
                for z in ctx.dvars:
                    if EqAt(j, y, jp, z) in om:
                        expected |= {(z, psi) for psi in phi_nested(jp)}
            if po(y, j) != expected:
                return _fail("past-obligations", f"{c} but past obligations of ({y},{j}) not inherited")

    if not nested:
        return FrameCheck(True)

    def eq_class(x: str, i: int) -> frozenset[str]:
        return frozenset(z for z in ctx.dvars if EqAt(i, x, i, z) in om)

    for c in eqs:
        i, x, j, y = c.i, c.x, c.j, c.y
        if i == j and fr.history(x, i) != fr.history(y, j):
            return _fail("history-extension", f"{c} but different histories")
        if i < j:
            between = any(EqAt(i, x, jp, z) in om for jp in range(i + 1, j) for z in ctx.dvars)
            if not between:
                expected = fr.history(x, i) | {(eq_class(x, i), phi_nested(i))}
                if fr.history(y, j) != expected:
                    return _fail("history-extension", f"{c} but H({y},{j}) does not extend H({x},{i})")
    for i in levels:
        for x in ctx.dvars:
            if not matches(fr.history(x, i), po(x, i)):
                return _fail("history-match", f"H({x},{i}) does not match PO({x},{i})")
    cl = ctx.closure
    for i in levels:
        s = fr.phi_fr[i]
        for f in cl:
            if isinstance(f, Not):
                continue
            target = _prev_chain(f)
            if target is None:
                continue
            depth, atom = target
            if isinstance(atom, BoolVar) and i - depth >= 0:
                if (f in s) != (BoolAt(i - depth, atom.name) in om):
                    return _fail("boolean-past", f"{f} at level {i}")
            if isinstance(atom, PastEq) and i - depth >= 0:
                if (f in s) != (OblAt(i - depth, atom.x, atom.y, atom.body) in om):
                    return _fail("obligation-past", f"{f} at level {i}")
            if isinstance(atom, LocalEq) and i - depth + atom.j >= 0:
                if (f in s) != (EqAt(i - depth, atom.x, i - depth + atom.j, atom.y) in om):
                    return _fail("local-past", f"{f} at level {i}")
        if not boolean_consistent(s, cl):
            return _fail("formula-sets", f"formula set at level {i} is not Boolean consistent")
        if i < e and not one_step_consistent_sets(s, fr.phi_fr[i + 1], cl):
            return _fail("formula-sets", f"formula sets at levels {i},{i + 1} are not one-step consistent")
    return FrameCheck(True)


def _prev_chain(f: Formula) -> tuple[int, Formula] | None:
    depth = 0
    while isinstance(f, Prev):
        depth += 1
        f = f.arg
    if isinstance(f, (BoolVar, PastEq, LocalEq)):
        return depth, f
    return None


# --------------------------------------------------------------------------- consistency


def initially_consistent(ctx: FrameContext, fr: Frame) -> bool:
    if ctx.mode != NESTED:
        return True
    if fr.is_bottom or not fr.phi_fr:
        raise ContractViolation("initial consistency needs a frame with formula sets")
    return initially_consistent_set(fr.phi_fr[0], ctx.closure)


def one_step_consistent(ctx: FrameContext, fr: Frame, nxt: Frame) -> bool:
    l = ctx.l
    nested = ctx.mode == NESTED
    if fr.e == -1 and nxt.e == 0:
        if not nested:
            return True
        return initially_consistent(ctx, nxt) and not _reaches_before_start(ctx, nxt, 0)
    if 0 <= fr.e < l and nxt.e == fr.e + 1:
        e = fr.e
        if fr.omega != nxt.restricted(e):
            return False
        if not nested:
            return True
        for i in range(e + 1):
            if fr.phi_fr[i] != nxt.phi_fr[i]:
                return False
            if any(fr.history(x, i) != nxt.history(x, i) for x in ctx.dvars):
                return False
        if not one_step_consistent_sets(fr.phi_fr[e], nxt.phi_fr[e + 1], ctx.closure):
            return False
        return not _reaches_before_start(ctx, nxt, e + 1)
    if fr.e == l and nxt.e == l:
        for c in fr.omega:
            lo = min(c.i, c.j) if isinstance(c, EqAt) else c.i
            if lo > 0 and _shift(c) not in nxt.omega:
                return False
        for c in nxt.omega:
            if _max_index(c) < l and _unshift(c) not in fr.omega:
                return False
        if not nested:
            return True
        for i in range(1, l + 1):
            if fr.phi_fr[i] != nxt.phi_fr[i - 1]:
                return False
            if any(fr.history(x, i) != nxt.history(x, i - 1) for x in ctx.dvars):
                return False
        cl = ctx.closure
        return one_step_consistent_sets(fr.phi_fr[0], nxt.phi_fr[0], cl) and one_step_consistent_sets(
            fr.phi_fr[l], nxt.phi_fr[l], cl
        )
    raise ContractViolation(f"no one-step consistency for levels ({fr.e}, {nxt.e})")


def _reaches_before_start(ctx: FrameContext, fr: Frame, t: int) -> bool:
    s = fr.phi_fr[t]
    return any(isinstance(f, LocalEq) and f.j < 0 and t + f.j < 0 and f in s for f in ctx.closure)


def _shift(c: Constraint) -> Constraint:
    if isinstance(c, BoolAt):
        return BoolAt(c.i - 1, c.q)
    if isinstance(c, EqAt):
        return EqAt(c.i - 1, c.x, c.j - 1, c.y)
    return OblAt(c.i - 1, c.x, c.y, c.psi)


def _unshift(c: Constraint) -> Constraint:
    if isinstance(c, BoolAt):
        return BoolAt(c.i + 1, c.q)
    if isinstance(c, EqAt):
        return EqAt(c.i + 1, c.x, c.j + 1, c.y)
    return OblAt(c.i + 1, c.x, c.y, c.psi)


# --------------------------------------------------------------------------- extraction


def frame_extract(model: Model, j: int, ctx: FrameContext) -> Frame:
    """The frame anchored at max(1, j-l) covering positions up to j."""

    if not 1 <= j <= len(model):
        raise ValueError(f"position {j} outside 1..{len(model)}")
    return _extract(model, j, ctx, _Tables(model, ctx))


class _Tables:
    """Truth tables of obligations and nested formulas, shared across anchors."""

    def __init__(self, model: Model, ctx: FrameContext) -> None:
        self.model = model
        trace = Trace.finite(model)
        self.obl: dict[tuple[str, str, Formula], object] = {}
        for x in ctx.dvars:
            for y in ctx.dvars:
                for psi in ctx.nested:
                    self.obl[(x, y, psi)] = truth_table(trace, PastEq(x, y, psi))
        self.phi: dict[Formula, object] = {}
        if ctx.mode == NESTED:
            for f in ctx.members:
                self.phi[f] = truth_table(trace, f)


def _extract(model: Model, j: int, ctx: FrameContext, tables: _Tables) -> Frame:
    l = ctx.l
    anchor = max(1, j - l)
    e = min(j - 1, l)
    vals = [model.at(anchor + t) for t in range(e + 1)]
    omega: set[Constraint] = set()
    for t, v in enumerate(vals):
        for q in ctx.bvars:
            if v.bools.get(q, False):
                omega.add(BoolAt(t, q))
        for x in ctx.dvars:
            for s, w in enumerate(vals):
                for y in ctx.dvars:
                    if v.datas[x] == w.datas[y]:
                        omega.add(EqAt(t, x, s, y))
            for y in ctx.dvars:
                for psi in ctx.nested:
                    if tables.obl[(x, y, psi)][anchor + t - 1]:
                        omega.add(OblAt(t, x, y, psi))
    if ctx.mode != NESTED:
        return Frame(e=e, omega=frozenset(omega))
    phi_fr = tuple(
        complete((f for f in ctx.members if tables.phi[f][anchor + t - 1]), ctx.closure) for t in range(e + 1)
    )
    h_fr = []
    for x in ctx.dvars:
        for t in range(e + 1):
            pos = anchor + t
            d = model.at(pos).datas[x]
            h = set()
            for p in range(1, pos):
                here = model.at(p)
                vs = frozenset(z for z in ctx.dvars if here.datas[z] == d)
                if vs:
                    h.add((vs, frozenset(f for f in ctx.nested if tables.phi[f][p - 1])))
            h_fr.append((x, t, frozenset(h)))
    return Frame(e=e, omega=frozenset(omega), phi_fr=phi_fr, h_fr=tuple(sorted(h_fr, key=lambda it: (it[0], it[1]))))


def frame_sequence(model: Model, ctx: FrameContext) -> list[Frame]:
    tables = _Tables(model, ctx)
    return [_extract(model, j, ctx, tables) for j in range(1, len(model) + 1)]


# --------------------------------------------------------------------------- counters


def counter_key(index: frozenset) -> str:
    """Canonical counter name for a variable set or a repetition history."""

    if all(isinstance(item, str) for item in index):
        return "{" + ",".join(sorted(index)) + "}"
    return format_history(index)


def simple_counters(ctx: FrameContext) -> list[str]:
    return [counter_key(frozenset(c)) for r in range(1, len(ctx.dvars) + 1) for c in combinations(ctx.dvars, r)]


def points_of_increment(ctx: FrameContext, fr: Frame) -> Counter[str]:
    out: Counter[str] = Counter()
    if fr.e != ctx.l:
        return out
    lay = layout_of(ctx, fr)
    row = lay.classes[0]
    later = set(chain.from_iterable(lay.classes[1:]))
    for cid in dict.fromkeys(row):
        if cid in later:
            continue
        k0 = row.index(cid)
        members = frozenset(ctx.dvars[k] for k, c in enumerate(row) if c == cid)
        if ctx.mode == NESTED:
            index = lay.hist[0][k0] | {(members, lay.phi[0] & ctx.nested_set)}
        else:
            index = members | {y for (y, _) in lay.po[0][k0]}
        out[counter_key(frozenset(index))] += 1
    return out


def points_of_decrement(ctx: FrameContext, fr: Frame) -> Counter[str]:
    out: Counter[str] = Counter()
    if fr.is_bottom:
        return out
    lay = layout_of(ctx, fr)
    e = fr.e
    row = lay.classes[e]
    earlier = set(chain.from_iterable(lay.classes[:e]))
    for cid in dict.fromkeys(row):
        if cid in earlier:
            continue
        k0 = row.index(cid)
        if ctx.mode == NESTED:
            index = lay.hist[e][k0]
        else:
            index = frozenset(y for (y, _) in lay.po[e][k0])
        if index:
            out[counter_key(frozenset(index))] += 1
    return out


def check_sequence(ctx: FrameContext, frames: Iterable[Frame]) -> bool:
    """Consecutive one-step consistency, starting from the bottom frame."""

    prev = BOTTOM
    for fr in frames:
        if not one_step_consistent(ctx, prev, fr):
            return False
        prev = fr
    return True

from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

# --------------------------------------------------------------------------- signature


@dataclass(frozen=True)
class Signature:
    env_bools: frozenset[str] = frozenset()
    sys_bools: frozenset[str] = frozenset()
    env_datas: frozenset[str] = frozenset()
    sys_datas: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        parts = [self.env_bools, self.sys_bools, self.env_datas, self.sys_datas]
        for a in range(len(parts)):
            for b in range(a + 1, len(parts)):
                clash = parts[a] & parts[b]
                if clash:
                    raise ValueError(f"Variables declared twice: {', '.join(sorted(clash))}")

    @classmethod
    def of(
        cls,
        *,
        env_bools: Iterable[str] = (),
        sys_bools: Iterable[str] = (),
        env_datas: Iterable[str] = (),
        sys_datas: Iterable[str] = (),
    ) -> Signature:
        return cls(frozenset(env_bools), frozenset(sys_bools), frozenset(env_datas), frozenset(sys_datas))

    @property
    def bools(self) -> frozenset[str]:
        return self.env_bools | self.sys_bools

    @property
    def datas(self) -> frozenset[str]:
        return self.env_datas | self.sys_datas

    @property
    def names(self) -> frozenset[str]:
        return self.bools | self.datas

    def owner(self, name: str) -> str:
        if name in self.env_bools or name in self.env_datas:
            return "env"
        if name in self.sys_bools or name in self.sys_datas:
            return "sys"
        raise KeyError(name)

    def is_data(self, name: str) -> bool:
        return name in self.datas

    def with_data(self, name: str, *, owner: str) -> Signature:
        if name in self.names:
            raise ValueError(f"Variable {name!r} already declared")
        if owner == "env":
            return Signature(self.env_bools, self.sys_bools, self.env_datas | {name}, self.sys_datas)
        return Signature(self.env_bools, self.sys_bools, self.env_datas, self.sys_datas | {name})

    def union(self, other: Signature) -> Signature:
        return Signature(
            self.env_bools | other.env_bools,
            self.sys_bools | other.sys_bools,
            self.env_datas | other.env_datas,
            self.sys_datas | other.sys_datas,
        )


# --------------------------------------------------------------------------- valuations


@dataclass(frozen=True)
class Valuation:
    bools: Mapping[str, bool] = field(default_factory=dict)
    datas: Mapping[str, int] = field(default_factory=dict)

    def merge(self, other: Valuation) -> Valuation:
        return Valuation({**self.bools, **other.bools}, {**self.datas, **other.datas})

    def key(self) -> tuple:
        return (tuple(sorted(self.bools.items())), tuple(sorted(self.datas.items())))


@dataclass(frozen=True)
class Model:
    """Finite sequence of valuations; positions are 1-based in the API."""

    valuations: tuple[Valuation, ...] = ()

    def __len__(self) -> int:
        return len(self.valuations)

    def __iter__(self) -> Iterator[Valuation]:
        return iter(self.valuations)

    def at(self, i: int) -> Valuation:
        if not 1 <= i <= len(self.valuations):
            raise IndexError(f"position {i} outside 1..{len(self.valuations)}")
        return self.valuations[i - 1]

    def prefix(self, n: int) -> Model:
        return Model(self.valuations[:n])

    def extend(self, valuation: Valuation) -> Model:
        return Model(self.valuations + (valuation,))

    @classmethod
    def from_columns(
        cls,
        *,
        bools: Mapping[str, Sequence[bool]] | None = None,
        datas: Mapping[str, Sequence[int]] | None = None,
    ) -> Model:
        bools = dict(bools or {})
        datas = dict(datas or {})
        lengths = {len(v) for v in list(bools.values()) + list(datas.values())}
        if len(lengths) > 1:
            raise ValueError("All columns must have the same length")
        n = lengths.pop() if lengths else 0
        return cls(
            tuple(
                Valuation({k: bool(v[i]) for k, v in bools.items()}, {k: int(v[i]) for k, v in datas.items()})
                for i in range(n)
            )
        )


# --------------------------------------------------------------------------- AST


class Formula:
    """Base of all AST nodes; subclasses are frozen dataclasses."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True, eq=True, repr=False)
class Const(Formula):
    value: bool

    def __repr__(self) -> str:
        return "TRUE" if self.value else "FALSE"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, repr=False)
class BoolVar(Formula):
    name: str

    def __repr__(self) -> str:
        return f"BoolVar({self.name})"


@dataclass(frozen=True, repr=False)
class LocalEq(Formula):
    """x ≈ X^j y."""

    x: str
    j: int
    y: str

    def __repr__(self) -> str:
        return f"LocalEq({self.x},{self.j},{self.y})"


@dataclass(frozen=True, repr=False)
class Obligation(Formula):
    x: str
    y: str
    body: Formula = TRUE

    keyword = "?"
    past = False
    equal = True

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.x},{self.y},{self.body!r})"


@dataclass(frozen=True, repr=False)
class FutEq(Obligation):
    keyword = "E+"


@dataclass(frozen=True, repr=False)
class FutNeq(Obligation):
    keyword = "D+"
    equal = False


@dataclass(frozen=True, repr=False)
class PastEq(Obligation):
    keyword = "E-"
    past = True


@dataclass(frozen=True, repr=False)
class PastNeq(Obligation):
    keyword = "D-"
    past = True
    equal = False


@dataclass(frozen=True, repr=False)
class Unary(Formula):
    arg: Formula

    symbol = "?"

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.arg!r})"


@dataclass(frozen=True, repr=False)
class Not(Unary):
    symbol = "!"


@dataclass(frozen=True, repr=False)
class Next(Unary):
    symbol = "X"


@dataclass(frozen=True, repr=False)
class WeakNext(Unary):
    symbol = "WX"


@dataclass(frozen=True, repr=False)
class Prev(Unary):
    symbol = "Y"


@dataclass(frozen=True, repr=False)
class WeakPrev(Unary):
    symbol = "WY"


@dataclass(frozen=True, repr=False)
class Eventually(Unary):
    symbol = "F"


@dataclass(frozen=True, repr=False)
class Always(Unary):
    symbol = "G"


@dataclass(frozen=True, repr=False)
class Once(Unary):
    symbol = "O"


@dataclass(frozen=True, repr=False)
class Historically(Unary):
    symbol = "H"


@dataclass(frozen=True, repr=False)
class Binary(Formula):
    left: Formula
    right: Formula

    symbol = "?"

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.left!r},{self.right!r})"


@dataclass(frozen=True, repr=False)
class And(Binary):
    symbol = "&"


@dataclass(frozen=True, repr=False)
class Or(Binary):
    symbol = "|"


@dataclass(frozen=True, repr=False)
class Implies(Binary):
    symbol = "->"


@dataclass(frozen=True, repr=False)
class Until(Binary):
    symbol = "U"


@dataclass(frozen=True, repr=False)
class Release(Binary):
    symbol = "R"


@dataclass(frozen=True, repr=False)
class Since(Binary):
    symbol = "S"


@dataclass(frozen=True, repr=False)
class Trigger(Binary):
    symbol = "T"


FUTURE_UNARY = (Next, WeakNext, Eventually, Always)
PAST_UNARY = (Prev, WeakPrev, Once, Historically)
FUTURE_BINARY = (Until, Release)
PAST_BINARY = (Since, Trigger)
TEMPORAL = FUTURE_UNARY + PAST_UNARY + FUTURE_BINARY + PAST_BINARY
ATOMIC = (Const, BoolVar, LocalEq)


# --------------------------------------------------------------------------- builders


def conj(*parts: Formula) -> Formula:
    items = [p for p in _flatten(parts) if p != TRUE]
    if any(p == FALSE for p in items):
        return FALSE
    if not items:
        return TRUE
    out = items[0]
    for p in items[1:]:
        out = And(out, p)
    return out


def disj(*parts: Formula) -> Formula:
    items = [p for p in _flatten(parts) if p != FALSE]
    if any(p == TRUE for p in items):
        return TRUE
    if not items:
        return FALSE
    out = items[0]
    for p in items[1:]:
        out = Or(out, p)
    return out


def _flatten(parts: Iterable) -> list[Formula]:
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, Formula):
            out.append(p)
        else:
            out.extend(_flatten(p))
    return out


def neg(f: Formula) -> Formula:
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, Const):
        return Const(not f.value)
    return Not(f)


def next_n(f: Formula, n: int) -> Formula:
    for _ in range(n):
        f = Next(f)
    return f


def prev_n(f: Formula, n: int) -> Formula:
    for _ in range(n):
        f = Prev(f)
    return f


# --------------------------------------------------------------------------- traversal


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Unary):
        return (f.arg,)
    if isinstance(f, Binary):
        return (f.left, f.right)
    if isinstance(f, Obligation):
        return (f.body,)
    return ()


def rebuild(f: Formula, new_children: Sequence[Formula]) -> Formula:
    if isinstance(f, Unary):
        return type(f)(new_children[0])
    if isinstance(f, Binary):
        return type(f)(new_children[0], new_children[1])
    if isinstance(f, Obligation):
        return type(f)(f.x, f.y, new_children[0])
    return f


def transform(f: Formula, fn: Callable[[Formula], Formula]) -> Formula:
    """Bottom-up rewrite: fn sees each node after its children were rewritten."""

    kids = children(f)
    if kids:
        f = rebuild(f, [transform(c, fn) for c in kids])
    return fn(f)


def subformulas(f: Formula) -> list[Formula]:
    """Distinct subformulas, children before parents."""

    seen: dict[Formula, None] = {}

    def visit(g: Formula) -> None:
        if g in seen:
            return
        for c in children(g):
            visit(c)
        seen[g] = None

    visit(f)
    return list(seen)


def variables(f: Formula) -> set[str]:
    out: set[str] = set()
    for g in subformulas(f):
        if isinstance(g, BoolVar):
            out.add(g.name)
        elif isinstance(g, LocalEq):
            out.update((g.x, g.y))
        elif isinstance(g, Obligation):
            out.update((g.x, g.y))
    return out


def formula_size(f: Formula) -> int:
    return 1 + sum(formula_size(c) for c in children(f))


# --------------------------------------------------------------------------- printing

_PREC_IMPLIES, _PREC_OR, _PREC_AND, _PREC_TEMPORAL, _PREC_UNARY, _PREC_ATOM = range(1, 7)


def _prec(f: Formula) -> int:
    if isinstance(f, Implies):
        return _PREC_IMPLIES
    if isinstance(f, Or):
        return _PREC_OR
    if isinstance(f, And):
        return _PREC_AND
    if isinstance(f, Binary):
        return _PREC_TEMPORAL
    if isinstance(f, Unary):
        return _PREC_UNARY
    return _PREC_ATOM


def format_formula(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, BoolVar):
        return f.name
    if isinstance(f, LocalEq):
        return f"eq({f.x}, {f.j}, {f.y})"
    if isinstance(f, Obligation):
        return f"{f.keyword}({f.x}, {f.y}; {format_formula(f.body)})"
    if isinstance(f, Unary):
        inner = format_formula(f.arg)
        if _prec(f.arg) < _PREC_UNARY:
            inner = f"({inner})"
        sep = "" if f.symbol == "!" else " "
        return f"{f.symbol}{sep}{inner}"
    if isinstance(f, Binary):
        p = _prec(f)
        left = format_formula(f.left)
        right = format_formula(f.right)
        # left-assoc for & and |, right-assoc for the rest
        left_assoc = isinstance(f, (And, Or))
        if _prec(f.left) < p or (_prec(f.left) == p and not (left_assoc and type(f.left) is type(f))):
            left = f"({left})"
        if _prec(f.right) < p or (_prec(f.right) == p and (left_assoc or type(f.right) is not type(f))):
            right = f"({right})"
        return f"{left} {f.symbol} {right}"
    raise TypeError(f"Unknown formula node {f!r}")


def format_signature(sig: Signature) -> str:
    lines = []
    for owner, kind, names in (
        ("env", "bool", sig.env_bools),
        ("env", "data", sig.env_datas),
        ("sys", "bool", sig.sys_bools),
        ("sys", "data", sig.sys_datas),
    ):
        if names:
            lines.append(f"{owner} {kind} {', '.join(sorted(names))};")
    return "\n".join(lines)


def format_document(sig: Signature, f: Formula) -> str:
    head = format_signature(sig)
    body = f"formula: {format_formula(f)}"
    return f"{head}\n{body}\n" if head else f"{body}\n"

"""Concrete plays, three-valued prefix checks and a finite-horizon minimax oracle."""

from __future__ import annotations

import hashlib
import json
import logging
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from itertools import product
from multiprocessing import Pool
from pathlib import Path
from typing import Protocol

from lib.automaton import DetParity, _abstract, atom_name, build_dpa, nonempty_states, universal_states
from lib.formula import (
    FUTURE_BINARY,
    FUTURE_UNARY,
    BoolVar,
    Formula,
    FutEq,
    FutNeq,
    LocalEq,
    Model,
    Obligation,
    Signature,
    Valuation,
    subformulas,
)
from lib.semantics import Trace, truth_table

logger = logging.getLogger(__name__)

# --------------------------------------------------------------------------- strategies


class StrategyScript(Protocol):
    """Environment scripts get env_move=None; system scripts see the environment's current move."""

    def __call__(self, history: Model, env_move: Valuation | None) -> Valuation: ...


def history_key(history: Model, env_move: Valuation | None = None) -> str:
    rows = [v.key() for v in history]
    if env_move is not None:
        rows.append(env_move.key())
    return hashlib.sha256(json.dumps(rows).encode("utf-8")).hexdigest()


def _seen_values(history: Model, env_move: Valuation | None) -> list[int]:
    out = [d for v in history for d in v.datas.values()]
    if env_move is not None:
        out.extend(env_move.datas.values())
    return out


def _fresh(history: Model, env_move: Valuation | None) -> int:
    return max(_seen_values(history, env_move), default=-1) + 1


@dataclass(frozen=True)
class ConstScript:
    bools: tuple[str, ...]
    datas: tuple[str, ...]
    assign: Mapping[str, bool] = field(default_factory=dict)

    def __call__(self, history: Model, env_move: Valuation | None) -> Valuation:
        return Valuation({b: bool(self.assign.get(b, False)) for b in self.bools}, {d: 0 for d in self.datas})


@dataclass(frozen=True)
class FreshAllScript:
    bools: tuple[str, ...]
    datas: tuple[str, ...]

    def __call__(self, history: Model, env_move: Valuation | None) -> Valuation:
        start = _fresh(history, env_move)
        return Valuation({b: False for b in self.bools}, {d: start + k for k, d in enumerate(self.datas)})


@dataclass(frozen=True)
class CopyPrevScript:
    """dst takes src's value from the previous position; everything else is fresh."""

    bools: tuple[str, ...]
    datas: tuple[str, ...]
    src: str
    dst: str

    def __call__(self, history: Model, env_move: Valuation | None) -> Valuation:
        start = _fresh(history, env_move)
        datas = {d: start + k for k, d in enumerate(self.datas)}
        if len(history):
            datas[self.dst] = history.at(len(history)).datas[self.src]
        return Valuation({b: False for b in self.bools}, datas)


@dataclass(frozen=True)
class TableScript:
    """Moves looked up by history hash, then by round key `#n`."""

    table: Mapping[str, Valuation]

    def __call__(self, history: Model, env_move: Valuation | None) -> Valuation:
        for key in (history_key(history, env_move), f"#{len(history) + 1}"):
            if key in self.table:
                return self.table[key]
        raise ValueError(f"script has no move for round {len(history) + 1}")

    @classmethod
    def from_model(cls, model: Model, names: frozenset[str]) -> TableScript:
        return cls(
            {
                f"#{i}": Valuation(
                    {k: v for k, v in val.bools.items() if k in names},
                    {k: v for k, v in val.datas.items() if k in names},
                )
                for i, val in enumerate(model, start=1)
            }
        )

    @classmethod
    def from_json(cls, data: Mapping[str, Mapping]) -> TableScript:
        table = {}
        for key, move in data.items():
            if not isinstance(move, Mapping):
                raise ValueError(f"script entry {key!r} must be an object")
            table[key] = Valuation(
                {k: bool(v) for k, v in move.get("bools", {}).items()},
                {k: int(v) for k, v in move.get("datas", {}).items()},
            )
        return cls(table)

    def to_json(self) -> dict[str, dict]:
        return {k: {"bools": dict(v.bools), "datas": dict(v.datas)} for k, v in self.table.items()}


def _owned(sig: Signature, owner: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if owner == "env":
        return tuple(sorted(sig.env_bools)), tuple(sorted(sig.env_datas))
    if owner == "sys":
        return tuple(sorted(sig.sys_bools)), tuple(sorted(sig.sys_datas))
    raise ValueError(f"owner must be 'env' or 'sys', got {owner!r}")


def load_script(spec: str, sig: Signature, owner: str) -> StrategyScript:
    """Built-in names: const, fresh_all, copy_prev:<src>:<dst>, set:<var>=<0|1>[,...], table:<path>."""

    bools, datas = _owned(sig, owner)
    name, _, arg = spec.partition(":")
    if name == "const" and not arg:
        return ConstScript(bools, datas)
    if name == "fresh_all" and not arg:
        return FreshAllScript(bools, datas)
    if name == "copy_prev":
        src, _, dst = arg.partition(":")
        if src not in sig.datas or dst not in datas:
            raise ValueError(f"copy_prev needs a data source and one of the {owner} data variables: {spec!r}")
        return CopyPrevScript(bools, datas, src, dst)
    if name == "set":
        assign = {}
        for item in filter(None, arg.split(",")):
            var, _, value = item.partition("=")
            if var not in bools or value not in ("0", "1", "true", "false"):
                raise ValueError(f"set expects {owner} booleans as var=0|1: {item!r}")
            assign[var] = value in ("1", "true")
        return ConstScript(bools, datas, assign)
    if name == "table":
        return TableScript.from_json(json.loads(Path(arg).read_text(encoding="utf-8")))
    raise ValueError(f"unknown strategy script {spec!r}")


def _check_move(move: Valuation, bools: tuple[str, ...], datas: tuple[str, ...], who: str, i: int) -> None:
    if set(move.bools) != set(bools) or set(move.datas) != set(datas):
        raise ValueError(
            f"round {i}: {who} move must assign exactly {sorted(bools + datas)}, got {sorted([*move.bools, *move.datas])}"
        )


def play(sig: Signature, env: StrategyScript, sys: StrategyScript, rounds: int) -> Model:
    """Each round the environment moves on the history, then the system sees that move and answers."""

    env_vars, sys_vars = _owned(sig, "env"), _owned(sig, "sys")
    model = Model()
    for i in range(1, rounds + 1):
        e = env(model, None)
        _check_move(e, *env_vars, "environment", i)
        s = sys(model, e)
        _check_move(s, *sys_vars, "system", i)
        model = model.extend(e.merge(s))
    logger.debug("Played %d round(s)", rounds)
    return model


# --------------------------------------------------------------------------- prefix checks


class ThreeValued(Enum):
    DefinitelyTrue = "definitely-true"
    DefinitelyFalse = "definitely-false"
    Undetermined = "undetermined"


_FUTURE = FUTURE_UNARY + FUTURE_BINARY + (FutEq, FutNeq)


def _past_only(f: Formula) -> bool:
    return not any(isinstance(g, _FUTURE) for g in subformulas(f))


@dataclass(frozen=True)
class _Monitor:
    atoms: tuple[Formula, ...]
    dpa: DetParity
    nonempty: frozenset[int]
    universal: frozenset[int]
    exact: bool  # no atom depends on the future beyond local look-ahead


@lru_cache(maxsize=64)
def _monitor(f: Formula) -> _Monitor:
    index: dict[Formula, int] = {}

    def atom(g: Formula) -> Formula:
        k = index.setdefault(g, len(index))
        return BoolVar(atom_name(k))

    skeleton = _abstract(f, atom)
    atoms = tuple(index)
    dpa = build_dpa(skeleton, len(atoms))
    exact = all(not isinstance(a, (FutEq, FutNeq)) and (not isinstance(a, Obligation) or _past_only(a.body)) for a in atoms)
    logger.debug("Prefix monitor: %d atom(s), %d state(s)", len(atoms), dpa.size)
    return _Monitor(atoms, dpa, nonempty_states(dpa), universal_states(dpa), exact)


def _atom_values(model: Model, atom: Formula, trace: Trace) -> list[bool | None]:
    n = len(model)
    if isinstance(atom, BoolVar):
        return [model.at(i).bools[atom.name] for i in range(1, n + 1)]
    if isinstance(atom, LocalEq):
        out: list[bool | None] = []
        for i in range(1, n + 1):
            j = i + atom.j
            if j < 1:
                out.append(False)
            elif j > n:
                out.append(None)
            else:
                out.append(model.at(i).datas[atom.x] == model.at(j).datas[atom.y])
        return out
    if isinstance(atom, Obligation) and not _past_only(atom.body):
        return [None] * n
    if isinstance(atom, (FutEq, FutNeq)):
        body = truth_table(trace, atom.body)
        equal = isinstance(atom, FutEq)
        out = []
        for i in range(1, n + 1):
            value = model.at(i).datas[atom.x]
            seen = any(
                body[j - 1] and (model.at(j).datas[atom.y] == value) == equal for j in range(i + 1, n + 1)
            )
            out.append(True if seen else None)
        return out
    return [bool(v) for v in truth_table(trace, atom)]


def _letters(values: list[bool | None]) -> Iterator[int]:
    base = sum(1 << k for k, v in enumerate(values) if v)
    unknown = [k for k, v in enumerate(values) if v is None]
    for bits in product((0, 1), repeat=len(unknown)):
        yield base + sum(b << k for b, k in zip(bits, unknown))


def check_prefix(model: Model, f: Formula) -> ThreeValued:
    """Verdict on every infinite extension of the prefix.

    Atoms that look past the end of the prefix are unknown and the automaton
    runs on every completion. With future repetition atoms only the
    DefinitelyFalse verdict is precise.
    """

    mon = _monitor(f)
    trace = Trace.finite(model)
    columns = [_atom_values(model, a, trace) for a in mon.atoms]
    states = {mon.dpa.initial}
    for i in range(len(model)):
        row = [col[i] for col in columns]
        states = {int(mon.dpa.delta[q, a]) for q in states for a in _letters(row)}
    if states.isdisjoint(mon.nonempty):
        return ThreeValued.DefinitelyFalse
    if states <= mon.universal:
        return ThreeValued.DefinitelyTrue
    return ThreeValued.Undetermined


def prefix_precision(f: Formula) -> str:
    return "exact" if _monitor(f).exact else "definitely-false only"


# --------------------------------------------------------------------------- minimax


@dataclass(frozen=True)
class EnvForcesFalseBy:
    rounds: int


@dataclass(frozen=True)
class SysCanAvoidLossUpTo:
    horizon: int


OracleResult = EnvForcesFalseBy | SysCanAvoidLossUpTo


def default_pool(sig: Signature, horizon: int) -> int:
    return (horizon + 1) * len(sig.datas) + 1


def _moves(
    bools: tuple[str, ...], datas: tuple[str, ...], history: Model, env_move: Valuation | None, pool: int
) -> list[Valuation]:
    """Every boolean assignment times every data choice among seen values or the next fresh one."""

    seen = sorted(set(_seen_values(history, env_move)))
    choices: list[dict[str, int]] = [{}]
    for d in datas:
        grown = []
        for partial in choices:
            used = sorted(set(seen) | set(partial.values()))
            fresh = max(used, default=-1) + 1
            options = used + ([fresh] if fresh < pool else [])
            grown.extend({**partial, d: v} for v in options)
        choices = grown
    return [
        Valuation(dict(zip(bools, bits)), data)
        for bits in product((False, True), repeat=len(bools))
        for data in choices
    ]


@dataclass(frozen=True)
class _Game:
    sig: Signature
    f: Formula
    pool: int

    def env_moves(self, history: Model) -> list[Valuation]:
        return _moves(*_owned(self.sig, "env"), history, None, self.pool)

    def sys_moves(self, history: Model, env_move: Valuation) -> list[Valuation]:
        return _moves(*_owned(self.sig, "sys"), history, env_move, self.pool)

    def env_wins_after(self, history: Model, env_move: Valuation, rounds: int) -> bool:
        for s in self.sys_moves(history, env_move):
            if not self.env_wins(history.extend(env_move.merge(s)), rounds - 1):
                return False
        return True

    def env_wins(self, history: Model, rounds: int) -> bool:
        """The environment can force DefinitelyFalse within `rounds` more rounds."""

        if len(history):
            verdict = check_prefix(history, self.f)
            if verdict is ThreeValued.DefinitelyFalse:
                return True
            if verdict is ThreeValued.DefinitelyTrue:
                return False
        if rounds == 0:
            return False
        return any(self.env_wins_after(history, e, rounds) for e in self.env_moves(history))


def _root_worker(args: tuple[_Game, Valuation, int]) -> bool:
    game, move, rounds = args
    return game.env_wins_after(Model(), move, rounds)


def finite_minimax(
    sig: Signature, f: Formula, horizon: int, pool: int | None = None, *, jobs: int = 1
) -> OracleResult:
    """Iterative deepening over 1..horizon rounds; root moves go to `jobs` worker processes."""

    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    game = _Game(sig, f, default_pool(sig, horizon) if pool is None else pool)
    roots = game.env_moves(Model())
    for rounds in range(1, horizon + 1):
        if jobs > 1:
            with Pool(jobs) as workers:
                wins = workers.map(_root_worker, [(game, e, rounds) for e in roots])
        else:
            wins = [_root_worker((game, e, rounds)) for e in roots]
        if any(wins):
            logger.info("Environment forces a definite loss within %d round(s)", rounds)
            return EnvForcesFalseBy(rounds)
    logger.info("System avoids a definite loss for %d round(s) (pool %d)", horizon, game.pool)
    return SysCanAvoidLossUpTo(horizon)

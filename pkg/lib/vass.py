"""Single-sided VASS games: representation, JSON format, validation and unit expansion."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any

from lib.errors import VassFormatError

logger = logging.getLogger(__name__)

ENV = "env"
SYS = "sys"


@dataclass(frozen=True)
class VassState:
    name: str
    owner: str
    color: int


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    update: tuple[int, ...]  # aligned with VassGame.counters

    @property
    def is_nop(self) -> bool:
        return not any(self.update)


@dataclass(frozen=True)
class VassGame:
    states: tuple[VassState, ...]
    counters: tuple[str, ...]
    transitions: tuple[Transition, ...]
    initial_state: str
    initial_counters: tuple[int, ...]
    _by_name: dict[str, VassState] = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self) -> None:
        self._by_name.update({s.name: s for s in self.states})

    def state(self, name: str) -> VassState:
        return self._by_name[name]

    def owner(self, name: str) -> str:
        return self._by_name[name].owner

    def color(self, name: str) -> int:
        return self._by_name[name].color

    def outgoing(self, name: str) -> list[tuple[int, Transition]]:
        return [(k, t) for k, t in enumerate(self.transitions) if t.source == name]

    def update_dict(self, t: Transition) -> dict[str, int]:
        return {c: u for c, u in zip(self.counters, t.update) if u}

    @property
    def is_single_sided(self) -> bool:
        return all(t.is_nop for t in self.transitions if self.owner(t.source) == ENV)

    def replace(
        self,
        *,
        states: tuple[VassState, ...] | None = None,
        transitions: tuple[Transition, ...] | None = None,
        initial_state: str | None = None,
        initial_counters: tuple[int, ...] | None = None,
    ) -> VassGame:
        return VassGame(
            states=self.states if states is None else states,
            counters=self.counters,
            transitions=self.transitions if transitions is None else transitions,
            initial_state=self.initial_state if initial_state is None else initial_state,
            initial_counters=self.initial_counters if initial_counters is None else initial_counters,
        )


# --------------------------------------------------------------------------- JSON


def game_from_dict(data: dict[str, Any]) -> VassGame:
    try:
        counters = tuple(str(c) for c in data.get("counters") or [])
        if len(set(counters)) != len(counters):
            raise VassFormatError("duplicate counter names")
        states = []
        for row in data["states"]:
            owner = row.get("owner")
            if owner not in {ENV, SYS}:
                raise VassFormatError(f"state {row.get('name')!r}: owner must be 'env' or 'sys'")
            color = int(row.get("color", 0))
            if color < 0:
                raise VassFormatError(f"state {row['name']!r}: colors are natural numbers")
            states.append(VassState(str(row["name"]), owner, color))
        names = {s.name for s in states}
        if len(names) != len(states):
            raise VassFormatError("duplicate state names")
        transitions = []
        for row in data.get("transitions") or []:
            src, dst = str(row["from"]), str(row["to"])
            if src not in names or dst not in names:
                raise VassFormatError(f"transition {src} -> {dst} uses an unknown state")
            update = row.get("update") or {}
            unknown = set(update) - set(counters)
            if unknown:
                raise VassFormatError(f"transition {src} -> {dst} updates unknown counters {sorted(unknown)}")
            transitions.append(Transition(src, dst, tuple(int(update.get(c, 0)) for c in counters)))
        init = data["initial"]
        init_state = str(init["state"])
        if init_state not in names:
            raise VassFormatError(f"initial state {init_state!r} is not declared")
        init_vals = init.get("counters") or {}
        if set(init_vals) - set(counters):
            raise VassFormatError("initial valuation mentions unknown counters")
        initial_counters = tuple(int(init_vals.get(c, 0)) for c in counters)
    except KeyError as exc:
        raise VassFormatError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, VassFormatError):
            raise
        raise VassFormatError(str(exc)) from None
    return VassGame(tuple(states), counters, tuple(transitions), init_state, initial_counters)


def parse_vass(text: str) -> VassGame:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise VassFormatError(f"line {exc.lineno}, col {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise VassFormatError("a VASS game is a JSON object")
    return game_from_dict(data)


def game_to_dict(game: VassGame) -> dict[str, Any]:
    return {
        "states": [{"name": s.name, "owner": s.owner, "color": s.color} for s in game.states],
        "counters": list(game.counters),
        "transitions": [{"from": t.source, "to": t.target, "update": game.update_dict(t)} for t in game.transitions],
        "initial": {"state": game.initial_state, "counters": dict(zip(game.counters, game.initial_counters))},
    }


def format_vass(game: VassGame) -> str:
    return json.dumps(game_to_dict(game), indent=2)


# --------------------------------------------------------------------------- validation


@dataclass(frozen=True)
class Diagnostics:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


ENV_LOSES = "__env_loses"
SYS_LOSES = "__sys_loses"


def validate(game: VassGame) -> Diagnostics:
    errors: list[str] = []
    warnings: list[str] = []
    for k, t in enumerate(game.transitions):
        if game.owner(t.source) == ENV and not t.is_nop:
            errors.append(f"transition {k} ({t.source} -> {t.target}): environment transitions must not change counters")
    if any(v < 0 for v in game.initial_counters):
        errors.append("initial counter values must be non-negative")
    sources = {t.source for t in game.transitions}
    for s in game.states:
        if s.name not in sources:
            warnings.append(f"state {s.name} has no outgoing transition; its owner loses there")
    return Diagnostics(tuple(errors), tuple(warnings))


def with_deadlock_sinks(game: VassGame) -> VassGame:
    """Send every state without outgoing transitions to a sink its owner loses."""

    sources = {t.source for t in game.transitions}
    dead = [s for s in game.states if s.name not in sources]
    if not dead:
        return game
    zero = (0,) * len(game.counters)
    states = list(game.states)
    transitions = list(game.transitions)
    needed = {ENV_LOSES if s.owner == ENV else SYS_LOSES for s in dead}
    for sink in sorted(needed):
        states.append(VassState(sink, ENV, 0 if sink == ENV_LOSES else 1))
        transitions.append(Transition(sink, sink, zero))
    for s in dead:
        logger.warning("State %s has no outgoing transition; %s loses there", s.name, s.owner)
        transitions.append(Transition(s.name, ENV_LOSES if s.owner == ENV else SYS_LOSES, zero))
    return game.replace(states=tuple(states), transitions=tuple(transitions))


def expand_vector_updates(game: VassGame) -> VassGame:
    """Split every update into unit steps through fresh system states, increments first."""

    states = list(game.states)
    transitions: list[Transition] = []
    n = len(game.counters)
    fresh = 0
    for k, t in enumerate(game.transitions):
        steps: list[tuple[int, ...]] = []
        for c, u in enumerate(t.update):
            if u > 0:
                steps += [tuple(1 if m == c else 0 for m in range(n))] * u
        for c, u in enumerate(t.update):
            if u < 0:
                steps += [tuple(-1 if m == c else 0 for m in range(n))] * (-u)
        if len(steps) <= 1:
            transitions.append(t)
            continue
        if game.owner(t.source) == ENV:
            raise ValueError(f"transition {k}: environment transitions carry no updates in single-sided games")
        color = game.color(t.source)
        prev = t.source
        for step in steps[:-1]:
            name = f"{t.source}~{k}~{fresh}"
            fresh += 1
            states.append(VassState(name, SYS, color))
            transitions.append(Transition(prev, name, step))
            prev = name
        transitions.append(Transition(prev, t.target, steps[-1]))
    if fresh:
        logger.debug("Expanded vector updates with %d fresh state(s)", fresh)
    return game.replace(states=tuple(states), transitions=tuple(transitions))

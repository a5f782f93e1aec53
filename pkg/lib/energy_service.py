from __future__ import annotations

import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass

import networkx as nx
import pandas as pd

from lib.errors import ContractViolation
from lib.parity import ENVIRONMENT, SYSTEM, solve_parity
from lib.settings import DEFAULT_CAP_SCHEDULE
from lib.vass import ENV, VassGame, validate, with_deadlock_sinks

logger = logging.getLogger(__name__)

SINK_SYS_LOSES = ("__sys_loses", ())
SINK_ENV_LOSES = ("__env_loses", ())
OMEGA = "ω"  # a counter value above the cap, in omega arenas


# --------------------------------------------------------------------------- verdicts


@dataclass(frozen=True)
class StrategyTable:
    player: str  # "sys" | "env"
    cap: int | None  # None: positional over states of the counter-erased game
    choices: dict[str, int]  # "state@v1,v2" -> transition index


@dataclass(frozen=True)
class SystemWins:
    cap: int
    strategy: StrategyTable | None = None
    kind: str = "SystemWins"


@dataclass(frozen=True)
class EnvironmentWins:
    cap: int | None
    certificate: str
    strategy: StrategyTable | None = None
    kind: str = "EnvironmentWins"


@dataclass(frozen=True)
class Unknown:
    cap: int
    kind: str = "Unknown"


Verdict = SystemWins | EnvironmentWins | Unknown


@dataclass(frozen=True)
class EnergyResult:
    verdict: Verdict
    data: pd.DataFrame  # columns: cap, vertices, edges, saturated, winner, omega_winner


# --------------------------------------------------------------------------- arenas


def vertex_label(v: tuple[str, tuple[int, ...]]) -> str:
    return f"{v[0]}@{','.join(str(x) for x in v[1])}"


@dataclass(frozen=True)
class CappedArena:
    graph: nx.DiGraph
    initial: tuple[str, tuple[int, ...]]
    cap: int
    saturated: bool  # some reachable step was clipped at the cap

    @property
    def vertices(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def edges(self) -> int:
        return self.graph.number_of_edges()


def _player(owner: str) -> int:
    return ENVIRONMENT if owner == ENV else SYSTEM


def _add_sinks(g: nx.DiGraph) -> None:
    g.add_node(SINK_SYS_LOSES, owner=ENVIRONMENT, color=1)
    g.add_edge(SINK_SYS_LOSES, SINK_SYS_LOSES, transition=-1)
    g.add_node(SINK_ENV_LOSES, owner=SYSTEM, color=0)
    g.add_edge(SINK_ENV_LOSES, SINK_ENV_LOSES, transition=-1)


def _step(vals: tuple, update: tuple[int, ...], cap: int, omega: bool) -> tuple[tuple | None, bool]:
    """Counter values after an update, or None when one drops below zero; also whether a value hit the cap."""

    out = []
    clipped = False
    for a, u in zip(vals, update):
        if a == OMEGA:
            out.append(OMEGA)
            continue
        x = a + u
        if x < 0:
            return None, False
        if x > cap:
            clipped = True
            x = OMEGA if omega else cap
        out.append(x)
    return tuple(out), clipped


def build_capped_arena(game: VassGame, cap: int, *, omega: bool = False) -> CappedArena:
    """Reachable part of the game with counters clipped at cap.

    A step is enabled iff no counter drops below zero; values above the cap
    saturate. With omega, a value above the cap becomes OMEGA instead, which
    stays OMEGA and enables every decrement: the system then has every move
    it has in the real game. A vertex without enabled steps moves to a sink
    its owner loses.
    """

    if game.initial_counters and cap < max(game.initial_counters):
        raise ValueError(f"cap {cap} is below the initial counter values")
    out: dict[str, list] = {s.name: [] for s in game.states}
    for k, t in enumerate(game.transitions):
        out[t.source].append((k, t))
    g = nx.DiGraph()
    _add_sinks(g)
    init = (game.initial_state, tuple(game.initial_counters))
    g.add_node(init, owner=_player(game.owner(init[0])), color=game.color(init[0]))
    saturated = False
    queue = deque([init])
    while queue:
        v = queue.popleft()
        name, vals = v
        enabled = False
        for k, t in out[name]:
            nxt, clipped = _step(vals, t.update, cap, omega)
            if nxt is None:
                continue
            saturated |= clipped
            w = (t.target, nxt)
            if w not in g:
                g.add_node(w, owner=_player(game.owner(t.target)), color=game.color(t.target))
                queue.append(w)
            if not g.has_edge(v, w):
                g.add_edge(v, w, transition=k)
            enabled = True
        if not enabled:
            g.add_edge(v, SINK_SYS_LOSES if game.owner(name) != ENV else SINK_ENV_LOSES, transition=-1)
    kind = "omega arena" if omega else "arena"
    logger.debug("%s at cap %d: %d vertices, %d edges", kind.capitalize(), cap, g.number_of_nodes(), g.number_of_edges())
    return CappedArena(g, init, cap, saturated)


def build_erased_arena(game: VassGame) -> nx.DiGraph:
    """Parity game on the states alone: counters ignored, every step enabled."""

    g = nx.DiGraph()
    _add_sinks(g)
    for s in game.states:
        g.add_node((s.name, ()), owner=_player(s.owner), color=s.color)
    for k, t in enumerate(game.transitions):
        if not g.has_edge((t.source, ()), (t.target, ())):
            g.add_edge((t.source, ()), (t.target, ()), transition=k)
    for s in game.states:
        if g.out_degree((s.name, ())) == 0:
            g.add_edge((s.name, ()), SINK_SYS_LOSES if s.owner != ENV else SINK_ENV_LOSES, transition=-1)
    return g


def _table(g: nx.DiGraph, strategy: dict, player: str, cap: int | None) -> StrategyTable:
    choices = {}
    for v, w in strategy.items():
        if v in (SINK_SYS_LOSES, SINK_ENV_LOSES):
            continue
        choices[vertex_label(v)] = int(g.edges[v, w]["transition"])
    return StrategyTable(player=player, cap=cap, choices=dict(sorted(choices.items())))


# --------------------------------------------------------------------------- solver


def solve_energy(
    game: VassGame,
    caps: Sequence[int] = DEFAULT_CAP_SCHEDULE,
    *,
    assume_complete: bool = False,
) -> EnergyResult:
    """Sound on both sides.

    A capped win is a real win. A loss with counters erased, or with values
    above the cap left unbounded, is a real loss.
    """

    diagnostics = validate(game)
    if not diagnostics.ok:
        raise ValueError("; ".join(diagnostics.errors))
    game = with_deadlock_sinks(game)
    columns = ["cap", "vertices", "edges", "saturated", "winner", "omega_winner"]

    erased = build_erased_arena(game)
    win, strat = solve_parity(erased)
    start = (game.initial_state, ())
    if start not in win[SYSTEM]:
        logger.info("System loses the counter-erased game")
        verdict = EnvironmentWins(None, "counter-erased", _table(erased, strat[ENVIRONMENT], "env", None))
        return EnergyResult(verdict, pd.DataFrame(columns=columns))

    rows = []
    floor = max(game.initial_counters, default=0)
    tried = None
    for cap in caps:
        if cap < floor:
            logger.debug("Skipping cap %d below the initial valuation", cap)
            continue
        tried = cap
        arena = build_capped_arena(game, cap)
        win, strat = solve_parity(arena.graph)
        sys_wins = arena.initial in win[SYSTEM]
        rows.append(
            {
                "cap": cap,
                "vertices": arena.vertices,
                "edges": arena.edges,
                "saturated": arena.saturated,
                "winner": "sys" if sys_wins else "env",
                "omega_winner": None,
            }
        )
        logger.info("Cap %d: %d vertices, winner %s", cap, arena.vertices, rows[-1]["winner"])
        data = pd.DataFrame(rows, columns=columns)
        if sys_wins:
            return EnergyResult(SystemWins(cap, _table(arena.graph, strat[SYSTEM], "sys", cap)), data)
        if not arena.saturated:
            # nothing was clipped, so the capped game is the real one
            verdict = EnvironmentWins(cap, "exact capped arena", _table(arena.graph, strat[ENVIRONMENT], "env", cap))
            return EnergyResult(verdict, data)
        loose = build_capped_arena(game, cap, omega=True)
        win, strat = solve_parity(loose.graph)
        rows[-1]["omega_winner"] = "sys" if loose.initial in win[SYSTEM] else "env"
        data = pd.DataFrame(rows, columns=columns)
        if loose.initial not in win[SYSTEM]:
            logger.info("Cap %d: system loses even with unbounded counters above the cap", cap)
            verdict = EnvironmentWins(cap, "omega arena", _table(loose.graph, strat[ENVIRONMENT], "env", cap))
            return EnergyResult(verdict, data)

    data = pd.DataFrame(rows, columns=columns)
    last = tried if tried is not None else floor
    if assume_complete:
        return EnergyResult(EnvironmentWins(last, "assumed complete"), data)
    return EnergyResult(Unknown(last), data)


def extract_strategy(verdict: Verdict) -> dict[str, int]:
    if isinstance(verdict, Unknown) or getattr(verdict, "strategy", None) is None:
        raise ContractViolation(f"{verdict.kind} verdict carries no strategy")
    return dict(verdict.strategy.choices)


# --------------------------------------------------------------------------- replay


@dataclass(frozen=True)
class ReplayResult:
    data: pd.DataFrame  # columns: step, state, transition, then one column per counter
    blocked: bool  # a chosen step would have made a counter negative


def replay(game: VassGame, strategy: StrategyTable, env_moves: Sequence[int], *, max_steps: int = 1000) -> ReplayResult:
    """Play a system strategy table against a sequence of environment transition indices."""

    if strategy.player != "sys" or strategy.cap is None:
        raise ValueError("replay needs a capped system strategy")
    game = with_deadlock_sinks(game)
    name = game.initial_state
    vals = list(game.initial_counters)
    moves = list(env_moves)
    rows = [{"step": 0, "state": name, "transition": -1, **dict(zip(game.counters, vals))}]
    blocked = False
    for step in range(1, max_steps + 1):
        if game.owner(name) == ENV:
            if not moves:
                break
            k = moves.pop(0)
            if game.transitions[k].source != name:
                raise ValueError(f"environment move {k} does not leave state {name}")
        else:
            key = vertex_label((name, tuple(min(strategy.cap, v) for v in vals)))
            if key not in strategy.choices:
                break
            k = strategy.choices[key]
        t = game.transitions[k]
        new = [a + u for a, u in zip(vals, t.update)]
        if any(x < 0 for x in new):
            blocked = True
            break
        name, vals = t.target, new
        rows.append({"step": step, "state": name, "transition": k, **dict(zip(game.counters, vals))})
    return ReplayResult(pd.DataFrame(rows), blocked)

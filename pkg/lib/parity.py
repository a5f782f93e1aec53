"""Max-even parity games on networkx digraphs.

Vertices carry `owner` (0 = system, wins on even; 1 = environment) and
`color`. Every vertex needs an outgoing edge.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Iterable

import networkx as nx

logger = logging.getLogger(__name__)

SYSTEM = 0
ENVIRONMENT = 1

Strategy = dict


def attractor(g: nx.DiGraph, nodes: set, target: Iterable, player: int) -> tuple[set, Strategy]:
    """Vertices of the subgame from which `player` can force a visit to target."""

    attr = set(target) & nodes
    strategy: Strategy = {}
    remaining = {
        v: sum(1 for w in g.successors(v) if w in nodes) for v in nodes if v not in attr and g.nodes[v]["owner"] != player
    }
    queue = deque(attr)
    while queue:
        w = queue.popleft()
        for v in g.predecessors(w):
            if v not in nodes or v in attr:
                continue
            if g.nodes[v]["owner"] == player:
                attr.add(v)
                strategy[v] = w
                queue.append(v)
            else:
                remaining[v] -= 1
                if remaining[v] == 0:
                    attr.add(v)
                    queue.append(v)
    return attr, strategy


def _zielonka(g: nx.DiGraph, nodes: set) -> tuple[list[set], list[Strategy]]:
    win: list[set] = [set(), set()]
    strat: list[Strategy] = [{}, {}]
    if not nodes:
        return win, strat
    d = max(g.nodes[v]["color"] for v in nodes)
    p = d % 2
    top = {v for v in nodes if g.nodes[v]["color"] == d}
    a, a_strat = attractor(g, nodes, top, p)
    sub_win, sub_strat = _zielonka(g, nodes - a)
    if not sub_win[1 - p]:
        win[p] = set(nodes)
        strat[p].update(sub_strat[p])
        strat[p].update(a_strat)
        for v in top:
            if g.nodes[v]["owner"] == p:
                strat[p][v] = min((w for w in g.successors(v) if w in nodes), key=repr)
        return win, strat
    b, b_strat = attractor(g, nodes, sub_win[1 - p], 1 - p)
    rest_win, rest_strat = _zielonka(g, nodes - b)
    win[p] = rest_win[p]
    win[1 - p] = rest_win[1 - p] | b
    strat[p].update(rest_strat[p])
    strat[1 - p].update(rest_strat[1 - p])
    strat[1 - p].update(b_strat)
    strat[1 - p].update({v: w for v, w in sub_strat[1 - p].items() if v in sub_win[1 - p]})
    return win, strat


def solve_parity(g: nx.DiGraph) -> tuple[list[set], list[Strategy]]:
    """Winning regions and positional strategies, indexed by player."""

    dead = [v for v in g if g.out_degree(v) == 0]
    if dead:
        raise ValueError(f"parity game has vertices without successors: {dead[:3]}")
    win, strat = _zielonka(g, set(g.nodes))
    for p in (SYSTEM, ENVIRONMENT):
        strat[p] = {v: w for v, w in strat[p].items() if v in win[p] and g.nodes[v]["owner"] == p}
    logger.debug("Parity game with %d vertices: system wins %d", g.number_of_nodes(), len(win[SYSTEM]))
    return win, strat


def solve_parity_fixpoint(g: nx.DiGraph) -> set:
    """System winning region from the nested fixpoint formula, highest color outermost."""

    nodes = set(g.nodes)
    colors = sorted({g.nodes[v]["color"] for v in nodes})
    if not colors:
        return set()
    top = colors[-1]
    by_color = {c: {v for v in nodes if g.nodes[v]["color"] == c} for c in range(top + 1)}

    def cpre(z: set) -> set:
        out = set()
        for v in nodes:
            succ = list(g.successors(v))
            if g.nodes[v]["owner"] == SYSTEM:
                if any(w in z for w in succ):
                    out.add(v)
            elif all(w in z for w in succ):
                out.add(v)
        return out

    zs: dict[int, set] = {}

    def level(i: int) -> set:
        if i < 0:
            out = set()
            for c in range(top + 1):
                out |= by_color[c] & cpre(zs[c])
            return out
        z = set(nodes) if i % 2 == 0 else set()
        while True:
            zs[i] = z
            nz = level(i - 1)
            if nz == z:
                return z
            z = nz

    return level(top)

"""Automata over atom assignments.

A formula is abstracted to a propositional LTL+Past skeleton over its
atoms (the frame constraints it mentions). The skeleton is translated to a
nondeterministic Büchi automaton by a tableau that guesses the next-step
value of every future node and tracks past nodes in the state, and the
Büchi automaton is determinized with Safra-Piterman trees into a
deterministic parity automaton. Letters are ints: bit k is the value of
atom k. Parity is max-even.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass
from itertools import product

import networkx as nx
import numpy as np

from lib.errors import ContractViolation, UnsupportedFragmentError
from lib.formula import (
    Always,
    And,
    BoolVar,
    Const,
    Eventually,
    Formula,
    Historically,
    Implies,
    LocalEq,
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
    children,
    rebuild,
    subformulas,
)
from lib.frames import BoolAt, Constraint, EqAt, FrameContext, OblAt, constraint_key
from lib.semantics import evaluate_lasso

logger = logging.getLogger(__name__)

# --------------------------------------------------------------------------- atoms


def atom_constraint(f: Formula, ctx: FrameContext) -> Constraint:
    if isinstance(f, BoolVar):
        return BoolAt(0, f.name)
    if isinstance(f, LocalEq):
        if not 0 <= f.j <= ctx.l:
            raise ContractViolation(f"{f} is outside the constraint universe (normalize_local first)")
        return EqAt(0, f.x, f.j, f.y)
    if isinstance(f, PastEq):
        if f.body not in ctx.nested_set:
            raise ContractViolation(f"nested formula of {f} is not tracked by the frame context")
        return OblAt(0, f.x, f.y, f.body)
    raise UnsupportedFragmentError("only past equality obligations can be atoms", f)


def atom_name(k: int) -> str:
    return f"a{k}"


def build_atoms(f: Formula, ctx: FrameContext) -> tuple[list[Constraint], Formula]:
    """Atoms of f as frame constraints, and f with atom k replaced by the boolean a<k>."""

    found: set[Constraint] = set()

    def collect(g: Formula) -> None:
        if isinstance(g, (BoolVar, LocalEq, Obligation)):
            found.add(atom_constraint(g, ctx))
            return
        for c in _kids(g):
            collect(c)

    collect(f)
    atoms = sorted(found, key=constraint_key)
    index = {c: k for k, c in enumerate(atoms)}

    def abstract(g: Formula) -> Formula:
        if isinstance(g, (BoolVar, LocalEq, Obligation)):
            return BoolVar(atom_name(index[atom_constraint(g, ctx)]))
        return g

    skeleton = _abstract(f, abstract)
    logger.debug("Skeleton %s over %d atom(s)", skeleton, len(atoms))
    return atoms, skeleton


def _kids(g: Formula) -> tuple[Formula, ...]:
    return () if isinstance(g, Obligation) else children(g)


def _abstract(f: Formula, fn) -> Formula:
    # obligations are atoms, so their bodies must not be rewritten first
    if isinstance(f, (BoolVar, LocalEq, Obligation)):
        return fn(f)
    kids = _kids(f)
    return rebuild(f, [_abstract(c, fn) for c in kids]) if kids else f


def letter_of(omega: frozenset, atoms: Sequence[Constraint]) -> int:
    return sum(1 << k for k, c in enumerate(atoms) if c in omega)


def letter_valuation(letter: int, n_atoms: int) -> Valuation:
    return Valuation({atom_name(k): bool(letter >> k & 1) for k in range(n_atoms)}, {})


def lasso_eval(u: Sequence[int], v: Sequence[int], skeleton: Formula, n_atoms: int) -> bool:
    """Skeleton at position 1 of u·v^ω, by direct evaluation on the unrolled lasso."""

    return evaluate_lasso(
        [letter_valuation(a, n_atoms) for a in u],
        [letter_valuation(a, n_atoms) for a in v],
        skeleton,
    )


# --------------------------------------------------------------------------- tableau

_FUTURE = (Next, WeakNext, Eventually, Always, Until, Release)
_MEMORY = (Prev, WeakPrev, Since, Trigger, Once, Historically)

NbaState = tuple  # (past memory or None at position 1, required values, counter, accepting)


@dataclass(frozen=True)
class NondetBuchi:
    n_atoms: int
    states: tuple[NbaState, ...]
    initial: tuple[int, ...]
    delta: dict[tuple[int, int], frozenset[int]]
    accepting: frozenset[int]

    @property
    def size(self) -> int:
        return len(self.states)

    def successors(self, q: int, letter: int) -> frozenset[int]:
        return self.delta.get((q, letter), frozenset())


class _Tableau:
    def __init__(self, skeleton: Formula, n_atoms: int) -> None:
        self.root = skeleton
        self.nodes = subformulas(skeleton)
        self.index = {f: k for k, f in enumerate(self.nodes)}
        self.future = [f for f in self.nodes if isinstance(f, _FUTURE)]
        self.memory = [f for f in self.nodes if isinstance(f, _MEMORY)]
        self.slot = {f: k for k, f in enumerate(self.memory)}
        self.eventualities = [f for f in self.nodes if isinstance(f, (Until, Eventually))]
        self.bits = {atom_name(k): k for k in range(n_atoms)}
        for f in self.nodes:
            if isinstance(f, BoolVar) and f.name not in self.bits:
                raise ValueError(f"Skeleton variable {f.name!r} is not an atom")
            if isinstance(f, (LocalEq, Obligation)):
                raise ValueError("Skeletons contain atoms only as booleans")

    def initial(self) -> NbaState:
        mem = None if self.memory else ()
        return (mem, ((self.index[self.root], True),), 0, not self.eventualities)

    def values(self, letter: int, mem: tuple | None, guess: dict[Formula, bool]) -> dict[Formula, bool]:
        val: dict[Formula, bool] = {}
        for f in self.nodes:
            if isinstance(f, Const):
                v = f.value
            elif isinstance(f, BoolVar):
                v = bool(letter >> self.bits[f.name] & 1)
            elif isinstance(f, Not):
                v = not val[f.arg]
            elif isinstance(f, And):
                v = val[f.left] and val[f.right]
            elif isinstance(f, Or):
                v = val[f.left] or val[f.right]
            elif isinstance(f, Implies):
                v = (not val[f.left]) or val[f.right]
            elif isinstance(f, (Next, WeakNext)):
                v = guess[f]
            elif isinstance(f, Eventually):
                v = val[f.arg] or guess[f]
            elif isinstance(f, Always):
                v = val[f.arg] and guess[f]
            elif isinstance(f, Until):
                v = val[f.right] or (val[f.left] and guess[f])
            elif isinstance(f, Release):
                v = val[f.right] and (val[f.left] or guess[f])
            else:
                v = self._past(f, val, mem)
            val[f] = v
        return val

    def _past(self, f: Formula, val: dict[Formula, bool], mem: tuple | None) -> bool:
        start = mem is None
        before = None if start else mem[self.slot[f]]
        if isinstance(f, Prev):
            return False if start else before
        if isinstance(f, WeakPrev):
            return True if start else before
        if isinstance(f, Since):
            return val[f.right] or (val[f.left] and (False if start else before))
        if isinstance(f, Trigger):
            return val[f.right] and (val[f.left] or (True if start else before))
        if isinstance(f, Once):
            return val[f.arg] or (False if start else before)
        if isinstance(f, Historically):
            return val[f.arg] and (True if start else before)
        raise TypeError(f"Cannot evaluate {f!r}")

    def step(self, state: NbaState, letter: int) -> set[NbaState]:
        mem, req, k, _ = state
        m = len(self.eventualities)
        out: set[NbaState] = set()
        for bits in product((False, True), repeat=len(self.future)):
            guess = dict(zip(self.future, bits))
            val = self.values(letter, mem, guess)
            if any(val[self.nodes[i]] != want for i, want in req):
                continue
            wanted: dict[int, bool] = {}
            clash = False
            for f in self.future:
                target = f.arg if isinstance(f, (Next, WeakNext)) else f
                i = self.index[target]
                if wanted.setdefault(i, guess[f]) != guess[f]:
                    clash = True
                    break
            if clash:
                continue
            new_mem = tuple(val[f.arg] if isinstance(f, (Prev, WeakPrev)) else val[f] for f in self.memory)
            if m == 0:
                k2, flag = 0, True
            else:
                k2 = k
                while k2 < m and self._fulfilled(self.eventualities[k2], val):
                    k2 += 1
                flag = k2 == m
                if flag:
                    k2 = 0
            out.add((new_mem, tuple(sorted(wanted.items())), k2, flag))
        return out

    @staticmethod
    def _fulfilled(f: Formula, val: dict[Formula, bool]) -> bool:
        goal = f.right if isinstance(f, Until) else f.arg
        return (not val[f]) or val[goal]


def ltl_past_to_nba(skeleton: Formula, n_atoms: int) -> NondetBuchi:
    """Büchi automaton for the skeleton at position 1, past operators starting empty."""

    tab = _Tableau(skeleton, n_atoms)
    init = tab.initial()
    ids: dict[NbaState, int] = {init: 0}
    states: list[NbaState] = [init]
    delta: dict[tuple[int, int], frozenset[int]] = {}
    queue = deque([init])
    while queue:
        s = queue.popleft()
        q = ids[s]
        for letter in range(1 << n_atoms):
            succ = set()
            for t in tab.step(s, letter):
                if t not in ids:
                    ids[t] = len(states)
                    states.append(t)
                    queue.append(t)
                succ.add(ids[t])
            if succ:
                delta[(q, letter)] = frozenset(succ)
    accepting = frozenset(i for i, s in enumerate(states) if s[3])
    logger.info("Tableau automaton: %d state(s), %d accepting", len(states), len(accepting))
    return NondetBuchi(n_atoms, tuple(states), (0,), delta, accepting)


def nba_accepts_lasso(nba: NondetBuchi, u: Sequence[int], v: Sequence[int]) -> bool:
    """Membership of u·v^ω by an accepting cycle in the product with the lasso."""

    if not v:
        raise ValueError("A lasso needs a nonempty cycle")
    word = list(u) + list(v)
    total = len(word)

    def nxt(pos: int) -> int:
        return pos + 1 if pos + 1 < total else len(u)

    g = nx.DiGraph()
    start = [(q, 0) for q in nba.initial]
    g.add_nodes_from(start)
    queue = deque(start)
    while queue:
        q, pos = queue.popleft()
        for q2 in nba.successors(q, word[pos]):
            node = (q2, nxt(pos))
            if node not in g:
                queue.append(node)
            g.add_edge((q, pos), node)
    for scc in nx.strongly_connected_components(g):
        some = next(iter(scc))
        if len(scc) == 1 and not g.has_edge(some, some):
            continue
        if any(q in nba.accepting for q, _ in scc):
            return True
    return False


# --------------------------------------------------------------------------- determinization

SafraTree = tuple[tuple[frozenset[int], int], ...]  # (label, parent index) in age order


@dataclass(frozen=True)
class DetParity:
    n_atoms: int
    states: tuple
    initial: int
    delta: np.ndarray  # (states, letters) -> successor
    colors: np.ndarray  # max-even

    @property
    def size(self) -> int:
        return len(self.states)

    def run(self, letters: Sequence[int], start: int | None = None) -> int:
        q = self.initial if start is None else start
        for a in letters:
            q = int(self.delta[q, a])
        return q


def _safra_step(nba: NondetBuchi, tree: SafraTree, letter: int, neutral: int) -> tuple[SafraTree, int]:
    labels = [set(lab) for lab, _ in tree]
    parents = [p for _, p in tree]
    for i in range(len(tree)):
        fresh = labels[i] & nba.accepting
        if fresh:
            labels.append(set(fresh))
            parents.append(i)
    labels = [set().union(*(nba.successors(q, letter) for q in lab)) for lab in labels]
    kids: dict[int, list[int]] = {i: [] for i in range(len(labels))}
    for i, p in enumerate(parents):
        if p >= 0:
            kids[p].append(i)

    def horizontal(i: int, allowed: set[int]) -> None:
        labels[i] &= allowed
        taken: set[int] = set()
        for c in kids[i]:
            horizontal(c, labels[i] - taken)
            taken |= labels[c]

    roots = [i for i, p in enumerate(parents) if p < 0]
    for r in roots:
        horizontal(r, labels[r])
    removed = {i for i, lab in enumerate(labels) if not lab}
    green: set[int] = set()

    def descendants(i: int) -> list[int]:
        out = []
        for c in kids[i]:
            out.append(c)
            out.extend(descendants(c))
        return out

    def vertical(i: int) -> None:
        if i in removed:
            return
        live = [c for c in kids[i] if c not in removed]
        if live and set().union(*(labels[c] for c in live)) == labels[i]:
            green.add(i)
            removed.update(descendants(i))
            return
        for c in live:
            vertical(c)

    for r in roots:
        vertical(r)
    keep = [i for i in range(len(labels)) if i not in removed]
    renumber = {old: k for k, old in enumerate(keep)}
    new_tree = tuple((frozenset(labels[i]), renumber[parents[i]] if parents[i] >= 0 else -1) for i in keep)
    priority = min([neutral] + [2 * (i + 1) for i in green] + [2 * (i + 1) - 1 for i in removed])
    return new_tree, priority


def _compress(colors: list[int]) -> dict[int, int]:
    """Order- and parity-preserving renumbering onto the smallest colors."""

    mapping: dict[int, int] = {}
    current = None
    for c in sorted(set(colors)):
        if current is None:
            current = c % 2
        elif c % 2 != current % 2:
            current += 1
        mapping[c] = current
    return mapping


def determinize_to_parity(nba: NondetBuchi) -> DetParity:
    """Safra-Piterman trees; transition priorities are moved onto target states."""

    neutral = 4 * max(nba.size, 1) + 3
    top = neutral + 1
    init_tree: SafraTree = ((frozenset(nba.initial), -1),) if nba.initial else ()
    init = (init_tree, neutral)
    ids = {init: 0}
    states = [init]
    rows: list[list[int]] = []
    queue = deque([init])
    cache: dict[tuple[SafraTree, int], tuple[SafraTree, int]] = {}
    while queue:
        tree, _ = queue.popleft()
        row = []
        for letter in range(1 << nba.n_atoms):
            key = (tree, letter)
            if key not in cache:
                cache[key] = _safra_step(nba, tree, letter, neutral)
            target = cache[key]
            if target not in ids:
                ids[target] = len(states)
                states.append(target)
                queue.append(target)
            row.append(ids[target])
        rows.append(row)
    raw = [top - p for _, p in states]
    mapping = _compress(raw)
    colors = np.array([mapping[c] for c in raw], dtype=np.int64)
    delta = np.array(rows, dtype=np.int64).reshape(len(states), 1 << nba.n_atoms)
    logger.info("Parity automaton: %d state(s), colors %s", len(states), sorted(set(colors.tolist())))
    return DetParity(nba.n_atoms, tuple(states), 0, delta, colors)


def build_dpa(skeleton: Formula, n_atoms: int) -> DetParity:
    return determinize_to_parity(ltl_past_to_nba(skeleton, n_atoms))


# --------------------------------------------------------------------------- analysis


def accepts_lasso(dpa: DetParity, u: Sequence[int], v: Sequence[int]) -> bool:
    if not v:
        raise ValueError("A lasso needs a nonempty cycle")
    q = dpa.run(u)
    seen: dict[tuple[int, int], int] = {}
    trail: list[int] = []
    pos = 0
    while (q, pos) not in seen:
        seen[(q, pos)] = len(trail)
        trail.append(q)
        q = int(dpa.delta[q, v[pos]])
        pos = (pos + 1) % len(v)
    cycle = trail[seen[(q, pos)] :]
    return int(dpa.colors[cycle].max()) % 2 == 0


def state_graph(dpa: DetParity) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(dpa.size))
    for q in range(dpa.size):
        for target in set(dpa.delta[q].tolist()):
            g.add_edge(q, target)
    return g


def _cycles_with_parity(dpa: DetParity, g: nx.DiGraph, parity: int) -> set[int]:
    """States on some cycle whose maximal color has the given parity."""

    out: set[int] = set()
    colors = dpa.colors
    for c in sorted({int(x) for x in colors}):
        if c % 2 != parity:
            continue
        sub = g.subgraph([q for q in g if colors[q] <= c])
        for scc in nx.strongly_connected_components(sub):
            some = next(iter(scc))
            if len(scc) == 1 and not sub.has_edge(some, some):
                continue
            if any(colors[q] == c for q in scc):
                out |= scc
    return out


def _can_reach(g: nx.DiGraph, targets: set[int]) -> set[int]:
    seen = set(targets)
    queue = deque(targets)
    while queue:
        q = queue.popleft()
        for p in g.predecessors(q):
            if p not in seen:
                seen.add(p)
                queue.append(p)
    return seen


def nonempty_states(dpa: DetParity) -> frozenset[int]:
    """States from which some continuation is accepted."""

    g = state_graph(dpa)
    return frozenset(_can_reach(g, _cycles_with_parity(dpa, g, 0)))


def universal_states(dpa: DetParity) -> frozenset[int]:
    """States from which every continuation is accepted."""

    g = state_graph(dpa)
    return frozenset(set(g) - _can_reach(g, _cycles_with_parity(dpa, g, 1)))


def to_dot(automaton: NondetBuchi | DetParity, name: str = "A") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    width = automaton.n_atoms
    edges: dict[tuple[int, int], list[str]] = {}
    if isinstance(automaton, NondetBuchi):
        for q in range(automaton.size):
            shape = "doublecircle" if q in automaton.accepting else "circle"
            lines.append(f'  q{q} [shape={shape}, label="q{q}"];')
        for (q, letter), targets in sorted(automaton.delta.items()):
            for t in sorted(targets):
                edges.setdefault((q, t), []).append(format(letter, f"0{width}b") if width else "-")
        starts = automaton.initial
    else:
        for q in range(automaton.size):
            lines.append(f'  q{q} [shape=circle, label="q{q} / {int(automaton.colors[q])}"];')
        for q in range(automaton.size):
            for letter, t in enumerate(automaton.delta[q].tolist()):
                edges.setdefault((q, t), []).append(format(letter, f"0{width}b") if width else "-")
        starts = (automaton.initial,)
    for q in starts:
        lines.append(f"  init{q} [shape=point]; init{q} -> q{q};")
    for (q, t), letters in sorted(edges.items()):
        lines.append(f'  q{q} -> q{t} [label="{",".join(letters)}"];')
    lines.append("}")
    return "\n".join(lines)

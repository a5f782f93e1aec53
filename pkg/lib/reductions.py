"""From single-sided formulas to single-sided VASS games.

Environment states are (level, automaton state, frame); the environment
picks the booleans of the next position, which leads to a system state
(level, automaton state, frame, choice). The system then picks a next frame
with those booleans; the step adds the points of increment of the old frame
and subtracts the points of decrement of the new one. Counters are indexed
by variable sets, or by repetition histories in nested mode.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, deque
from dataclasses import dataclass
from itertools import chain, combinations

import pandas as pd

from lib.automaton import DetParity, build_atoms, build_dpa, letter_of, nonempty_states, universal_states
from lib.errors import UnsupportedFragmentError
from lib.formula import Formula, Signature
from lib.fragments import classify_fragment, first_violation
from lib.frames import (
    BOTTOM,
    NESTED,
    SIMPLE,
    Frame,
    FrameContext,
    format_frame,
    layout_of,
    one_step_consistent,
    points_of_decrement,
    points_of_increment,
    simple_counters,
    successors,
)
from lib.rewrites import check_single_sided
from lib.vass import ENV, SYS, Transition, VassGame, VassState

logger = logging.getLogger(__name__)

ACCEPT = "__accept"
REJECT = "__reject"


def clamp_level(e: int, l: int) -> int:
    """⌈e⌉_l: levels stop growing once the window is full."""

    return min(e, l)


@dataclass(frozen=True)
class StateInfo:
    level: int
    automaton_state: int
    frame: int  # index into ReductionTrace.frames
    choice: tuple[str, ...] | None = None  # booleans picked by the environment, on system states


@dataclass(frozen=True)
class ReductionTrace:
    states: dict[str, StateInfo]
    frames: tuple[Frame, ...]
    counters: tuple[str, ...]
    automaton_states: int
    stats: pd.DataFrame  # columns: level, frames, env_states, sys_states, transitions

    def to_json(self) -> str:
        return json.dumps(
            {
                "counters": list(self.counters),
                "automaton_states": self.automaton_states,
                "states": {
                    name: {
                        "level": info.level,
                        "automaton_state": info.automaton_state,
                        "frame": format_frame(self.frames[info.frame]).splitlines(),
                        "choice": None if info.choice is None else list(info.choice),
                    }
                    for name, info in self.states.items()
                },
                "stats": self.stats.to_dict(orient="records"),
            },
            indent=2,
        )


def _require_single_sided(sig: Signature) -> None:
    if not check_single_sided(sig):
        bad = sorted(sig.env_datas | sig.sys_bools)
        raise UnsupportedFragmentError(
            "single-sided games: the environment owns only booleans, the system only data", ", ".join(bad)
        )


def _require(f: Formula, flags, *names: str) -> None:
    for name in names:
        if not getattr(flags, name):
            raise UnsupportedFragmentError(name, first_violation(f, name))


def lrv_to_vass(f: Formula, sig: Signature) -> tuple[VassGame, ReductionTrace]:
    """Reduction for LRV[⊤,≈,←]: f must be local-normalized and free of disequalities."""

    _require_single_sided(sig)
    _require(f, classify_fragment(f, sig), "no_fut_obl", "no_diseq", "no_nested")
    ctx = FrameContext.for_formula(f, sig, mode=SIMPLE)
    return _construct(f, ctx)


def lrv_to_vass_nested(f: Formula, sig: Signature) -> tuple[VassGame, ReductionTrace]:
    """Reduction for LRV[⟨X⁻¹,S⟩,≈,←], with repetition-history counters."""

    _require_single_sided(sig)
    _require(f, classify_fragment(f, sig), "no_fut_obl", "no_diseq", "nested_past_only")
    ctx = FrameContext.for_formula(f, sig, mode=NESTED)
    return _construct(f, ctx)


def _subsets(items: tuple[str, ...]) -> list[frozenset[str]]:
    return [frozenset(c) for c in chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))]


def _signed(counter: Counter[str]) -> tuple[tuple[str, int], ...]:
    return tuple(sorted((k, v) for k, v in counter.items() if v))


class _Builder:
    def __init__(self, ctx: FrameContext, dpa: DetParity, atoms: list) -> None:
        self.ctx = ctx
        self.dpa = dpa
        self.atoms = atoms
        self.nonempty = nonempty_states(dpa)
        self.universal = universal_states(dpa)
        self.frames: list[Frame] = []
        self.frame_ids: dict[Frame, int] = {}
        self.env_keys: dict[tuple, str] = {}
        self.infos: dict[str, StateInfo] = {}
        self.edges: set[tuple[str, str, tuple[tuple[str, int], ...]]] = set()
        self.queue: deque[str] = deque()

    def frame_id(self, fr: Frame) -> int:
        if fr not in self.frame_ids:
            self.frame_ids[fr] = len(self.frames)
            self.frames.append(fr)
        return self.frame_ids[fr]

    def key(self, e: int, q: int, fr: Frame) -> tuple:
        if e < self.ctx.l or fr.is_bottom:
            return (e, q, fr)
        # at full level only levels 1..l, the increments and the last formula set shape the future;
        # the newest booleans stay in the key so the recorded frame matches the choice that led here
        lay = layout_of(self.ctx, fr)
        last_phi = lay.phi[-1] if self.ctx.mode == NESTED else None
        newest = lay.bools[-1] if lay.bools else frozenset()
        return (e, q, lay.drop_first(), newest, _signed(points_of_increment(self.ctx, fr)), last_phi)

    def env_state(self, e: int, q: int, fr: Frame) -> str:
        if q not in self.nonempty:
            return REJECT
        if q in self.universal:
            return ACCEPT
        k = self.key(e, q, fr)
        if k not in self.env_keys:
            name = f"e{e}:q{q}:f{self.frame_id(fr)}"
            self.env_keys[k] = name
            self.infos[name] = StateInfo(e, q, self.frame_ids[fr])
            self.queue.append(name)
        return self.env_keys[k]

    def run(self) -> None:
        ctx = self.ctx
        choices = _subsets(ctx.bvars)
        self.env_state(-1, self.dpa.initial, BOTTOM)
        while self.queue:
            name = self.queue.popleft()
            info = self.infos[name]
            fr = self.frames[info.frame]
            inc = points_of_increment(ctx, fr)
            for v in choices:
                choice = tuple(sorted(v))
                sys_name = f"{name}:V={'+'.join(choice)}"
                self.infos[sys_name] = StateInfo(info.level, info.automaton_state, info.frame, choice)
                self.edges.add((name, sys_name, ()))
                for nxt in successors(ctx, fr, v):
                    if fr.is_bottom and ctx.mode == NESTED and not one_step_consistent(ctx, fr, nxt):
                        continue
                    q = info.automaton_state
                    if nxt.e == ctx.l:
                        q = int(self.dpa.delta[q, letter_of(nxt.omega, self.atoms)])
                    update = Counter(inc)
                    update.subtract(points_of_decrement(ctx, nxt))
                    target = self.env_state(clamp_level(info.level + 1, ctx.l), q, nxt)
                    self.edges.add((sys_name, target, _signed(update)))


def _construct(f: Formula, ctx: FrameContext) -> tuple[VassGame, ReductionTrace]:
    atoms, skeleton = build_atoms(f, ctx)
    dpa = build_dpa(skeleton, len(atoms))
    logger.info("Automaton: %d atom(s), %d state(s); frame context l=%d, mode %s", len(atoms), dpa.size, ctx.l, ctx.mode)
    b = _Builder(ctx, dpa, atoms)
    b.run()

    used = {c for (_, _, upd) in b.edges for c, _ in upd}
    order = simple_counters(ctx) if ctx.mode == SIMPLE else sorted(used)
    counters = tuple(c for c in order if c in used)
    index = {c: k for k, c in enumerate(counters)}

    def vector(upd: tuple[tuple[str, int], ...]) -> tuple[int, ...]:
        out = [0] * len(counters)
        for c, n in upd:
            out[index[c]] = n
        return tuple(out)

    states = [
        VassState(name, SYS if info.choice is not None else ENV, int(dpa.colors[info.automaton_state]))
        for name, info in b.infos.items()
    ]
    transitions = [Transition(src, dst, vector(upd)) for (src, dst, upd) in sorted(b.edges)]
    targets = {dst for (_, dst, _) in b.edges}
    zero = (0,) * len(counters)
    for sink, color in ((ACCEPT, 0), (REJECT, 1)):
        if sink in targets or not b.infos:
            states.append(VassState(sink, ENV, color))
            transitions.append(Transition(sink, sink, zero))
    initial = next(iter(b.infos), REJECT if dpa.initial not in b.nonempty else ACCEPT)
    game = VassGame(tuple(states), counters, tuple(transitions), initial, zero)

    rows = []
    for e in range(-1, ctx.l + 1):
        at = [n for n, i in b.infos.items() if i.level == e]
        env = [n for n in at if b.infos[n].choice is None]
        sys = [n for n in at if b.infos[n].choice is not None]
        sys_set = set(sys)
        rows.append(
            {
                "level": e,
                "frames": len({b.infos[n].frame for n in env}),
                "env_states": len(env),
                "sys_states": len(sys),
                "transitions": sum(1 for (src, _, _) in b.edges if src in sys_set),
            }
        )
    stats = pd.DataFrame(rows, columns=["level", "frames", "env_states", "sys_states", "transitions"])
    trace = ReductionTrace(b.infos, tuple(b.frames), counters, dpa.size, stats)
    logger.info(
        "VASS game: %d state(s), %d transition(s), %d counter(s)", len(states), len(transitions), len(counters)
    )
    return game, trace

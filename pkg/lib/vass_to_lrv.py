"""Simulating single-sided VASS games with single-sided formula games.

Every position of a model carries one environment transition (a boolean
p_<k>) followed by one system transition (the data variable t_<k> equal to
ct_s). A counter c is the number of values seen in x_c but never in xbar_c.
"""

from __future__ import annotations

import logging
import re

from lib.formula import (
    FALSE,
    TRUE,
    Always,
    BoolVar,
    Eventually,
    Formula,
    Implies,
    LocalEq,
    Next,
    Not,
    PastEq,
    Signature,
    conj,
    disj,
)
from lib.vass import ENV, SYS, Transition, VassGame, VassState, expand_vector_updates, validate, with_deadlock_sinks

logger = logging.getLogger(__name__)

CT_S = "ct_s"


# --------------------------------------------------------------------------- normalization


def _fresh(base: str, taken: set[str]) -> str:
    name, n = base, 0
    while name in taken:
        n += 1
        name = f"{base}{n}"
    taken.add(name)
    return name


def normalize_vass_for_lrv(game: VassGame) -> VassGame:
    """Unit updates, environment-owned start, strict alternation and zero initial counters."""

    diagnostics = validate(game)
    if not diagnostics.ok:
        raise ValueError("; ".join(diagnostics.errors))
    game = expand_vector_updates(with_deadlock_sinks(game))
    taken = {s.name for s in game.states}
    states = list(game.states)
    transitions: list[Transition] = []
    zero = (0,) * len(game.counters)
    initial = game.initial_state

    if game.owner(initial) == SYS:
        start = _fresh("__start", taken)
        states.append(VassState(start, ENV, game.color(initial)))
        transitions.append(Transition(start, initial, zero))
        initial = start
        logger.debug("Prepended environment state %s", start)

    for t in game.transitions:
        owner = game.owner(t.source)
        if owner != game.owner(t.target):
            transitions.append(t)
            continue
        dummy = _fresh(f"__mid_{t.source}_{t.target}", taken)
        states.append(VassState(dummy, SYS if owner == ENV else ENV, game.color(t.source)))
        transitions.append(Transition(t.source, dummy, t.update))
        transitions.append(Transition(dummy, t.target, zero))

    if any(game.initial_counters):
        steps = [c for c, v in enumerate(game.initial_counters) for _ in range(v)]
        prev = _fresh("__pre", taken)
        first = prev
        states.append(VassState(prev, ENV, 0))
        for k, c in enumerate(steps):
            sys_state = _fresh(f"__pre{k}s", taken)
            states.append(VassState(sys_state, SYS, 0))
            transitions.append(Transition(prev, sys_state, zero))
            bump = tuple(1 if m == c else 0 for m in range(len(zero)))
            if k == len(steps) - 1:
                transitions.append(Transition(sys_state, initial, bump))
            else:
                prev = _fresh(f"__pre{k + 1}", taken)
                states.append(VassState(prev, ENV, 0))
                transitions.append(Transition(sys_state, prev, bump))
        initial = first
        logger.debug("Added a preamble of %d increment(s)", len(steps))

    out = game.replace(states=tuple(states), transitions=tuple(transitions), initial_state=initial, initial_counters=zero)
    return game if out == game else out


def _is_normalized(game: VassGame) -> str | None:
    if game.owner(game.initial_state) != ENV:
        return "the initial state must belong to the environment"
    if any(game.initial_counters):
        return "initial counters must be zero"
    for t in game.transitions:
        if game.owner(t.source) == game.owner(t.target):
            return f"players must alternate ({t.source} -> {t.target})"
        if sum(abs(u) for u in t.update) > 1:
            return f"updates must be unit steps ({t.source} -> {t.target})"
    return None


# --------------------------------------------------------------------------- formula


def _ident(name: str) -> str:
    return re.sub(r"\W", "_", name)


def counter_vars(counter: str) -> tuple[str, str]:
    base = _ident(counter)
    return f"x_{base}", f"xbar_{base}"


def counter_inc(x: str, xb: str) -> Formula:
    return Next(
        Not(disj(PastEq(x, x, TRUE), PastEq(x, xb, TRUE), PastEq(xb, x, TRUE), PastEq(xb, xb, TRUE), LocalEq(x, 0, xb)))
    )


def counter_dec(x: str, xb: str) -> Formula:
    return Next(conj(LocalEq(x, 0, xb), PastEq(x, x, TRUE), Not(PastEq(x, xb, TRUE))))


def counter_keep(x: str, xb: str) -> Formula:
    return Next(conj(PastEq(x, x, TRUE), Not(PastEq(xb, x, TRUE)), Not(PastEq(xb, xb, TRUE))))


def vass_to_lrv(game: VassGame) -> tuple[Signature, Formula]:
    """Environment mistakes or system duties: the system wins this game iff it wins the VASS game."""

    diagnostics = validate(game)
    if not diagnostics.ok:
        raise ValueError("; ".join(diagnostics.errors))
    problem = _is_normalized(game)
    if problem:
        raise ValueError(f"normalize_vass_for_lrv first: {problem}")

    env_t = [k for k, t in enumerate(game.transitions) if game.owner(t.source) == ENV]
    sys_t = [k for k, t in enumerate(game.transitions) if game.owner(t.source) == SYS]
    p = {k: f"p_{k}" for k in env_t}
    tv = {k: f"t_{k}" for k in sys_t}
    cvars = [counter_vars(c) for c in game.counters]

    def picked(k: int) -> Formula:
        return BoolVar(p[k]) if k in p else LocalEq(tv[k], 0, CT_S)

    def follows(k: int, after: int) -> bool:
        return game.transitions[after].target == game.transitions[k].source

    tr = game.transitions

    # mistakes of the environment
    none = Eventually(conj(Not(BoolVar(p[k])) for k in env_t))
    many = Eventually(disj(conj(BoolVar(p[a]), BoolVar(p[b])) for i, a in enumerate(env_t) for b in env_t[i + 1 :]))
    bad_start = disj(BoolVar(p[k]) for k in env_t if tr[k].source != game.initial_state)
    bad_follow = disj(
        Eventually(
            conj(
                picked(t),
                [Not(picked(u)) for u in sys_t if u != t],
                disj(Next(BoolVar(p[u])) for u in env_t if not follows(u, t)),
            )
        )
        for t in sys_t
    )
    phi_e = disj(none, many, bad_start, bad_follow)

    # correct play of the system
    at_least = Always(disj(picked(t) for t in sys_t))
    at_most = Always(conj(Not(conj(picked(a), picked(b))) for i, a in enumerate(sys_t) for b in sys_t[i + 1 :]))
    follow = conj(Always(Implies(BoolVar(p[t]), disj(picked(u) for u in sys_t if follows(u, t)))) for t in env_t)
    zero = conj(LocalEq(x, 0, xb) for x, xb in cvars)

    updates = []
    for t in sys_t:
        parts = []
        for c, (x, xb) in enumerate(cvars):
            u = tr[t].update[c]
            parts.append(counter_inc(x, xb) if u > 0 else counter_dec(x, xb) if u < 0 else counter_keep(x, xb))
        updates.append(Implies(picked(t), conj(parts)))
    update = Always(conj(updates))

    colors = sorted({game.color(t.source) for t in tr})
    parity = disj(
        conj(
            Always(Eventually(disj(picked(k) for k, t in enumerate(tr) if game.color(t.source) == j))),
            Eventually(Always(conj(Not(picked(k)) for k, t in enumerate(tr) if game.color(t.source) > j))),
        )
        for j in colors
        if j % 2 == 0
    )
    phi_s = conj(at_least, at_most, follow, zero, update, parity)

    sig = Signature.of(
        env_bools=p.values(),
        sys_datas=[*tv.values(), CT_S, *(v for pair in cvars for v in pair)],
    )
    f = disj(phi_e, phi_s)
    if f in (TRUE, FALSE):
        logger.warning("VASS game collapsed to the constant %s", f)
    logger.info("Formula over %d environment boolean(s) and %d system data variable(s)", len(p), len(sig.sys_datas))
    return sig, f

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import pandas as pd

from lib.energy_service import Verdict, solve_energy
from lib.errors import UnsupportedFragmentError
from lib.formula import Formula, Signature
from lib.fragments import FragmentFlags, classify_fragment, first_violation
from lib.reductions import ReductionTrace, lrv_to_vass, lrv_to_vass_nested
from lib.rewrites import check_single_sided, normalize_local, remove_disequalities, to_nnf
from lib.settings import DEFAULT_CAP_SCHEDULE
from lib.vass import VassGame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RealizabilityResult:
    verdict: Verdict
    fragment: FragmentFlags
    signature: Signature  # with the fresh witnesses of removed disequalities
    formula: Formula  # as handed to the reduction
    game: VassGame
    trace: ReductionTrace
    data: pd.DataFrame  # arena sizes per cap


def prepare(f: Formula, sig: Signature) -> tuple[Signature, Formula]:
    """Local tests forward only, negation normal form, no disequality obligations."""

    return remove_disequalities(to_nnf(normalize_local(f)), sig)


def reduce_formula(f: Formula, sig: Signature) -> tuple[Signature, Formula, FragmentFlags, VassGame, ReductionTrace]:
    if not check_single_sided(sig):
        bad = ", ".join(sorted(sig.env_datas | sig.sys_bools))
        raise UnsupportedFragmentError("single-sided games: the environment owns only booleans, the system only data", bad)
    flags = classify_fragment(f, sig)
    if not flags.no_fut_obl:
        raise UnsupportedFragmentError("no_fut_obl", first_violation(f, "no_fut_obl"))
    sig2, g = prepare(f, sig)
    flags2 = classify_fragment(g, sig2)
    if flags2.no_nested:
        game, trace = lrv_to_vass(g, sig2)
    elif flags2.nested_past_only:
        game, trace = lrv_to_vass_nested(g, sig2)
    else:
        raise UnsupportedFragmentError("nested_past_only", first_violation(g, "nested_past_only"))
    return sig2, g, flags, game, trace


def realizability(
    f: Formula,
    sig: Signature,
    *,
    caps: Sequence[int] = DEFAULT_CAP_SCHEDULE,
    assume_complete: bool = False,
) -> RealizabilityResult:
    sig2, g, flags, game, trace = reduce_formula(f, sig)
    logger.info("Solving %s game with %d state(s)", flags.name, len(game.states))
    result = solve_energy(game, caps, assume_complete=assume_complete)
    logger.info("Verdict: %s", result.verdict.kind)
    return RealizabilityResult(
        verdict=result.verdict,
        fragment=flags,
        signature=sig2,
        formula=g,
        game=game,
        trace=trace,
        data=result.data,
    )

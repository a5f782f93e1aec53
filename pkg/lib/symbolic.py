from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from lib.automaton import build_atoms, lasso_eval, letter_of
from lib.formula import Formula, Model
from lib.frames import BOTTOM, Frame, FrameContext, frame_sequence, one_step_consistent

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SymbolicLasso:
    """prefix starts with the level-0 frame; cycle holds level-l frames only."""

    prefix: tuple[Frame, ...]
    cycle: tuple[Frame, ...]

    def __post_init__(self) -> None:
        if not self.cycle:
            raise ValueError("A symbolic lasso needs a nonempty cycle")

    def is_consistent(self, ctx: FrameContext) -> bool:
        frames = list(self.prefix) + list(self.cycle)
        if any(fr.e != ctx.l for fr in self.cycle):
            return False
        prev = BOTTOM
        for fr in frames + [self.cycle[0]]:
            if not one_step_consistent(ctx, prev, fr):
                return False
            prev = fr
        return True

    def level_frames(self, ctx: FrameContext) -> tuple[list[Frame], list[Frame]]:
        """The l-frames of the prefix and of the cycle; l-frame k describes position k."""

        return [fr for fr in self.prefix if fr.e == ctx.l], list(self.cycle)


def symbolic_eval_lasso(rho: SymbolicLasso, f: Formula, ctx: FrameContext) -> bool:
    """ρ, 1 ⊨_symb f, where a constraint holds at position i iff it belongs to ρ(i)."""

    atoms, skeleton = build_atoms(f, ctx)
    u, v = rho.level_frames(ctx)
    return lasso_eval([letter_of(fr.omega, atoms) for fr in u], [letter_of(fr.omega, atoms) for fr in v], skeleton, len(atoms))


def realizes(model: Model, frames: Sequence[Frame], ctx: FrameContext) -> bool:
    """Whether the l-frames extracted from the model are exactly the given frames."""

    if len(model) != len(frames) + ctx.l:
        raise ValueError(f"a model of length {len(model)} realizes {len(model) - ctx.l} l-frames, got {len(frames)}")
    extracted = [fr for fr in frame_sequence(model, ctx) if fr.e == ctx.l]
    return extracted == list(frames)


def lasso_from_model(model: Model, ctx: FrameContext) -> SymbolicLasso:
    """Symbolic lasso of the model whose last valuation repeats forever."""

    if len(model) == 0:
        raise ValueError("An empty model has no constant tail")
    tail = model.valuations[-1]
    limit = len(model) + ctx.l + 2 * len(ctx.members) + 4
    ext = model
    while len(ext) <= limit:
        ext = ext.extend(tail)
        frames = frame_sequence(ext, ctx)
        last, before = frames[-1], frames[-2]
        if last.e == ctx.l and before == last:
            first = len(frames) - 1
            while first > 0 and frames[first - 1] == last:
                first -= 1
            logger.debug("Constant tail settles after %d frame(s)", first)
            return SymbolicLasso(prefix=tuple(frames[:first]), cycle=(last,))
    raise RuntimeError("frames along a constant tail did not settle")

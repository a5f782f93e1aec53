from __future__ import annotations

from dataclasses import dataclass

from lib.formula import (
    And,
    BoolVar,
    Const,
    Eventually,
    Formula,
    FutEq,
    FutNeq,
    Historically,
    Implies,
    LocalEq,
    Not,
    Obligation,
    Once,
    Or,
    PastEq,
    PastNeq,
    Prev,
    Signature,
    Since,
    Trigger,
    WeakPrev,
    subformulas,
)
from lib.rewrites import check_single_sided

# nested formulas built from past operators only; Once, Historically, WY and T derive from Y and S
_PAST_GRAMMAR = (Const, BoolVar, PastEq, PastNeq, And, Or, Not, Implies, Prev, WeakPrev, Since, Trigger, Once, Historically)


@dataclass(frozen=True)
class FragmentFlags:
    no_nested: bool  # ⊤
    no_diseq: bool  # ≈
    no_past_obl: bool  # →
    no_fut_obl: bool  # ←
    nested_past_only: bool  # ⟨X⁻¹,S⟩
    nested_F_allowed: bool  # ⟨F⟩
    single_sided: bool = True

    @property
    def name(self) -> str:
        """Tightest fragment name, e.g. LRV[⊤,≈,←]."""

        parts: list[str] = []
        if self.no_nested:
            parts.append("⊤")
        elif self.nested_past_only:
            parts.append("⟨X⁻¹,S⟩")
        elif self.nested_F_allowed:
            parts.append("⟨F⟩")
        if self.no_diseq:
            parts.append("≈")
        if self.no_fut_obl:
            parts.append("←")
        if self.no_past_obl:
            parts.append("→")
        return f"LRV[{','.join(parts)}]"

    def as_dict(self) -> dict[str, bool | str]:
        return {
            "no_nested": self.no_nested,
            "no_diseq": self.no_diseq,
            "no_past_obl": self.no_past_obl,
            "no_fut_obl": self.no_fut_obl,
            "nested_past_only": self.nested_past_only,
            "nested_F_allowed": self.nested_F_allowed,
            "single_sided": self.single_sided,
            "fragment": self.name,
        }


def _in_past_grammar(body: Formula, *, allow_f: bool) -> bool:
    for g in subformulas(body):
        if isinstance(g, LocalEq):
            if g.j > 0:
                return False
        elif isinstance(g, Eventually):
            if not allow_f:
                return False
        elif not isinstance(g, _PAST_GRAMMAR):
            return False
    return True


def nested_bodies(f: Formula) -> list[Formula]:
    return [g.body for g in subformulas(f) if isinstance(g, Obligation)]


def classify_fragment(f: Formula, sig: Signature | None = None) -> FragmentFlags:
    nodes = subformulas(f)
    bodies = nested_bodies(f)
    return FragmentFlags(
        no_nested=all(isinstance(b, Const) and b.value for b in bodies),
        no_diseq=not any(isinstance(g, (FutNeq, PastNeq)) for g in nodes),
        no_past_obl=not any(isinstance(g, (PastEq, PastNeq)) for g in nodes),
        no_fut_obl=not any(isinstance(g, (FutEq, FutNeq)) for g in nodes),
        nested_past_only=all(_in_past_grammar(b, allow_f=False) for b in bodies),
        nested_F_allowed=all(_in_past_grammar(b, allow_f=True) for b in bodies),
        single_sided=check_single_sided(sig) if sig is not None else True,
    )


def first_violation(f: Formula, restriction: str) -> Formula | None:
    """The first node (children first) that breaks a restriction flag name."""

    for g in subformulas(f):
        if restriction == "no_fut_obl" and isinstance(g, (FutEq, FutNeq)):
            return g
        if restriction == "no_diseq" and isinstance(g, (FutNeq, PastNeq)):
            return g
        if restriction == "no_past_obl" and isinstance(g, (PastEq, PastNeq)):
            return g
        if restriction == "no_nested" and isinstance(g, Obligation) and g.body != Const(True):
            return g
        if restriction == "nested_past_only" and isinstance(g, Obligation):
            if not _in_past_grammar(g.body, allow_f=False):
                return g
    return None

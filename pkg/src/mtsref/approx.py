"""Approximate decision of thorough refinement through modal checks.

Thorough refinement is expensive, so the decision is sandwiched:

* a modal refinement is always a sound YES (modal implies thorough);
* against a deterministic parameter-free right side, modal and thorough
  coincide, so a failed modal check is a sound NO;
* failing modally against the parameter-free hull of the deterministic
  hull of the right side refutes thorough refinement (the composed hull
  overapproximates every implementation of the right side);
* optionally, the exact avoid-set route settles what remains.

The deterministic-but-parametric case deliberately gets no shortcut: with
parameters, determinism no longer makes modal refinement complete.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .errors import MtsrefError, ParamLimitError, StateLimitError
from .modal import ModalVerdict, refines_pmts
from .systems import (
    DEFAULT_MAX_OUT_DEGREE,
    System,
    SystemKind,
    classify,
    is_deterministic,
)
from .thorough import DEFAULT_MAX_AVOID_STATES, thorough_refines_pmts
from .transform import deterministic_hull, parameter_free_hull


class SandwichRule(enum.Enum):
    MODAL_UNDERAPPROX = "modal-underapprox"
    DETERMINISTIC_COMPLETE = "deterministic-complete"
    HULL_REFUTE = "hull-refute"
    EXACT_AVOID = "exact-avoid"
    INCONCLUSIVE = "inconclusive"


class Answer(enum.Enum):
    YES = "YES"
    NO = "NO"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class SandwichVerdict:
    answer: Answer
    rule: SandwichRule
    evidence: Optional[ModalVerdict] = None


def decide_thorough_approx(
    left: System,
    s0: int,
    right: System,
    t0: int,
    allow_exact: bool = False,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
    max_avoid_states: int = DEFAULT_MAX_AVOID_STATES,
) -> SandwichVerdict:
    """YES / NO / UNKNOWN for thorough refinement, cheapest rules first.

    With ``allow_exact`` the avoid-set check runs when the hulls leave the
    question open and the de-parameterized sizes permit; a size breach there
    degrades to UNKNOWN instead of raising.
    """
    modal = refines_pmts(left, s0, right, t0, max_out_degree=max_out_degree)
    if modal.holds:
        return SandwichVerdict(Answer.YES, SandwichRule.MODAL_UNDERAPPROX, modal)

    if classify(right) <= SystemKind.BMTS and is_deterministic(right):
        return SandwichVerdict(Answer.NO, SandwichRule.DETERMINISTIC_COMPLETE, modal)

    hull, hull_t0 = deterministic_hull(right, t0)
    hull = parameter_free_hull(hull)
    against_hull = refines_pmts(left, s0, hull, hull_t0, max_out_degree=max_out_degree)
    if not against_hull.holds:
        return SandwichVerdict(Answer.NO, SandwichRule.HULL_REFUTE, against_hull)

    if allow_exact:
        try:
            exact = thorough_refines_pmts(
                left, s0, right, t0,
                max_states=max_avoid_states, max_out_degree=max_out_degree,
            )
        except (StateLimitError, ParamLimitError):
            return SandwichVerdict(Answer.UNKNOWN, SandwichRule.INCONCLUSIVE)
        return SandwichVerdict(
            Answer.YES if exact else Answer.NO, SandwichRule.EXACT_AVOID
        )
    return SandwichVerdict(Answer.UNKNOWN, SandwichRule.INCONCLUSIVE)

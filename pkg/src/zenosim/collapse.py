"""Event dynamics: reduction, the probability rule, and question-posing.

An event puts one yes/no question (a projector) to nature. The Yes answer
reduces the state to ``P S P``, the No answer to ``(1-P) S (1-P)``, and
the answer-agnostic effect of merely posing the question is their sum,
which removes every coherence between the two subspaces. Branch states
stay unnormalized so that the trace carries the branch weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateBranchError,
    DimensionMismatchError,
    InvalidStateError,
    ValidationError,
)
from .opalg import Projector, WeightOperator

# A sampled branch whose weight falls below this is reported as degenerate
# rather than silently renormalized.
DEGENERATE_BRANCH_TRACE = 1e-15


@dataclass(frozen=True)
class ExperienceEvent:
    """One posed question: the experience's projector and when it was put."""

    projector: Projector
    timestamp: float


@dataclass(frozen=True)
class NatureAnswer:
    """Nature's yes/no reply, with the probability in force when sampled."""

    yes: bool
    probability_yes: float

    def __post_init__(self):
        if not 0.0 <= self.probability_yes <= 1.0:
            raise ValidationError(
                f"recorded probability {self.probability_yes} outside [0, 1]"
            )


def _check_dims(s: WeightOperator, p: Projector) -> None:
    if s.dim != p.dim:
        raise DimensionMismatchError(f"projector dim {p.dim} != state dim {s.dim}")


def _probability_yes_raw(m: np.ndarray, p: np.ndarray) -> float:
    tr = np.trace(m).real
    if not tr > 0.0:
        raise InvalidStateError(f"state trace {tr:.3e} is not positive")
    val = float(np.trace(m @ p).real) / tr
    if val < -1e-10 or val > 1.0 + 1e-10:
        raise InvalidStateError(f"probability {val!r} outside [0, 1] tolerance band")
    return min(1.0, max(0.0, val))


def probability_yes(s: WeightOperator, p: Projector) -> float:
    """``Tr(S P) / Tr(S)``, clamped to [0, 1] for downstream sampling.

    Invariant under positive rescaling of ``s`` by construction.
    """
    _check_dims(s, p)
    return _probability_yes_raw(s.matrix, p.matrix)


def _apply_answer_raw(m: np.ndarray, p: np.ndarray, yes: bool) -> np.ndarray:
    if yes:
        return p @ m @ p
    q = np.eye(p.shape[0]) - p
    return q @ m @ q


def apply_answer(s: WeightOperator, p: Projector, yes: bool) -> WeightOperator:
    """Reduce to the answered branch, unnormalized.

    Yes gives ``P S P``, No gives ``(1-P) S (1-P)``; the resulting trace
    is the original trace times the answer's probability and is *not*
    renormalized. Selecting a branch of essentially zero weight raises
    :class:`DegenerateBranchError`.
    """
    _check_dims(s, p)
    out = _apply_answer_raw(s.matrix, p.matrix, yes)
    tr = float(np.trace(out).real)
    if tr < DEGENERATE_BRANCH_TRACE:
        raise DegenerateBranchError(
            f"{'Yes' if yes else 'No'} branch has trace {tr:.3e} "
            f"< {DEGENERATE_BRANCH_TRACE:.0e}"
        )
    return WeightOperator(out)


def _process1_raw(m: np.ndarray, p: np.ndarray) -> np.ndarray:
    q = np.eye(p.shape[0]) - p
    return p @ m @ p + q @ m @ q


def process1(s: WeightOperator, p: Projector) -> WeightOperator:
    """Answer-agnostic question effect: ``P S P + (1-P) S (1-P)``.

    Preserves the trace exactly, zeroes every cross-block matrix element,
    and is idempotent for a fixed projector.
    """
    _check_dims(s, p)
    return WeightOperator(_process1_raw(s.matrix, p.matrix))


def select_event(s: WeightOperator, candidates: Sequence[Projector]) -> Projector:
    """The candidate with the greatest statistical weight ``Tr(S P)/Tr(S)``.

    Ties break toward the lowest list index so runs are reproducible.
    """
    if not candidates:
        raise ConfigurationError("candidate projector list is empty")
    best = candidates[0]
    best_p = probability_yes(s, best)
    for cand in candidates[1:]:
        val = probability_yes(s, cand)
        if val > best_p:
            best, best_p = cand, val
    return best


def sample_answer(
    s: WeightOperator, p: Projector, rng: np.random.Generator
) -> NatureAnswer:
    """Draw nature's answer: Yes with probability ``probability_yes(s, p)``.

    The generator is threaded explicitly; identical generator state and
    inputs give identical answers. The acceptance rule is ``u < p_yes``
    with ``u`` uniform on [0, 1).
    """
    prob = probability_yes(s, p)
    u = float(rng.random())
    return NatureAnswer(yes=u < prob, probability_yes=prob)

"""Posterior inference of a tree's true state from its assessed state."""

from __future__ import annotations

from dataclasses import dataclass

from .domain import AssessedState, AssessmentMatrix, Prevalence, TreeState


class ZeroMarginalError(ValueError):
    """The assessed state has probability zero under the prior."""


@dataclass(frozen=True)
class Posterior:
    """P(true state | one assessed state)."""

    p_h_given: float
    p_i_given: float
    p_d_given: float

    def share(self, state: TreeState) -> float:
        return (self.p_h_given, self.p_i_given, self.p_d_given)[state.value]

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_h_given, self.p_i_given, self.p_d_given)


def posterior(
    prior: Prevalence, matrix: AssessmentMatrix, assessed: AssessedState
) -> Posterior:
    """Bayes update of the tree-state prior given one assessment outcome."""
    weights = [matrix.p(assessed, true) * prior.share(true) for true in TreeState]
    marginal = sum(weights)
    if marginal <= 0.0:
        raise ZeroMarginalError(
            f"assessed state {assessed.short!r} has zero probability "
            "under the given prior and assessment matrix"
        )
    return Posterior(*(w / marginal for w in weights))


def assessed_shares(
    prior: Prevalence, matrix: AssessmentMatrix
) -> tuple[float, float, float]:
    """Marginal probability of each assessed state, in (h, i, d) order."""
    return tuple(
        sum(matrix.p(assessed, true) * prior.share(true) for true in TreeState)
        for assessed in AssessedState
    )

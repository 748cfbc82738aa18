"""Equilibrium layer: owner choices, firm pricing, and the optimal subsidy.

The setting is a three-stage game for one privately owned tree.  The
municipality posts a per-treatment subsidy, two symmetric tree-care
firms bid prices, and the owner (whose valuation of the tree is private
information, uniform on [a, b]) accepts the cheaper bid or declines.
With equal subsidies the price war drives the equilibrium price to the
subsidized marginal cost c - s, so the subsidy passes through to the
owner completely.

The optimal subsidy then falls in one of four regimes:

* FreeRiding: treatment is cheap enough that every owner type treats
  unsubsidized, so the municipality pays nothing.
* FullCoverage: the social value of treatment is so high that the
  subsidy is raised until even the lowest owner type treats.
* Interior: subsidy balances the marginal social gain of one more
  treating owner type against the cost of paying all of them.
* NoSubsidy: social value cannot move the needle; whatever treatment
  happens is unsubsidized uptake.

`monopoly_case` covers the appendix variant where only one firm may be
subsidized, which weakens competition and never helps the municipality.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .bayes import Posterior
from .domain import EconParams, TreeState
from .risk import RiskProfile


class PreconditionViolatedError(ValueError):
    """Inputs fall outside the region an analysis covers."""


class Regime(Enum):
    FREE_RIDING = "free_riding"
    FULL_COVERAGE = "full_coverage"
    INTERIOR = "interior"
    NO_SUBSIDY = "no_subsidy"


class BidKind(Enum):
    ANY_BID_AT_LEAST = "any_bid_at_least"
    UNDERCUT = "undercut"
    MONOPOLIST = "monopolist"


@dataclass(frozen=True)
class TreatmentEffect:
    """Survival gains from treating one tree in a given assessed state."""

    k: float  # increase in the focal tree's survival probability
    l: float  # expected increase in survival count among other trees


@dataclass(frozen=True)
class SubsidyDecision:
    """Equilibrium outcome of the subsidy game for one assessed state."""

    s_star: float  # optimal subsidy
    regime: Regime
    price: float  # equilibrium price faced by the owner, cost_c - s_star
    treat_prob: float  # probability the owner treats
    muni_eu: float  # municipal expected utility at the optimum


@dataclass(frozen=True)
class MonopolyOutcome:
    """Equilibrium when only firm 1 can receive a subsidy."""

    s1_star: float
    p1_star: float  # firm 1's equilibrium bid
    treat_prob: float
    firm_eu: float  # firm 1's expected profit
    muni_eu: float


@dataclass(frozen=True)
class BidResponse:
    """A firm's best reply to the rival's posted price."""

    kind: BidKind
    price: float


def treatment_effects(post: Posterior, risks: RiskProfile) -> TreatmentEffect:
    """Posterior-weighted survival gains k (focal tree) and l (spillover)."""
    h, i = TreeState.HEALTHY, TreeState.INFESTED
    k = post.p_h_given * (risks.mu_u[h] - risks.mu_t[h]) + post.p_i_given * (
        risks.mu_u[i] - risks.mu_t[i]
    )
    l = post.p_h_given * (risks.lam_u[h] - risks.lam_t[h]) + post.p_i_given * (
        risks.lam_u[i] - risks.lam_t[i]
    )
    return TreatmentEffect(k=k, l=l)


def owner_payoffs(
    post: Posterior, risks: RiskProfile, delta_o: float, v_o_share: float
):
    """Owner's expected payoff of a treated vs untreated tree.

    delta_o is the owner's total benefit of avoided mortality; v_o_share
    is the part attributable to the surviving tree's value, the rest
    being the avoided removal cost.  Satisfies
    pi_t - pi_u = delta_o * k for the matching treatment effect.
    """
    v_o = v_o_share
    w_o = delta_o - v_o_share

    def expected(mu):
        alive_h = (1.0 - mu[TreeState.HEALTHY]) * v_o - mu[TreeState.HEALTHY] * w_o
        alive_i = (1.0 - mu[TreeState.INFESTED]) * v_o - mu[TreeState.INFESTED] * w_o
        return (
            post.p_h_given * alive_h
            + post.p_i_given * alive_i
            - post.p_d_given * w_o
        )

    return expected(risks.mu_t), expected(risks.mu_u)


def owner_decision(delta_o: float, k: float, price: float) -> bool:
    """Treat exactly when the expected benefit covers the price (ties treat)."""
    return delta_o * k >= price


def firm_best_response(
    p_other: float, s_own: float, k: float, a: float, b: float, cost_c: float
) -> BidResponse:
    """Best reply of one firm given the rival's price and its own subsidy.

    The undercut case stands for "rival's price minus epsilon"; the
    boundary p_other equal to the monopoly price still undercuts.
    """
    floor = cost_c - s_own  # lowest bid that cannot lose money
    p_prime = max(0.5 * (b * k + cost_c - s_own), a * k)
    if s_own < cost_c - b * k or p_other < floor:
        # no owner type is worth chasing below the rival's price
        return BidResponse(BidKind.ANY_BID_AT_LEAST, floor)
    if p_other <= p_prime:
        return BidResponse(BidKind.UNDERCUT, p_other)
    return BidResponse(BidKind.MONOPOLIST, p_prime)


def private_treatment_probability(
    k: float, l: float, econ: EconParams, s: float
) -> float:
    """Probability a random owner type treats at subsidy s.

    The owner treats when delta_o * k covers the equilibrium price
    c - s, with delta_o uniform on [a, b].  The spillover effect l does
    not enter the private decision; it is accepted so all equilibrium
    operations share one signature.
    """
    del l
    price = econ.cost_c - s
    if k <= 0.0:
        return 1.0 if price <= 0.0 else 0.0
    if price <= econ.a * k:
        return 1.0
    if price >= econ.b * k:
        return 0.0
    return (econ.b * k - price) / (k * (econ.b - econ.a))


def optimal_subsidy(
    k: float, l: float, econ: EconParams, pi_u_baseline: float = 0.0
) -> SubsidyDecision:
    """Municipality's optimal equal subsidy for one assessed state.

    Case boundaries are inclusive in the order listed; the reported
    municipal utility is pi_u_baseline plus the expected net gain
    (social value of treatment minus subsidy paid) times the treatment
    probability.
    """
    c, a, b = econ.cost_c, econ.a, econ.b
    if k <= 0.0:
        # treatment cannot help the focal tree; never worth subsidizing
        return SubsidyDecision(
            s_star=0.0,
            regime=Regime.NO_SUBSIDY,
            price=c,
            treat_prob=0.0,
            muni_eu=pi_u_baseline,
        )
    social = econ.delta_m * (k + l)
    if c <= a * k:
        regime, s_star, prob = Regime.FREE_RIDING, 0.0, 1.0
    elif c + b * k - 2.0 * a * k <= social:
        regime, s_star, prob = Regime.FULL_COVERAGE, c - a * k, 1.0
    elif abs(c - b * k) < social:
        regime = Regime.INTERIOR
        s_star = 0.5 * (social + c - b * k)
        prob = (social - c + b * k) / (2.0 * (b - a) * k)
    else:
        regime, s_star = Regime.NO_SUBSIDY, 0.0
        prob = private_treatment_probability(k, l, econ, 0.0)
    return SubsidyDecision(
        s_star=s_star,
        regime=regime,
        price=c - s_star,
        treat_prob=prob,
        muni_eu=pi_u_baseline + (social - s_star) * prob,
    )


def public_treatment_decision(k: float, l: float, econ: EconParams) -> float:
    """Treat a public tree exactly when social value covers the cost."""
    return 1.0 if econ.cost_c <= econ.delta_m_prime * (k + l) else 0.0


def monopoly_case(
    k: float, l: float, econ: EconParams, pi_u_baseline: float = 0.0
) -> MonopolyOutcome:
    """Optimal subsidy when only firm 1 may be subsidized.

    Covers the region where unsubsidized treatment never happens
    (b*k < c).  The subsidized firm keeps part of the subsidy as profit,
    which is why this arrangement never beats equal subsidies.
    """
    c, a, b = econ.cost_c, econ.a, econ.b
    if b * k >= c:
        raise PreconditionViolatedError(
            f"monopoly analysis requires b*k < cost_c, got b*k={b * k!r} "
            f"and cost_c={c!r}"
        )
    if k <= 0.0:
        # degenerate: no owner treats at any positive price
        return MonopolyOutcome(
            s1_star=0.0, p1_star=c, treat_prob=0.0, firm_eu=0.0,
            muni_eu=pi_u_baseline,
        )
    social = econ.delta_m * (k + l)
    if social < c - b * k:
        return MonopolyOutcome(
            s1_star=0.0, p1_star=c, treat_prob=0.0, firm_eu=0.0,
            muni_eu=pi_u_baseline,
        )
    if social < c + 3.0 * b * k - 4.0 * a * k:
        margin = social - c + b * k
        return MonopolyOutcome(
            s1_star=0.5 * (social + c - b * k),
            p1_star=0.25 * (c + 3.0 * b * k - social),
            treat_prob=margin / (4.0 * (b - a) * k),
            firm_eu=margin * margin / (16.0 * (b - a) * k),
            muni_eu=pi_u_baseline + margin * margin / (8.0 * (b - a) * k),
        )
    return MonopolyOutcome(
        s1_star=c + b * k - 2.0 * a * k,
        p1_star=a * k,
        treat_prob=1.0,
        firm_eu=k * (b - a),
        muni_eu=pi_u_baseline + social - c - b * k + 2.0 * a * k,
    )

"""Perceived risks that drive treatment decisions.

Two quantities per true tree state, each for treated and untreated trees:

* mu, the probability the focal tree dies within the decision horizon,
  from the closed-form solution of the healthy -> infested -> dying
  linear decay chain;
* lam, the expected number of other trees ultimately killed by the focal
  tree's infestation, from effective-reproduction arithmetic.

mu is a probability and is clamped to [0,1] against float dust.  lam is
an expected count and is deliberately never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .domain import EpidemicParams, TreeState, ValidationError

# Below this relative gap the two-rate solution is evaluated by its
# analytic equal-rate limit; the generic expression has a pole there.
EQUAL_RATE_RTOL = 1e-9


class DegenerateRatesError(ValueError):
    """Treated infested trees neither die nor recover; spillover undefined."""


@dataclass(frozen=True)
class RiskSnapshot:
    """Community-level exposure entering the risk formulas."""

    i0: float  # currently infested fraction of all trees
    h0_comm: float  # currently healthy fraction of all trees

    def __post_init__(self):
        errors = []
        for name in ("i0", "h0_comm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 1.0):
                errors.append(f"{name}={value!r}: must be in [0, 1]")
        if not errors and self.i0 + self.h0_comm > 1.0 + 1e-12:
            errors.append(
                f"i0+h0_comm={self.i0 + self.h0_comm!r}: exceeds 1"
            )
        if errors:
            raise ValidationError(errors)


@dataclass(frozen=True)
class RiskProfile:
    """Per-true-state risks for untreated (u) and treated (t) trees."""

    mu_u: Mapping[TreeState, float]
    mu_t: Mapping[TreeState, float]
    lam_u: Mapping[TreeState, float]
    lam_t: Mapping[TreeState, float]


def bateman_d(
    h0: float, i0: float, d0: float, r1: float, r2: float, tau: float
) -> float:
    """Dying-state occupancy of the two-stage decay chain at time tau.

    The chain is healthy --r1--> infested --r2--> dying with initial
    occupancies (h0, i0, d0) summing to 1.  Near r1 = r2 the generic
    expression degenerates to 0/0, so the analytic limit is used there.
    """
    if abs(r1 - r2) <= EQUAL_RATE_RTOL * max(1.0, r1):
        r = 0.5 * (r1 + r2)
        decay = math.exp(-r * tau)
        value = d0 + i0 * (1.0 - decay) + h0 * (1.0 - (1.0 + r * tau) * decay)
    else:
        # (1 - exp(-(r2-r1)*tau)) / (r2-r1) via expm1: no cancellation
        # when the gap is small, so accuracy holds right up to the
        # equal-rate branch.
        q = -math.expm1(-(r2 - r1) * tau) / (r2 - r1)
        decay1 = math.exp(-r1 * tau)
        value = d0 - i0 * math.expm1(-r2 * tau) + h0 * (
            1.0 - decay1 * (1.0 + r1 * q)
        )
    return min(1.0, max(0.0, value))


def direct_risks(params: EpidemicParams, snap: RiskSnapshot):
    """Death probabilities (mu_u, mu_t) over the horizon, by true state."""
    tau = params.tau_star
    r1_u = params.beta * snap.i0
    r2_u = params.gamma
    r1_t = r1_u * (1.0 - params.eps_h)
    r2_t = params.gamma * (1.0 - params.eps_i)
    if snap.i0 == 0.0:
        # no exposure source, a healthy tree cannot become infested
        mu_uh = mu_th = 0.0
    else:
        mu_uh = bateman_d(1.0, 0.0, 0.0, r1_u, r2_u, tau)
        mu_th = bateman_d(1.0, 0.0, 0.0, r1_t, r2_t, tau)
    mu_u = {
        TreeState.HEALTHY: mu_uh,
        TreeState.INFESTED: bateman_d(0.0, 1.0, 0.0, r1_u, r2_u, tau),
        TreeState.DYING: 1.0,
    }
    mu_t = {
        TreeState.HEALTHY: mu_th,
        TreeState.INFESTED: bateman_d(0.0, 1.0, 0.0, r1_t, r2_t, tau),
        TreeState.DYING: 1.0,
    }
    return mu_u, mu_t


def spillover_risks(params: EpidemicParams, snap: RiskSnapshot):
    """Expected onward mortality counts (lam_u, lam_t), by true state.

    An infested tree seeds beta*H0 new infestations per year for as long
    as it stays infested; dividing by the rate at which it leaves the
    infested state gives the expected count.  Healthy trees carry the
    same figure discounted by their own infestation probability over the
    horizon.
    """
    zero = {state: 0.0 for state in TreeState}
    if snap.h0_comm == 0.0:
        return dict(zero), dict(zero)
    exit_u = params.gamma
    exit_t = params.gamma * (1.0 - params.eps_i) + params.alpha * params.eps_i
    if exit_t == 0.0:
        raise DegenerateRatesError(
            "treated infested trees have zero exit rate "
            "(gamma*(1-eps_i) + alpha*eps_i = 0); spillover risk undefined"
        )
    pressure = params.beta * snap.h0_comm
    lam_ui = pressure / exit_u
    lam_ti = pressure / exit_t
    tau = params.tau_star
    infect_u = 1.0 - math.exp(-params.beta * snap.i0 * tau)
    infect_t = 1.0 - math.exp(-params.beta * snap.i0 * (1.0 - params.eps_h) * tau)
    lam_u = {
        TreeState.HEALTHY: infect_u * lam_ui,
        TreeState.INFESTED: lam_ui,
        TreeState.DYING: 0.0,
    }
    lam_t = {
        TreeState.HEALTHY: infect_t * lam_ti,
        TreeState.INFESTED: lam_ti,
        TreeState.DYING: 0.0,
    }
    return lam_u, lam_t


def risk_profile(params: EpidemicParams, snap: RiskSnapshot) -> RiskProfile:
    """Bundle direct and spillover risks for one community snapshot."""
    mu_u, mu_t = direct_risks(params, snap)
    lam_u, lam_t = spillover_risks(params, snap)
    return RiskProfile(mu_u=mu_u, mu_t=mu_t, lam_u=lam_u, lam_t=lam_t)

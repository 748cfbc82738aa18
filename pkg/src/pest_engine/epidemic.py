"""Forest-level dynamics with endogenous treatment policies.

Six compartments track healthy, infested, and dying fractions of
municipal (m) and private (o) trees.  At every integration step the
current composition is fed back through the assessment, risk, and
equilibrium layers to produce treatment probabilities, so subsidies and
treatment rates change as an outbreak unfolds.  Integration is classical
fixed-step fourth-order Runge-Kutta with policies frozen within a step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

from . import game
from .bayes import ZeroMarginalError, posterior
from .domain import (
    AssessedState,
    AssessmentMatrix,
    EconParams,
    EpidemicParams,
    Prevalence,
    TreeState,
    ValidationError,
)
from .risk import RiskSnapshot, risk_profile

log = logging.getLogger(__name__)

DEFAULT_DT = 1.0 / 64.0  # years
DEFAULT_RECORD_EVERY = 0.25  # years

# Compartments may wander this far outside [0,1] before the step is
# declared too large; anything smaller is integration dust.
STATE_BAND = 1e-9
DRIFT_TOL = 1e-12  # renormalize the simplex sum beyond this


class StepTooLargeError(RuntimeError):
    """A compartment left [0,1] by more than the tolerance band."""


class MissingDecompositionError(ValueError):
    """Welfare accounting needs v_m / w_m / w_m_prime in the econ block."""


class PrivateArm(Enum):
    NO_TREATMENT = "none"
    NO_SUBSIDY = "nosubsidy"
    OPTIMAL_SUBSIDY = "optimal"


class PublicArm(Enum):
    NO_TREATMENT = "none"
    OPTIMAL = "optimal"


@dataclass(frozen=True)
class ForestState:
    """Fractions of the whole forest in each (ownership, condition) cell."""

    h_m: float
    i_m: float
    d_m: float
    h_o: float
    i_o: float
    d_o: float

    def __post_init__(self):
        errors = []
        values = self.as_tuple()
        for name, value in zip(self.__dataclass_fields__, values):
            if not math.isfinite(value):
                errors.append(f"{name}={value!r}: must be finite")
            elif value < -STATE_BAND or value > 1.0 + STATE_BAND:
                errors.append(f"{name}={value!r}: outside [0, 1]")
        if not errors:
            total = math.fsum(values)
            if abs(total - 1.0) > 1e-9:
                errors.append(f"compartments sum to {total!r}, expected 1")
        if errors:
            raise ValidationError(errors)

    def as_tuple(self):
        return (self.h_m, self.i_m, self.d_m, self.h_o, self.i_o, self.d_o)

    def prevalence(self) -> Prevalence:
        return Prevalence(
            self.h_m + self.h_o, self.i_m + self.i_o, self.d_m + self.d_o
        )


@dataclass(frozen=True)
class AssessedPolicy:
    """Treatment probability per assessed state."""

    p_h_hat: float
    p_i_hat: float
    p_d_hat: float

    def get(self, assessed: AssessedState) -> float:
        return (self.p_h_hat, self.p_i_hat, self.p_d_hat)[assessed.value]


NO_TREATMENT_POLICY = AssessedPolicy(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TrueStatePolicy:
    """Treatment probability per true state, implied by an assessed policy.

    Only p_th and p_ti enter the dynamics; p_td is carried because
    welfare accounting charges for futile treatment of dying trees.
    """

    p_th: float
    p_ti: float
    p_td: float = 0.0


NO_TREATMENT_TRUE = TrueStatePolicy(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of the scenario matrix, with an optional delayed start.

    Before switch_time the forest runs under the no-action pair
    (NoSubsidy private, no public treatment); the configured arms take
    over at switch_time.
    """

    private_arm: PrivateArm
    public_arm: PublicArm
    switch_time: float | None = None

    def __post_init__(self):
        if self.switch_time is not None and not (
            math.isfinite(self.switch_time) and self.switch_time >= 0.0
        ):
            raise ValidationError(
                [f"switch_time={self.switch_time!r}: must be >= 0"]
            )

    @property
    def slug(self) -> str:
        return f"{self.private_arm.value}_{self.public_arm.value}"


SCENARIO_MATRIX = tuple(
    ScenarioSpec(private_arm, public_arm)
    for public_arm in PublicArm
    for private_arm in PrivateArm
)


@dataclass(frozen=True)
class StatePolicies:
    """Everything the policy layer decides at one forest state."""

    assessed_m: AssessedPolicy
    assessed_o: AssessedPolicy
    true_m: TrueStatePolicy
    true_o: TrueStatePolicy
    subsidies: tuple  # per assessed state (h, i, d)


NO_ACTION_POLICIES = StatePolicies(
    assessed_m=NO_TREATMENT_POLICY,
    assessed_o=NO_TREATMENT_POLICY,
    true_m=NO_TREATMENT_TRUE,
    true_o=NO_TREATMENT_TRUE,
    subsidies=(0.0, 0.0, 0.0),
)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One output sample of a simulation."""

    time: float
    state: ForestState
    policy_m: TrueStatePolicy
    policy_o: TrueStatePolicy
    subsidies: tuple  # per assessed state (h, i, d)
    net_value_m: float | None  # currency/year; None without decomposition
    net_value_o: float | None


def assessed_to_true(
    policy: AssessedPolicy, matrix: AssessmentMatrix
) -> TrueStatePolicy:
    """Average an assessed-state policy over the assessment error."""

    def weighted(true: TreeState) -> float:
        return sum(
            matrix.p(assessed, true) * policy.get(assessed)
            for assessed in AssessedState
        )

    return TrueStatePolicy(
        p_th=weighted(TreeState.HEALTHY),
        p_ti=weighted(TreeState.INFESTED),
        p_td=weighted(TreeState.DYING),
    )


def _rates(state, params: EpidemicParams, true_m: TrueStatePolicy,
           true_o: TrueStatePolicy):
    """Right-hand side over plain tuples; the integrator's hot path."""
    h_m, i_m, _d_m, h_o, i_o, _d_o = state
    pressure = params.beta * (i_m + i_o)
    infect_m = pressure * (1.0 - params.eps_h * true_m.p_th) * h_m
    infect_o = pressure * (1.0 - params.eps_h * true_o.p_th) * h_o
    cure_m = params.alpha * params.eps_i * true_m.p_ti * i_m
    cure_o = params.alpha * params.eps_i * true_o.p_ti * i_o
    die_m = params.gamma * (1.0 - params.eps_i * true_m.p_ti) * i_m
    die_o = params.gamma * (1.0 - params.eps_i * true_o.p_ti) * i_o
    return (
        cure_m - infect_m,
        infect_m - cure_m - die_m,
        die_m,
        cure_o - infect_o,
        infect_o - cure_o - die_o,
        die_o,
    )


def derivatives(
    state: ForestState,
    params: EpidemicParams,
    pol_m: TrueStatePolicy,
    pol_o: TrueStatePolicy,
):
    """Compartment rates of change; they sum to zero by construction."""
    rates = _rates(state.as_tuple(), params, pol_m, pol_o)
    scale = max(1.0, sum(abs(r) for r in rates))
    assert abs(math.fsum(rates)) <= 1e-14 * scale
    return rates


def policy_at_state(
    state: ForestState,
    params: EpidemicParams,
    econ: EconParams,
    matrix: AssessmentMatrix,
    private_arm: PrivateArm,
    public_arm: PublicArm,
) -> StatePolicies:
    """Evaluate both ownership policies at the current forest composition.

    With no infested trees every risk difference vanishes and no arm
    treats, so that corner returns the no-action bundle outright; this
    also sidesteps Bayes marginals that are undefined at exact corners.
    An assessed state that has zero marginal probability gets a zero
    policy entry, which is inconsequential because no tree is ever
    assessed that way.
    """
    return _policy_at_tuple(
        state.as_tuple(), params, econ, matrix, private_arm, public_arm
    )


def _policy_at_tuple(state, params, econ, matrix, private_arm, public_arm):
    p_h = state[0] + state[3]
    p_i = state[1] + state[4]
    p_d = state[2] + state[5]
    if p_i <= 0.0:
        return NO_ACTION_POLICIES
    prior = Prevalence(p_h, p_i, p_d)
    snap = RiskSnapshot(i0=prior.p_i, h0_comm=prior.p_h)
    profile = risk_profile(params, snap)
    private = []
    public = []
    subsidies = []
    for assessed in AssessedState:
        try:
            post = posterior(prior, matrix, assessed)
        except ZeroMarginalError:
            private.append(0.0)
            public.append(0.0)
            subsidies.append(0.0)
            continue
        effect = game.treatment_effects(post, profile)
        if private_arm is PrivateArm.NO_TREATMENT:
            private.append(0.0)
            subsidies.append(0.0)
        elif private_arm is PrivateArm.NO_SUBSIDY:
            private.append(
                game.private_treatment_probability(effect.k, effect.l, econ, 0.0)
            )
            subsidies.append(0.0)
        else:
            decision = game.optimal_subsidy(effect.k, effect.l, econ)
            private.append(decision.treat_prob)
            subsidies.append(decision.s_star)
        if public_arm is PublicArm.NO_TREATMENT:
            public.append(0.0)
        else:
            public.append(game.public_treatment_decision(effect.k, effect.l, econ))
    assessed_m = AssessedPolicy(*public)
    assessed_o = AssessedPolicy(*private)
    return StatePolicies(
        assessed_m=assessed_m,
        assessed_o=assessed_o,
        true_m=assessed_to_true(assessed_m, matrix),
        true_o=assessed_to_true(assessed_o, matrix),
        subsidies=tuple(subsidies),
    )


def welfare_flows(
    state: ForestState,
    policies: StatePolicies,
    rates,
    econ: EconParams,
    params: EpidemicParams,
    matrix: AssessmentMatrix,
):
    """Annualized net municipal value of each ownership class.

    Benefits are survival flows of standing trees; costs are public
    treatment spending, subsidy outlays on privately owned trees, and
    one-time mortality losses charged at the current death rates.
    """
    if not econ.has_decomposition:
        raise MissingDecompositionError(
            "welfare accounting requires v_m, w_m and w_m_prime in the "
            "econ parameters"
        )
    tau = params.tau_star
    true_m, true_o = policies.true_m, policies.true_o
    survive_m = (econ.v_m / tau) * (state.h_m + state.i_m)
    survive_o = (econ.v_m / tau) * (state.h_o + state.i_o)
    treat_cost_m = (econ.cost_c / tau) * (
        true_m.p_th * state.h_m
        + true_m.p_ti * state.i_m
        + true_m.p_td * state.d_m
    )
    by_true = (state.h_o, state.i_o, state.d_o)
    subsidy_cost = 0.0
    for assessed in AssessedState:
        assessed_share = sum(
            matrix.p(assessed, true) * by_true[true.value] for true in TreeState
        )
        subsidy_cost += (
            policies.subsidies[assessed.value]
            * policies.assessed_o.get(assessed)
            * assessed_share
        )
    subsidy_cost /= tau
    ddot_m, ddot_o = rates[2], rates[5]
    net_m = survive_m - treat_cost_m - ddot_m * econ.w_m_prime
    net_o = survive_o - subsidy_cost - ddot_o * econ.w_m
    return net_m, net_o


def initial_condition(
    public_share: float = 0.4, infested: float = 0.01
) -> ForestState:
    """Seed an outbreak: given ownership split, infestation proportional."""
    return ForestState(
        h_m=public_share * (1.0 - infested),
        i_m=public_share * infested,
        d_m=0.0,
        h_o=(1.0 - public_share) * (1.0 - infested),
        i_o=(1.0 - public_share) * infested,
        d_o=0.0,
    )


def _check_band(state, dt):
    for value in state:
        if value < -STATE_BAND or value > 1.0 + STATE_BAND:
            raise StepTooLargeError(
                f"compartment reached {value!r} at dt={dt!r}; "
                "reduce the integration step"
            )


def simulate(
    initial: ForestState,
    params: EpidemicParams,
    econ: EconParams,
    matrix: AssessmentMatrix,
    scenario: ScenarioSpec,
    horizon: float,
    dt: float = DEFAULT_DT,
    record_every: float = DEFAULT_RECORD_EVERY,
):
    """Integrate the forest under a scenario, sampling records on the way.

    Policies are recomputed from the pre-step state once per step and
    frozen across the four Runge-Kutta stages.  Records are emitted at
    t = 0, then at the first step boundary past each record_every
    multiple, and always at the horizon.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValidationError([f"dt={dt!r}: must be > 0"])
    if not (horizon >= 0.0 and math.isfinite(horizon)):
        raise ValidationError([f"horizon={horizon!r}: must be >= 0"])
    if record_every <= 0.0:
        raise ValidationError([f"record_every={record_every!r}: must be > 0"])

    def active_arms(t):
        if scenario.switch_time is not None and t + 1e-12 < scenario.switch_time:
            return PrivateArm.NO_SUBSIDY, PublicArm.NO_TREATMENT
        return scenario.private_arm, scenario.public_arm

    state = initial.as_tuple()
    records = []
    welfare = econ.has_decomposition
    renormalized = 0
    t = 0.0
    steps = 0
    next_record = 0.0
    while True:
        at_end = t >= horizon - 1e-12
        arms = active_arms(t)
        policies = _policy_at_tuple(state, params, econ, matrix, *arms)
        if at_end or t >= next_record - 1e-9:
            rates = _rates(state, params, policies.true_m, policies.true_o)
            snapshot = ForestState(*state)
            if welfare:
                net_m, net_o = welfare_flows(
                    snapshot, policies, rates, econ, params, matrix
                )
            else:
                net_m = net_o = None
            records.append(
                TrajectoryRecord(
                    time=t,
                    state=snapshot,
                    policy_m=policies.true_m,
                    policy_o=policies.true_o,
                    subsidies=policies.subsidies,
                    net_value_m=net_m,
                    net_value_o=net_o,
                )
            )
            while next_record <= t + 1e-9:
                next_record += record_every
        if at_end:
            break
        h = min(dt, horizon - t)
        k1 = _rates(state, params, policies.true_m, policies.true_o)
        s2 = tuple(x + 0.5 * h * r for x, r in zip(state, k1))
        _check_band(s2, dt)
        k2 = _rates(s2, params, policies.true_m, policies.true_o)
        s3 = tuple(x + 0.5 * h * r for x, r in zip(state, k2))
        _check_band(s3, dt)
        k3 = _rates(s3, params, policies.true_m, policies.true_o)
        s4 = tuple(x + h * r for x, r in zip(state, k3))
        _check_band(s4, dt)
        k4 = _rates(s4, params, policies.true_m, policies.true_o)
        state = tuple(
            x + (h / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
            for x, r1, r2, r3, r4 in zip(state, k1, k2, k3, k4)
        )
        _check_band(state, dt)
        total = math.fsum(state)
        if abs(total - 1.0) > DRIFT_TOL:
            state = tuple(x / total for x in state)
            renormalized += 1
        steps += 1
        t = steps * dt if h == dt else horizon
    if renormalized:
        log.info("renormalized simplex drift on %d of %d steps", renormalized, steps)
    return records


TRAJECTORY_COLUMNS = (
    "t",
    "H_m",
    "I_m",
    "D_m",
    "H_o",
    "I_o",
    "D_o",
    "p_thm",
    "p_tim",
    "p_tho",
    "p_tio",
    "s_hat_h",
    "s_hat_i",
    "s_hat_d",
    "net_value_m",
    "net_value_o",
)


def trajectory_rows(records):
    """Flatten TrajectoryRecords into rows under TRAJECTORY_COLUMNS."""
    rows = []
    for rec in records:
        s = rec.state
        rows.append(
            (
                rec.time,
                s.h_m,
                s.i_m,
                s.d_m,
                s.h_o,
                s.i_o,
                s.d_o,
                rec.policy_m.p_th,
                rec.policy_m.p_ti,
                rec.policy_o.p_th,
                rec.policy_o.p_ti,
                rec.subsidies[0],
                rec.subsidies[1],
                rec.subsidies[2],
                math.nan if rec.net_value_m is None else rec.net_value_m,
                math.nan if rec.net_value_o is None else rec.net_value_o,
            )
        )
    return rows

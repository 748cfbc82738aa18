"""Subsidy equilibria and epidemic forecasts for urban tree pest management.

The package computes the optimal municipal treatment subsidy for
privately owned trees under imperfect health assessment, the matching
public-tree treatment rule, and the resulting forest-level infestation
dynamics with policy feedback.
"""

__version__ = "0.1.0"

from .bayes import Posterior, ZeroMarginalError, assessed_shares, posterior
from .domain import (
    AssessedState,
    AssessmentMatrix,
    EconParams,
    EpidemicParams,
    ModelConfig,
    Prevalence,
    TreeState,
    ValidationError,
    load_config,
    parse_config,
    validate,
)
from .epidemic import (
    AssessedPolicy,
    ForestState,
    PrivateArm,
    PublicArm,
    ScenarioSpec,
    StepTooLargeError,
    TrajectoryRecord,
    TrueStatePolicy,
    initial_condition,
    simulate,
)
from .game import (
    BidKind,
    BidResponse,
    MonopolyOutcome,
    Regime,
    SubsidyDecision,
    TreatmentEffect,
    firm_best_response,
    monopoly_case,
    optimal_subsidy,
    owner_decision,
    owner_payoffs,
    private_treatment_probability,
    public_treatment_decision,
    treatment_effects,
)
from .risk import (
    DegenerateRatesError,
    RiskProfile,
    RiskSnapshot,
    bateman_d,
    direct_risks,
    risk_profile,
    spillover_risks,
)
from .sweep import SimplexGrid, delta_sweep, policy_map, timing_study

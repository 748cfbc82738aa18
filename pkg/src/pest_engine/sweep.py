"""Batch experiment drivers over the equilibrium and simulation layers.

Three families: policy maps over a triangular grid of forest
compositions, sweeps of the social value of avoided mortality, and
intervention-timing studies.  All outputs are deterministic tables in a
fixed row order, so reruns produce byte-identical CSVs even when the
grid work is spread across worker processes.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from functools import partial
from multiprocessing import Pool

from . import game
from .bayes import ZeroMarginalError, posterior
from .domain import AssessedState, Prevalence, TreeState, ValidationError
from .epidemic import (
    DEFAULT_DT,
    PrivateArm,
    PublicArm,
    ScenarioSpec,
    simulate,
)
from .risk import RiskSnapshot, risk_profile

SIMPLEX_COLUMNS = (
    "p_h",
    "p_i",
    "p_d",
    "assessed",
    "k",
    "l",
    "s_star",
    "treat_prob_subsidized",
    "treat_prob_unsubsidized",
    "public_treat",
)

DELTA_COLUMNS = ("delta_m", "assessed", "s_star", "treat_prob", "survival_3y")

TIMING_COLUMNS = (
    "switch_time",
    "survival_50y_total",
    "survival_50y_public",
    "survival_50y_private",
)


def worker_count() -> int:
    """Worker processes for grid work, from PEST_ENGINE_THREADS.

    0 (or unset) means auto.  Auto currently resolves to serial because
    a single policy evaluation is microseconds of work and process
    startup would dominate; an explicit count >= 2 forces a pool.
    """
    raw = os.environ.get("PEST_ENGINE_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(
            [f"PEST_ENGINE_THREADS={raw!r}: must be an integer"]
        ) from None
    if n < 0:
        raise ValidationError([f"PEST_ENGINE_THREADS={n!r}: must be >= 0"])
    return max(1, n)


def _map_ordered(fn, items):
    """Map preserving order, optionally across a process pool."""
    workers = worker_count()
    items = list(items)
    if workers <= 1 or len(items) < 2 * workers:
        return [fn(item) for item in items]
    with Pool(workers) as pool:
        return pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers)))


@dataclass(frozen=True)
class SimplexGrid:
    """Triangular lattice of forest compositions at 1/resolution spacing."""

    resolution: int

    def __post_init__(self):
        if not isinstance(self.resolution, int) or self.resolution < 1:
            raise ValidationError(
                [f"resolution={self.resolution!r}: must be an integer >= 1"]
            )

    @property
    def point_count(self) -> int:
        n = self.resolution
        return (n + 1) * (n + 2) // 2

    def points(self):
        """All lattice points, corners and edges included, in index order."""
        n = self.resolution
        out = []
        for i in range(n + 1):
            for j in range(n + 1 - i):
                out.append(Prevalence(i / n, j / n, (n - i - j) / n))
        return out


def _equilibrium_cells(prior: Prevalence, params, econ, matrix):
    """Per-assessed-state equilibrium quantities at one composition.

    Returns (k, l, s_star, prob_subsidized, prob_unsubsidized, public)
    per assessed state.  With no infested trees treatment moves nothing,
    so every cell collapses to zeros; an assessed state with zero
    marginal probability is likewise reported as zeros.
    """
    cells = []
    if prior.p_i <= 0.0:
        return [(0.0,) * 6 for _ in AssessedState]
    snap = RiskSnapshot(i0=prior.p_i, h0_comm=prior.p_h)
    profile = risk_profile(params, snap)
    for assessed in AssessedState:
        try:
            post = posterior(prior, matrix, assessed)
        except ZeroMarginalError:
            cells.append((0.0,) * 6)
            continue
        effect = game.treatment_effects(post, profile)
        decision = game.optimal_subsidy(effect.k, effect.l, econ)
        cells.append(
            (
                effect.k,
                effect.l,
                decision.s_star,
                decision.treat_prob,
                game.private_treatment_probability(effect.k, effect.l, econ, 0.0),
                game.public_treatment_decision(effect.k, effect.l, econ),
            )
        )
    return cells


def _policy_rows_at(prior: Prevalence, params, econ, matrix):
    rows = []
    cells = _equilibrium_cells(prior, params, econ, matrix)
    for assessed, cell in zip(AssessedState, cells):
        rows.append((prior.p_h, prior.p_i, prior.p_d, assessed.short) + cell)
    return rows


def policy_map(grid: SimplexGrid, params, econ, matrix):
    """Equilibrium policy table over the grid, one row per point and state."""
    fn = partial(_policy_rows_at, params=params, econ=econ, matrix=matrix)
    out = []
    for rows in _map_ordered(fn, grid.points()):
        out.extend(rows)
    return out


def delta_sweep(delta_values, params, econ_template, matrix, prevalence):
    """Subsidy, uptake and 3-year survival as the social value delta_m varies.

    The template's delta_m is replaced per sweep value; any welfare
    decomposition is dropped because it cannot stay consistent with a
    swept delta_m.  Survival is the posterior-weighted death probability
    under the equilibrium treatment probability, subtracted from one.
    """
    deltas = list(delta_values)
    if not deltas:
        raise ValidationError(["delta_range: must be nonempty"])
    for value in deltas:
        if not (isinstance(value, (int, float)) and math.isfinite(value)):
            raise ValidationError([f"delta_range value {value!r}: must be finite"])
    snap = RiskSnapshot(i0=prevalence.p_i, h0_comm=prevalence.p_h)
    profile = risk_profile(params, snap)
    posteriors = {}
    for assessed in AssessedState:
        try:
            posteriors[assessed] = posterior(prevalence, matrix, assessed)
        except ZeroMarginalError:
            posteriors[assessed] = None
    rows = []
    for delta in deltas:
        econ = replace(
            econ_template, delta_m=delta, v_m=None, w_m=None, w_m_prime=None
        )
        for assessed in AssessedState:
            post = posteriors[assessed]
            if post is None:
                rows.append((delta, assessed.short, 0.0, 0.0, math.nan))
                continue
            effect = game.treatment_effects(post, profile)
            decision = game.optimal_subsidy(effect.k, effect.l, econ)
            mu_bar_u = sum(
                post.share(s) * profile.mu_u[s] for s in TreeState
            )
            mu_bar_t = sum(
                post.share(s) * profile.mu_t[s] for s in TreeState
            )
            death = (
                decision.treat_prob * mu_bar_t
                + (1.0 - decision.treat_prob) * mu_bar_u
            )
            rows.append(
                (delta, assessed.short, decision.s_star, decision.treat_prob,
                 1.0 - death)
            )
    return rows


def _timing_row(switch_time, initial, params, econ, matrix, horizon, dt):
    scenario = ScenarioSpec(
        private_arm=PrivateArm.OPTIMAL_SUBSIDY,
        public_arm=PublicArm.OPTIMAL,
        switch_time=switch_time,
    )
    records = simulate(
        initial, params, econ, matrix, scenario, horizon=horizon, dt=dt,
        record_every=max(horizon, dt),
    )
    final = records[-1].state
    share_m = initial.h_m + initial.i_m + initial.d_m
    share_o = initial.h_o + initial.i_o + initial.d_o
    total = 1.0 - (final.d_m + final.d_o)
    public = (share_m - final.d_m) / share_m if share_m > 0 else math.nan
    private = (share_o - final.d_o) / share_o if share_o > 0 else math.nan
    return (switch_time, total, public, private)


def timing_study(
    switch_times, params, econ, matrix, initial, horizon: float = 50.0,
    dt: float = DEFAULT_DT,
):
    """Horizon survival when optimal policies start only at each switch time.

    Before the switch the forest runs under the no-action pair; each row
    reports overall, public-tree and private-tree survival at the
    horizon.
    """
    times = list(switch_times)
    for value in times:
        if not (isinstance(value, (int, float)) and 0.0 <= value <= horizon):
            raise ValidationError(
                [f"switch_times value {value!r}: must be within [0, horizon]"]
            )
    fn = partial(
        _timing_row, initial=initial, params=params, econ=econ, matrix=matrix,
        horizon=horizon, dt=dt,
    )
    return _map_ordered(fn, times)

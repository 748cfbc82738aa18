"""Grid, sweep and timing driver tests."""

import math

import numpy as np
import pytest

from pest_engine.bayes import posterior
from pest_engine.domain import (
    AssessedState,
    Prevalence,
    TreeState,
    ValidationError,
)
from pest_engine.epidemic import initial_condition
from pest_engine.game import private_treatment_probability
from pest_engine.risk import RiskSnapshot, risk_profile
from pest_engine.sweep import (
    DELTA_COLUMNS,
    SIMPLEX_COLUMNS,
    TIMING_COLUMNS,
    SimplexGrid,
    delta_sweep,
    policy_map,
    timing_study,
    worker_count,
)


class TestSimplexGrid:
    @pytest.mark.parametrize("resolution,count", [(1, 3), (2, 6), (4, 15),
                                                  (100, 5151)])
    def test_point_count(self, resolution, count):
        grid = SimplexGrid(resolution)
        assert grid.point_count == count
        assert len(grid.points()) == count

    def test_point_order_is_frozen(self):
        points = [p.as_tuple() for p in SimplexGrid(2).points()]
        assert points == [
            (0.0, 0.0, 1.0),
            (0.0, 0.5, 0.5),
            (0.0, 1.0, 0.0),
            (0.5, 0.0, 0.5),
            (0.5, 0.5, 0.0),
            (1.0, 0.0, 0.0),
        ]

    @pytest.mark.parametrize("resolution", [0, -3, 2.5])
    def test_invalid_resolution(self, resolution):
        with pytest.raises(ValidationError):
            SimplexGrid(resolution)


class TestPolicyMap:
    @pytest.fixture
    def rows(self, case_params, case_econ, case_matrix):
        return policy_map(
            SimplexGrid(20), case_params, case_econ, case_matrix
        )

    def test_shape(self, rows):
        assert len(rows) == 3 * SimplexGrid(20).point_count
        assert all(len(row) == len(SIMPLEX_COLUMNS) for row in rows)

    def test_assessed_cycle(self, rows):
        shorts = [row[3] for row in rows]
        assert shorts[:6] == ["h", "i", "d", "h", "i", "d"]

    def test_ranges(self, rows):
        for row in rows:
            assert row[4] >= 0.0 and row[5] >= 0.0
            assert row[6] >= 0.0
            assert 0.0 <= row[8] <= row[7] <= 1.0
            assert row[9] in (0.0, 1.0)

    def test_no_infestation_rows_are_inactive(self, rows):
        for row in rows:
            if row[1] == 0.0:
                assert row[4:] == (0.0,) * 6

    def test_case_study_point_matches_reference(self, rows):
        at_case = [row for row in rows if (row[0], row[1]) == (0.8, 0.15)]
        assert len(at_case) == 3
        np.testing.assert_allclose(
            [row[6] for row in at_case],
            (156.7238707322347, 136.64462284469772, 231.23416036189965),
            rtol=1e-12,
        )
        assert [row[7] for row in at_case] == [1.0, 1.0, 1.0]

    def test_unsubsidized_column_matches_game_layer(self, rows, case_econ):
        for row in rows[:60]:
            k, l = row[4], row[5]
            if row[1] == 0.0:
                continue
            assert row[8] == private_treatment_probability(k, l, case_econ, 0.0)


class TestDeltaSweep:
    def test_zero_social_value_means_no_subsidy(self, case_params, case_econ,
                                                case_matrix, case_prior):
        rows = delta_sweep(
            [0.0], case_params, case_econ, case_matrix, case_prior
        )
        assert len(rows) == 3
        profile = risk_profile(
            case_params, RiskSnapshot(i0=0.15, h0_comm=0.8)
        )
        for row, assessed in zip(rows, AssessedState):
            assert row[0] == 0.0 and row[1] == assessed.short
            assert row[2] == 0.0 and row[3] == 0.0
            post = posterior(case_prior, case_matrix, assessed)
            mu_bar_u = sum(
                post.share(s) * profile.mu_u[s] for s in TreeState
            )
            assert row[4] == pytest.approx(1.0 - mu_bar_u, rel=1e-12)

    def test_huge_social_value_buys_full_coverage(self, case_params,
                                                  case_econ, case_matrix,
                                                  case_prior):
        rows = delta_sweep(
            [1e6], case_params, case_econ, case_matrix, case_prior
        )
        profile = risk_profile(
            case_params, RiskSnapshot(i0=0.15, h0_comm=0.8)
        )
        for row, assessed in zip(rows, AssessedState):
            post = posterior(case_prior, case_matrix, assessed)
            effect_k = sum(
                post.share(s) * (profile.mu_u[s] - profile.mu_t[s])
                for s in TreeState
            )
            assert row[3] == 1.0
            assert row[2] == pytest.approx(250.0 - 675.0 * effect_k)
            mu_bar_t = sum(
                post.share(s) * profile.mu_t[s] for s in TreeState
            )
            assert row[4] == pytest.approx(1.0 - mu_bar_t, rel=1e-12)

    def test_uptake_and_survival_never_decrease_in_delta(
        self, case_params, case_econ, case_matrix, case_prior
    ):
        deltas = [100.0 * i for i in range(31)]
        rows = delta_sweep(
            deltas, case_params, case_econ, case_matrix, case_prior
        )
        for assessed in AssessedState:
            sub = [row for row in rows if row[1] == assessed.short]
            assert [row[0] for row in sub] == deltas
            probs = [row[3] for row in sub]
            survs = [row[4] for row in sub]
            assert all(b >= a - 1e-12 for a, b in zip(probs, probs[1:]))
            assert all(b >= a - 1e-12 for a, b in zip(survs, survs[1:]))

    def test_unobservable_assessed_state_is_nan(self, case_params, case_econ,
                                                case_prior):
        from pest_engine.domain import AssessmentMatrix

        matrix = AssessmentMatrix(
            ((0.9, 0.1, 0.0), (0.5, 0.5, 0.0), (0.2, 0.8, 0.0))
        )
        rows = delta_sweep(
            [500.0], case_params, case_econ, matrix, case_prior
        )
        dying_row = rows[AssessedState.DYING.value]
        assert dying_row[1] == "d"
        assert dying_row[2] == 0.0 and dying_row[3] == 0.0
        assert math.isnan(dying_row[4])

    def test_rejects_bad_ranges(self, case_params, case_econ, case_matrix,
                                case_prior):
        with pytest.raises(ValidationError):
            delta_sweep([], case_params, case_econ, case_matrix, case_prior)
        with pytest.raises(ValidationError):
            delta_sweep(
                [100.0, math.inf], case_params, case_econ, case_matrix,
                case_prior,
            )


class TestWorkerCount:
    def test_defaults_to_serial(self, monkeypatch):
        monkeypatch.delenv("PEST_ENGINE_THREADS", raising=False)
        assert worker_count() == 1
        monkeypatch.setenv("PEST_ENGINE_THREADS", "0")
        assert worker_count() == 1

    def test_explicit_count(self, monkeypatch):
        monkeypatch.setenv("PEST_ENGINE_THREADS", "3")
        assert worker_count() == 3

    @pytest.mark.parametrize("raw", ["abc", "-1", "2.5"])
    def test_rejects_garbage(self, monkeypatch, raw):
        monkeypatch.setenv("PEST_ENGINE_THREADS", raw)
        with pytest.raises(ValidationError):
            worker_count()

    def test_pool_output_matches_serial(self, monkeypatch, case_params,
                                        case_econ, case_matrix):
        grid = SimplexGrid(12)
        monkeypatch.setenv("PEST_ENGINE_THREADS", "0")
        serial = policy_map(grid, case_params, case_econ, case_matrix)
        monkeypatch.setenv("PEST_ENGINE_THREADS", "2")
        pooled = policy_map(grid, case_params, case_econ, case_matrix)
        assert pooled == serial


class TestTimingStudy:
    def test_rejects_out_of_range_times(self, case_params, case_econ,
                                        case_matrix):
        with pytest.raises(ValidationError):
            timing_study(
                [-1.0], case_params, case_econ, case_matrix,
                initial_condition(), horizon=10.0,
            )
        with pytest.raises(ValidationError):
            timing_study(
                [11.0], case_params, case_econ, case_matrix,
                initial_condition(), horizon=10.0,
            )

    def test_later_intervention_never_helps(self, case_params, case_econ,
                                            case_matrix):
        rows = timing_study(
            [0.0, 5.0, 15.0, 30.0], case_params, case_econ, case_matrix,
            initial_condition(), horizon=30.0,
        )
        assert [row[0] for row in rows] == [0.0, 5.0, 15.0, 30.0]
        assert all(len(row) == len(TIMING_COLUMNS) for row in rows)
        totals = [row[1] for row in rows]
        assert all(b <= a + 1e-12 for a, b in zip(totals, totals[1:]))

    def test_survival_shares_recombine(self, case_params, case_econ,
                                       case_matrix):
        initial = initial_condition(public_share=0.3)
        rows = timing_study(
            [2.0], case_params, case_econ, case_matrix, initial, horizon=12.0,
        )
        (switch, total, public, private), = rows
        assert switch == 2.0
        assert total == pytest.approx(0.3 * public + 0.7 * private, abs=1e-12)
        assert 0.0 < total <= 1.0

    def test_case_study_reference(self, case_params, case_econ, case_matrix):
        rows = timing_study(
            [0.0], case_params, case_econ, case_matrix, initial_condition(),
        )
        assert rows[0][1] == pytest.approx(0.814367367931681, rel=1e-9)

    def test_column_names_are_frozen(self):
        assert DELTA_COLUMNS == (
            "delta_m", "assessed", "s_star", "treat_prob", "survival_3y"
        )
        assert TIMING_COLUMNS[0] == "switch_time"
        assert SIMPLEX_COLUMNS[:3] == ("p_h", "p_i", "p_d")

"""Validation and config round-trip tests for the core value records."""

import dataclasses
import json
import math

import pytest

from pest_engine.domain import (
    AssessmentMatrix,
    EconParams,
    EpidemicParams,
    ModelConfig,
    Prevalence,
    TreeState,
    ValidationError,
    dumps_config,
    load_config,
    parse_config,
    validate,
)


class TestPrevalence:
    def test_accessors(self):
        p = Prevalence(0.8, 0.15, 0.05)
        assert p.as_tuple() == (0.8, 0.15, 0.05)
        assert p.share(TreeState.INFESTED) == 0.15
        assert p.to_dict() == {"p_h": 0.8, "p_i": 0.15, "p_d": 0.05}

    def test_exact_simplex_left_untouched(self):
        p = Prevalence(0.3, 0.3, 0.4)
        assert p.as_tuple() == (0.3, 0.3, 0.4)

    def test_tiny_drift_is_renormalized(self):
        p = Prevalence(0.3, 0.3, 0.4 + 4e-10)
        assert math.fsum(p.as_tuple()) == pytest.approx(1.0, abs=1e-15)
        assert p.p_d == pytest.approx(0.4, abs=1e-9)

    def test_tiny_negative_is_clamped(self):
        p = Prevalence(1.0 + 5e-10, -5e-10, 0.0)
        assert p.p_i == 0.0
        assert math.fsum(p.as_tuple()) == pytest.approx(1.0, abs=1e-15)

    def test_bad_sum_rejected(self):
        with pytest.raises(ValidationError):
            Prevalence(0.5, 0.5, 0.5)

    def test_all_violations_reported_at_once(self):
        with pytest.raises(ValidationError) as err:
            Prevalence(-0.3, 0.2, 1.1)
        assert len(err.value.errors) == 2
        assert "p_h" in err.value.errors[0]
        assert "p_d" in err.value.errors[1]

    def test_non_numbers_rejected(self):
        with pytest.raises(ValidationError, match="must be a number"):
            Prevalence("0.8", 0.15, 0.05)
        with pytest.raises(ValidationError, match="must be a number"):
            Prevalence(True, 0.0, 0.0)
        with pytest.raises(ValidationError, match="must be finite"):
            Prevalence(math.nan, 0.5, 0.5)


class TestAssessmentMatrix:
    def test_identity(self):
        m = AssessmentMatrix.identity()
        for true in TreeState:
            assert m.row(true)[true.value] == 1.0

    def test_lookup_orientation(self, case_matrix):
        # rows are indexed by true state, columns by assessed state
        from pest_engine.domain import AssessedState

        assert case_matrix.p(AssessedState.INFESTED, TreeState.HEALTHY) == 0.1
        assert case_matrix.p(AssessedState.HEALTHY, TreeState.INFESTED) == 0.49
        assert case_matrix.row(TreeState.DYING) == (0.01, 0.19, 0.8)

    def test_row_errors_are_labelled(self):
        with pytest.raises(ValidationError) as err:
            AssessmentMatrix(((0.89, 0.1, 0.01), (2.0, 0.5, 0.01), (0.01, 0.19, 0.8)))
        assert any("rows[i]" in e for e in err.value.errors)

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValidationError):
            AssessmentMatrix(((1.0, 0.0), (0.0, 1.0)))
        with pytest.raises(ValidationError):
            AssessmentMatrix(((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 1.0)))

    def test_row_drift_renormalized(self):
        m = AssessmentMatrix(
            ((0.89, 0.1, 0.01 + 3e-10), (0.49, 0.5, 0.01), (0.01, 0.19, 0.8))
        )
        assert math.fsum(m.row(TreeState.HEALTHY)) == pytest.approx(1.0, abs=1e-15)

    def test_entries_stored_as_floats(self):
        m = AssessmentMatrix(((1, 0, 0), (0, 1, 0), (0, 0, 1)))
        assert all(isinstance(v, float) for row in m.rows for v in row)


class TestEpidemicParams:
    def test_case_study_valid(self, case_params):
        assert validate(case_params) is case_params

    @pytest.mark.parametrize(
        "field, value",
        [
            ("beta", 0.0),
            ("gamma", -0.3),
            ("tau_star", 0.0),
            ("alpha", -1.0),
            ("eps_h", 1.5),
            ("eps_i", -0.1),
        ],
    )
    def test_single_bad_field(self, case_params, field, value):
        with pytest.raises(ValidationError, match=field):
            dataclasses.replace(case_params, **{field: value})

    def test_multiple_bad_fields_all_listed(self):
        with pytest.raises(ValidationError) as err:
            EpidemicParams(
                beta=0.0, gamma=0.3, alpha=1.0, eps_h=2.0, eps_i=0.5, tau_star=-1.0
            )
        assert len(err.value.errors) == 3


class TestEconParams:
    def test_decomposition_must_be_complete(self, case_econ):
        with pytest.raises(ValidationError, match="requires all three"):
            dataclasses.replace(case_econ, w_m=None)

    def test_decomposition_must_be_consistent(self, case_econ):
        with pytest.raises(ValidationError, match="must equal delta_m"):
            dataclasses.replace(case_econ, v_m=751.0)
        with pytest.raises(ValidationError, match="delta_m_prime"):
            dataclasses.replace(case_econ, w_m_prime=1101.0)

    def test_decomposition_tolerates_float_dust(self, case_econ):
        econ = dataclasses.replace(case_econ, v_m=750.0 + 5e-10)
        assert econ.has_decomposition

    def test_decomposition_optional(self):
        econ = EconParams(
            cost_c=250.0, a=675.0, b=1100.0, delta_m=1150.0, delta_m_prime=1850.0
        )
        assert not econ.has_decomposition
        assert "v_m" not in econ.to_dict()

    def test_owner_value_bounds_ordered(self, case_econ):
        with pytest.raises(ValidationError, match="need a <= b"):
            dataclasses.replace(case_econ, a=1200.0)

    def test_equal_bounds_allowed(self):
        econ = EconParams(
            cost_c=250.0, a=800.0, b=800.0, delta_m=1150.0, delta_m_prime=1850.0
        )
        assert econ.a == econ.b

    def test_nonpositive_cost_rejected(self, case_econ):
        with pytest.raises(ValidationError, match="cost_c"):
            dataclasses.replace(case_econ, cost_c=0.0)


class TestConfigDocument:
    def _document(self, case_config_path):
        with open(case_config_path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def test_load_case_study(self, case_config_path, case_params, case_econ,
                             case_matrix, case_prior):
        model = load_config(case_config_path)
        assert model.epidemic == case_params
        assert model.econ == case_econ
        assert model.assessment == case_matrix
        assert model.prevalence == case_prior

    def test_round_trip_is_bit_exact(self, case_config_path):
        model = load_config(case_config_path)
        again = parse_config(json.loads(dumps_config(model)))
        assert again == model
        assert dumps_config(again) == dumps_config(model)

    def test_errors_collected_across_sections(self, case_config_path):
        document = self._document(case_config_path)
        del document["prevalence"]
        document["epidemic"]["beta"] = -1.0
        document["econ"]["typo"] = 1.0
        with pytest.raises(ValidationError) as err:
            parse_config(document)
        text = str(err.value)
        assert "prevalence: missing required section" in text
        assert "epidemic.beta" in text
        assert "econ.typo: unknown field" in text

    def test_missing_fields_named(self, case_config_path):
        document = self._document(case_config_path)
        del document["epidemic"]["gamma"]
        with pytest.raises(ValidationError, match="missing required field"):
            parse_config(document)

    def test_run_sections_ignored_by_model_parser(self, case_config_path):
        # scenario/sweep/timing blocks belong to the CLI layer
        document = self._document(case_config_path)
        assert "scenario" in document
        model = parse_config(document)
        assert isinstance(model, ModelConfig)

    def test_non_object_rejected(self):
        with pytest.raises(ValidationError):
            parse_config([1, 2, 3])

"""Shared fixtures: the emerald ash borer case-study parameter set."""

from pathlib import Path

import pytest

from pest_engine.domain import (
    AssessmentMatrix,
    EconParams,
    EpidemicParams,
    Prevalence,
)

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def case_config_path() -> Path:
    path = REPO_ROOT / "configs" / "case_study.json"
    assert path.is_file()
    return path


@pytest.fixture()
def case_params() -> EpidemicParams:
    return EpidemicParams(
        beta=1.0, gamma=0.3, alpha=1.0, eps_h=0.97, eps_i=0.5, tau_star=3.0
    )


@pytest.fixture()
def case_econ() -> EconParams:
    return EconParams(
        cost_c=250.0,
        a=675.0,
        b=1100.0,
        delta_m=1150.0,
        delta_m_prime=1850.0,
        v_m=750.0,
        w_m=400.0,
        w_m_prime=1100.0,
    )


@pytest.fixture()
def case_matrix() -> AssessmentMatrix:
    return AssessmentMatrix(
        ((0.89, 0.1, 0.01), (0.49, 0.5, 0.01), (0.01, 0.19, 0.8))
    )


@pytest.fixture()
def case_prior() -> Prevalence:
    return Prevalence(0.8, 0.15, 0.05)

"""Core value records and validation for the pest policy engine.

Immutable parameter and state types shared by every other module:
epidemic rate constants, treatment economics, the assessment error
matrix, and forest composition.  Records validate on construction and
report every violated invariant at once, so a bad config surfaces as
one readable error instead of a crash cascade.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

# Probabilities are accepted as exact within SIMPLEX_ATOL, silently
# renormalized when off by at most RENORM_ATOL, and rejected beyond that.
# The renormalization band catches accumulated float error without
# rescaling genuinely bad data.
SIMPLEX_ATOL = 1e-12
RENORM_ATOL = 1e-9
DECOMP_ATOL = 1e-9  # consistency tolerance for the value decomposition


class TreeState(Enum):
    """True condition of a tree."""

    HEALTHY = 0
    INFESTED = 1
    DYING = 2

    @property
    def short(self) -> str:
        return "hid"[self.value]


class AssessedState(Enum):
    """Condition assigned by a fallible visual inspection."""

    HEALTHY = 0
    INFESTED = 1
    DYING = 2

    @property
    def short(self) -> str:
        return "hid"[self.value]


class ValidationError(ValueError):
    """Raised with the full list of violated invariants, not just the first."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _check_finite(name, value, errors) -> bool:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{name}={value!r}: must be a number")
        return False
    if not math.isfinite(value):
        errors.append(f"{name}={value!r}: must be finite")
        return False
    return True


def _normalize_probs(names, values, errors, what):
    """Validate a probability vector, renormalizing tiny drift.

    Returns the (possibly rescaled) values.  Appends to `errors` when the
    vector is farther than RENORM_ATOL from the simplex.
    """
    finite = [_check_finite(n, v, errors) for n, v in zip(names, values)]
    if not all(finite):
        return values
    for n, v in zip(names, values):
        if v < -RENORM_ATOL or v > 1.0 + RENORM_ATOL:
            errors.append(f"{n}={v!r}: outside [0, 1]")
    total = math.fsum(values)
    if abs(total - 1.0) > RENORM_ATOL:
        errors.append(f"{what}: components sum to {total!r}, expected 1")
    if errors:
        return values
    clamped = [max(0.0, min(1.0, v)) for v in values]
    total = math.fsum(clamped)
    if abs(total - 1.0) <= SIMPLEX_ATOL and all(
        c == v for c, v in zip(clamped, values)
    ):
        return values
    return [v / total for v in clamped]


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Prevalence:
    """Forest composition by true state; a point on the probability simplex."""

    p_h: float  # healthy share
    p_i: float  # infested share
    p_d: float  # dying share

    def __post_init__(self):
        errors: list[str] = []
        fixed = _normalize_probs(
            ("p_h", "p_i", "p_d"),
            (self.p_h, self.p_i, self.p_d),
            errors,
            "prevalence",
        )
        if errors:
            raise ValidationError(errors)
        for name, value in zip(("p_h", "p_i", "p_d"), fixed):
            object.__setattr__(self, name, float(value))

    def share(self, state: TreeState) -> float:
        return (self.p_h, self.p_i, self.p_d)[state.value]

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_h, self.p_i, self.p_d)

    def to_dict(self) -> dict:
        return {"p_h": self.p_h, "p_i": self.p_i, "p_d": self.p_d}


@dataclass(frozen=True)
class AssessmentMatrix:
    """P(assessed | true) with rows indexed by true state, columns by assessed."""

    rows: tuple

    def __post_init__(self):
        errors: list[str] = []
        raw = self.rows
        if not isinstance(raw, Sequence) or len(raw) != 3:
            raise ValidationError(["rows: expected 3 rows of 3 probabilities"])
        fixed_rows = []
        for true_state, row in zip(TreeState, raw):
            if not isinstance(row, Sequence) or len(row) != 3:
                errors.append(f"rows[{true_state.short}]: expected 3 entries")
                continue
            names = [
                f"rows[{true_state.short}][{a.short}]" for a in AssessedState
            ]
            fixed_rows.append(
                _normalize_probs(
                    names, tuple(row), errors, f"rows[{true_state.short}]"
                )
            )
        if errors:
            raise ValidationError(errors)
        object.__setattr__(
            self, "rows", tuple(tuple(float(v) for v in row) for row in fixed_rows)
        )

    @classmethod
    def identity(cls) -> "AssessmentMatrix":
        return cls(((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)))

    def p(self, assessed: AssessedState, true: TreeState) -> float:
        """P(assessed | true)."""
        return self.rows[true.value][assessed.value]

    def row(self, true: TreeState) -> tuple:
        return self.rows[true.value]

    def to_dict(self) -> dict:
        return {"rows": [list(r) for r in self.rows]}


@dataclass(frozen=True)
class EpidemicParams:
    """Rate constants of the infestation and mortality process."""

    beta: float  # infection pressure per unit infested share (1/year)
    gamma: float  # mortality rate of untreated infested trees (1/year)
    alpha: float  # recovery rate of treated infested trees (1/year)
    eps_h: float  # treatment efficacy at blocking infection of healthy trees
    eps_i: float  # treatment efficacy at curing infested trees
    tau_star: float  # owner decision horizon (years)

    def __post_init__(self):
        errors: list[str] = []
        for name in ("beta", "gamma", "tau_star"):
            value = getattr(self, name)
            if _check_finite(name, value, errors) and value <= 0:
                errors.append(f"{name}={value!r}: must be > 0")
        if _check_finite("alpha", self.alpha, errors) and self.alpha < 0:
            errors.append(f"alpha={self.alpha!r}: must be >= 0")
        for name in ("eps_h", "eps_i"):
            value = getattr(self, name)
            if _check_finite(name, value, errors) and not 0 <= value <= 1:
                errors.append(f"{name}={value!r}: must be in [0, 1]")
        if errors:
            raise ValidationError(errors)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "eps_h": self.eps_h,
            "eps_i": self.eps_i,
            "tau_star": self.tau_star,
        }


@dataclass(frozen=True)
class EconParams:
    """Treatment economics: costs, owner types, and social values."""

    cost_c: float  # firm's cost of one treatment course (currency)
    a: float  # lower bound of the owner's value of avoiding mortality
    b: float  # upper bound of the owner's value of avoiding mortality
    delta_m: float  # social value of avoiding private-tree mortality
    delta_m_prime: float  # social value of avoiding public-tree mortality
    # Optional decomposition used only by welfare accounting: delta_m
    # must equal v_m + w_m and delta_m_prime must equal v_m + w_m_prime.
    v_m: float | None = None  # annualizable survival-benefit component
    w_m: float | None = None  # avoided removal cost, private tree
    w_m_prime: float | None = None  # avoided removal cost, public tree

    def __post_init__(self):
        errors: list[str] = []
        if _check_finite("cost_c", self.cost_c, errors) and self.cost_c <= 0:
            errors.append(f"cost_c={self.cost_c!r}: must be > 0")
        ok_a = _check_finite("a", self.a, errors)
        ok_b = _check_finite("b", self.b, errors)
        if ok_a and self.a < 0:
            errors.append(f"a={self.a!r}: must be >= 0")
        if ok_a and ok_b and self.a > self.b:
            errors.append(f"a={self.a!r}, b={self.b!r}: need a <= b")
        for name in ("delta_m", "delta_m_prime"):
            value = getattr(self, name)
            if _check_finite(name, value, errors) and value < 0:
                errors.append(f"{name}={value!r}: must be >= 0")
        given = [
            name
            for name in ("v_m", "w_m", "w_m_prime")
            if getattr(self, name) is not None
        ]
        if given and len(given) < 3:
            errors.append(
                "v_m/w_m/w_m_prime: decomposition requires all three, "
                f"got only {', '.join(given)}"
            )
        elif given:
            ok = all(
                _check_finite(n, getattr(self, n), errors)
                for n in ("v_m", "w_m", "w_m_prime")
            )
            if ok:
                if abs(self.v_m + self.w_m - self.delta_m) > DECOMP_ATOL:
                    errors.append(
                        f"v_m+w_m={self.v_m + self.w_m!r}: "
                        f"must equal delta_m={self.delta_m!r}"
                    )
                if abs(self.v_m + self.w_m_prime - self.delta_m_prime) > DECOMP_ATOL:
                    errors.append(
                        f"v_m+w_m_prime={self.v_m + self.w_m_prime!r}: "
                        f"must equal delta_m_prime={self.delta_m_prime!r}"
                    )
        if errors:
            raise ValidationError(errors)

    @property
    def has_decomposition(self) -> bool:
        return self.v_m is not None

    def to_dict(self) -> dict:
        out = {
            "cost_c": self.cost_c,
            "a": self.a,
            "b": self.b,
            "delta_m": self.delta_m,
            "delta_m_prime": self.delta_m_prime,
        }
        if self.has_decomposition:
            out["v_m"] = self.v_m
            out["w_m"] = self.w_m
            out["w_m_prime"] = self.w_m_prime
        return out


def validate(value):
    """Re-run invariant checks on an existing record.

    Returns the value when every invariant holds, otherwise raises
    ValidationError listing all violations.
    """
    replace(value)
    return value


# ---------------------------------------------------------------------------
# configuration document
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelConfig:
    """The four model blocks of a configuration document."""

    epidemic: EpidemicParams
    econ: EconParams
    assessment: AssessmentMatrix
    prevalence: Prevalence

    def to_dict(self) -> dict:
        return {
            "epidemic": self.epidemic.to_dict(),
            "econ": self.econ.to_dict(),
            "assessment": self.assessment.to_dict(),
            "prevalence": self.prevalence.to_dict(),
        }


_SECTION_FIELDS = {
    "epidemic": (
        ("beta", "gamma", "alpha", "eps_h", "eps_i", "tau_star"),
        (),
    ),
    "econ": (
        ("cost_c", "a", "b", "delta_m", "delta_m_prime"),
        ("v_m", "w_m", "w_m_prime"),
    ),
    "assessment": (("rows",), ()),
    "prevalence": (("p_h", "p_i", "p_d"), ()),
}


def _section_kwargs(name, section, errors):
    """Pull one config section into constructor kwargs, recording problems."""
    required, optional = _SECTION_FIELDS[name]
    if not isinstance(section, Mapping):
        errors.append(f"{name}: expected an object")
        return None
    kwargs = {}
    for key in section:
        if key not in required and key not in optional:
            errors.append(f"{name}.{key}: unknown field")
    missing = [key for key in required if key not in section]
    if missing:
        errors.append(f"{name}: missing required field(s) {', '.join(missing)}")
    if errors:
        return None
    for key in required:
        kwargs[key] = section[key]
    for key in optional:
        if key in section:
            kwargs[key] = section[key]
    if name == "assessment":
        rows = kwargs["rows"]
        if isinstance(rows, Sequence):
            kwargs["rows"] = tuple(
                tuple(r) if isinstance(r, Sequence) else r for r in rows
            )
    return kwargs


_SECTION_TYPES = {
    "epidemic": EpidemicParams,
    "econ": EconParams,
    "assessment": AssessmentMatrix,
    "prevalence": Prevalence,
}


def parse_config(document: Mapping) -> ModelConfig:
    """Build a ModelConfig from a parsed JSON object.

    Collects every problem across all four sections before raising, so a
    config with several typos is reported in one pass.
    """
    if not isinstance(document, Mapping):
        raise ValidationError(["config: expected a JSON object"])
    errors: list[str] = []
    parts = {}
    for name, cls in _SECTION_TYPES.items():
        if name not in document:
            errors.append(f"{name}: missing required section")
            continue
        section_errors: list[str] = []
        kwargs = _section_kwargs(name, document[name], section_errors)
        if kwargs is not None:
            try:
                parts[name] = cls(**kwargs)
            except ValidationError as exc:
                section_errors.extend(f"{name}.{e}" for e in exc.errors)
        errors.extend(section_errors)
    if errors:
        raise ValidationError(errors)
    return ModelConfig(**parts)


def load_config(path) -> ModelConfig:
    """Read and validate the model blocks of a JSON config file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(json.load(fh))


def dumps_config(config: ModelConfig) -> str:
    """Serialize a config; parse(dumps(c)) reproduces every field bit-exactly."""
    return json.dumps(config.to_dict(), indent=2, sort_keys=True)

"""Command-line entry point.

Four subcommands bind a JSON config file to the engine: `policy` prints
equilibrium subsidy decisions for one forest composition, `simulate`
writes scenario trajectory CSVs, `sweep` writes the simplex policy map
and the social-value sweep, and `timing` writes the intervention-timing
table.  CSV outputs land in the output directory via atomic writes,
together with a manifest recording the config hash, the engine version,
and row counts.

Exit codes: 0 success, 2 configuration problem, 3 output I/O problem,
4 integration step too large.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

from . import __version__, game
from .bayes import ZeroMarginalError, posterior
from .domain import (
    AssessedState,
    ModelConfig,
    Prevalence,
    ValidationError,
    parse_config,
)
from .epidemic import (
    DEFAULT_DT,
    DEFAULT_RECORD_EVERY,
    PrivateArm,
    PublicArm,
    SCENARIO_MATRIX,
    ScenarioSpec,
    StepTooLargeError,
    TRAJECTORY_COLUMNS,
    initial_condition,
    simulate,
    trajectory_rows,
)
from .risk import RiskSnapshot, risk_profile
from .sweep import (
    DELTA_COLUMNS,
    SIMPLEX_COLUMNS,
    SimplexGrid,
    TIMING_COLUMNS,
    delta_sweep,
    policy_map,
    timing_study,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_STEP = 4

_PRIVATE_ARMS = {arm.value: arm for arm in PrivateArm}
_PUBLIC_ARMS = {arm.value: arm for arm in PublicArm}
_ASSESSED_NAMES = {
    "healthy": AssessedState.HEALTHY,
    "infested": AssessedState.INFESTED,
    "dying": AssessedState.DYING,
}

_RUN_SECTIONS = ("scenario", "sweep", "timing", "output_dir")
_MODEL_SECTIONS = ("epidemic", "econ", "assessment", "prevalence")


class ConfigError(ValueError):
    pass


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".9g")


def _config_hash(document) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _load_document(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _load_config(path: str):
    document = _load_document(path)
    if not isinstance(document, dict):
        raise ConfigError(f"config {path}: expected a JSON object")
    unknown = [
        key
        for key in document
        if key not in _MODEL_SECTIONS and key not in _RUN_SECTIONS
    ]
    if unknown:
        raise ConfigError(
            f"config {path}: unknown top-level key(s) {', '.join(sorted(unknown))}"
        )
    model = parse_config(document)
    return document, model


def _block(document, name) -> dict:
    block = document.get(name, {})
    if not isinstance(block, dict):
        raise ConfigError(f"config section {name!r}: expected an object")
    return dict(block)


def _take_number(block, section, key, default, minimum=None, allow_none=False):
    value = block.pop(key, default)
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}={value!r}: must be a number")
    if not math.isfinite(value):
        raise ConfigError(f"{section}.{key}={value!r}: must be finite")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{section}.{key}={value!r}: must be >= {minimum}")
    return float(value)


def _reject_leftovers(block, section):
    if block:
        raise ConfigError(
            f"config section {section!r}: unknown field(s) "
            f"{', '.join(sorted(block))}"
        )


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(
        dir=str(path.parent), prefix=path.name + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_csv(path: Path, columns, rows) -> int:
    lines = [",".join(columns)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")
    return len(rows)


def _write_manifest(out_dir: Path, document, command: str, outputs: dict):
    manifest = {
        "engine_version": __version__,
        "config_hash": _config_hash(document),
        "command": command,
        "outputs": {name: {"rows": rows} for name, rows in outputs.items()},
    }
    _atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2) + "\n")


def _out_dir(args, document=None) -> Path:
    if args.out is not None:
        out = Path(args.out)
    elif document is not None and "output_dir" in document:
        configured = document["output_dir"]
        if not isinstance(configured, str):
            raise ConfigError(f"output_dir={configured!r}: must be a string")
        out = Path(configured)
    else:
        out = Path("out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_prevalence(text: str) -> Prevalence:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--prevalence {text!r}: expected three numbers h,i,d")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(
            f"--prevalence {text!r}: expected three numbers h,i,d"
        ) from None
    return Prevalence(*values)


def _parse_scenario_flag(text: str) -> tuple[PrivateArm, PublicArm]:
    pairs = {}
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(
                f"--scenario {text!r}: expected private=...,public=..."
            )
        key, _, value = item.partition("=")
        pairs[key.strip()] = value.strip()
    extra = set(pairs) - {"private", "public"}
    if extra or set(pairs) != {"private", "public"}:
        raise ConfigError(f"--scenario {text!r}: expected private=...,public=...")
    if pairs["private"] not in _PRIVATE_ARMS:
        raise ConfigError(
            f"--scenario private={pairs['private']!r}: expected one of "
            f"{', '.join(_PRIVATE_ARMS)}"
        )
    if pairs["public"] not in _PUBLIC_ARMS:
        raise ConfigError(
            f"--scenario public={pairs['public']!r}: expected one of "
            f"{', '.join(_PUBLIC_ARMS)}"
        )
    return _PRIVATE_ARMS[pairs["private"]], _PUBLIC_ARMS[pairs["public"]]


def _parse_switch_times(text: str):
    try:
        return [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise ConfigError(
            f"--switch-times {text!r}: expected comma-separated numbers"
        ) from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_policy(args) -> int:
    document, model = _load_config(args.config)
    prior = (
        _parse_prevalence(args.prevalence)
        if args.prevalence
        else model.prevalence
    )
    states = (
        [_ASSESSED_NAMES[args.assessed]] if args.assessed else list(AssessedState)
    )
    entries = {}
    corner = prior.p_i <= 0.0
    profile = None
    if not corner:
        snap = RiskSnapshot(i0=prior.p_i, h0_comm=prior.p_h)
        profile = risk_profile(model.epidemic, snap)
    for assessed in states:
        if corner:
            k = l = 0.0
            decision = game.optimal_subsidy(0.0, 0.0, model.econ)
            public = 0.0
        else:
            try:
                post = posterior(prior, model.assessment, assessed)
            except ZeroMarginalError:
                entries[assessed.name.lower()] = None
                continue
            effect = game.treatment_effects(post, profile)
            k, l = effect.k, effect.l
            decision = game.optimal_subsidy(k, l, model.econ)
            public = game.public_treatment_decision(k, l, model.econ)
        entries[assessed.name.lower()] = {
            "k": k,
            "l": l,
            "s_star": decision.s_star,
            "regime": decision.regime.value,
            "price": decision.price,
            "treat_prob": decision.treat_prob,
            "muni_eu_gain": decision.muni_eu,
            "public_treat": public,
        }
    doc = {
        "engine_version": __version__,
        "config_hash": _config_hash(document),
        "prevalence": prior.to_dict(),
        "assessed": entries,
    }
    text = json.dumps(doc, indent=2)
    if args.out is not None:
        out = _out_dir(args, document)
        _atomic_write(out / "policy.json", text + "\n")
    else:
        print(text)
    return EXIT_OK


def _scenario_settings(document, model, args):
    block = _block(document, "scenario")
    matrix_flag = block.pop("matrix", None)
    if matrix_flag is not None and not isinstance(matrix_flag, bool):
        raise ConfigError(f"scenario.matrix={matrix_flag!r}: must be a boolean")
    private_name = block.pop("private", None)
    public_name = block.pop("public", None)
    switch_time = _take_number(
        block, "scenario", "switch_time", None, minimum=0.0, allow_none=True
    )
    horizon = _take_number(block, "scenario", "horizon", 50.0, minimum=0.0)
    dt = _take_number(block, "scenario", "dt", DEFAULT_DT)
    record_every = _take_number(
        block, "scenario", "record_every", DEFAULT_RECORD_EVERY
    )
    public_share = _take_number(
        block, "scenario", "public_share", 0.4, minimum=0.0
    )
    infested = _take_number(block, "scenario", "infested", 0.01, minimum=0.0)
    _reject_leftovers(block, "scenario")
    if args.horizon is not None:
        horizon = args.horizon
    if args.dt is not None:
        dt = args.dt
    if args.scenario:
        pairs = [_parse_scenario_flag(args.scenario)]
    elif private_name is not None or public_name is not None:
        if private_name not in _PRIVATE_ARMS:
            raise ConfigError(
                f"scenario.private={private_name!r}: expected one of "
                f"{', '.join(_PRIVATE_ARMS)}"
            )
        if public_name not in _PUBLIC_ARMS:
            raise ConfigError(
                f"scenario.public={public_name!r}: expected one of "
                f"{', '.join(_PUBLIC_ARMS)}"
            )
        pairs = [(_PRIVATE_ARMS[private_name], _PUBLIC_ARMS[public_name])]
        if matrix_flag:
            raise ConfigError(
                "scenario: give either matrix=true or an explicit "
                "private/public pair, not both"
            )
    else:
        pairs = [(s.private_arm, s.public_arm) for s in SCENARIO_MATRIX]
    scenarios = [
        ScenarioSpec(private_arm=p, public_arm=q, switch_time=switch_time)
        for p, q in pairs
    ]
    initial = initial_condition(public_share=public_share, infested=infested)
    return scenarios, initial, horizon, dt, record_every


def cmd_simulate(args) -> int:
    document, model = _load_config(args.config)
    scenarios, initial, horizon, dt, record_every = _scenario_settings(
        document, model, args
    )
    out = _out_dir(args, document)
    outputs = {}
    for scenario in scenarios:
        records = simulate(
            initial,
            model.epidemic,
            model.econ,
            model.assessment,
            scenario,
            horizon=horizon,
            dt=dt,
            record_every=record_every,
        )
        name = f"traj_{scenario.slug}.csv"
        outputs[name] = _write_csv(
            out / name, TRAJECTORY_COLUMNS, trajectory_rows(records)
        )
        log.info("wrote %s (%d rows)", name, outputs[name])
    _write_manifest(out, document, "simulate", outputs)
    return EXIT_OK


def cmd_sweep(args) -> int:
    document, model = _load_config(args.config)
    block = _block(document, "sweep")
    resolution = block.pop("resolution", 100)
    if args.resolution is not None:
        resolution = args.resolution
    delta_values = block.pop("delta_values", None)
    delta_min = _take_number(block, "sweep", "delta_min", 0.0, minimum=0.0)
    delta_max = _take_number(
        block, "sweep", "delta_max", 2.0 * model.econ.delta_m_prime
    )
    steps = block.pop("delta_steps", 101)
    _reject_leftovers(block, "sweep")
    if not isinstance(steps, int) or steps < 2:
        raise ConfigError(f"sweep.delta_steps={steps!r}: must be an integer >= 2")
    if delta_values is None:
        width = (delta_max - delta_min) / (steps - 1)
        delta_values = [delta_min + i * width for i in range(steps)]
    elif not isinstance(delta_values, list):
        raise ConfigError("sweep.delta_values: must be a list of numbers")
    out = _out_dir(args, document)
    grid = SimplexGrid(resolution)
    simplex_rows = policy_map(grid, model.epidemic, model.econ, model.assessment)
    delta_rows = delta_sweep(
        delta_values,
        model.epidemic,
        model.econ,
        model.assessment,
        model.prevalence,
    )
    outputs = {
        "simplex.csv": _write_csv(out / "simplex.csv", SIMPLEX_COLUMNS, simplex_rows),
        "delta_sweep.csv": _write_csv(
            out / "delta_sweep.csv", DELTA_COLUMNS, delta_rows
        ),
    }
    _write_manifest(out, document, "sweep", outputs)
    return EXIT_OK


def cmd_timing(args) -> int:
    document, model = _load_config(args.config)
    block = _block(document, "timing")
    horizon = _take_number(block, "timing", "horizon", 50.0, minimum=0.0)
    dt = _take_number(block, "timing", "dt", DEFAULT_DT)
    switch_times = block.pop("switch_times", None)
    public_share = _take_number(block, "timing", "public_share", 0.4, minimum=0.0)
    infested = _take_number(block, "timing", "infested", 0.01, minimum=0.0)
    _reject_leftovers(block, "timing")
    if args.horizon is not None:
        horizon = args.horizon
    if args.dt is not None:
        dt = args.dt
    if args.switch_times is not None:
        switch_times = _parse_switch_times(args.switch_times)
    if switch_times is None:
        switch_times = [3.5 * i for i in range(9)]
    if not isinstance(switch_times, list) or not switch_times:
        raise ConfigError("timing.switch_times: must be a nonempty list")
    initial = initial_condition(public_share=public_share, infested=infested)
    rows = timing_study(
        switch_times,
        model.epidemic,
        model.econ,
        model.assessment,
        initial,
        horizon=horizon,
        dt=dt,
    )
    out = _out_dir(args, document)
    outputs = {
        "timing.csv": _write_csv(out / "timing.csv", TIMING_COLUMNS, rows)
    }
    _write_manifest(out, document, "timing", outputs)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pest-engine",
        description=(
            "Subsidy-equilibrium and epidemic simulation engine for "
            "urban tree pest management."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument(
            "--config", required=True, help="path to the JSON config file"
        )
        p.add_argument("--out", default=None, help=out_help)
        p.add_argument(
            "--seed",
            type=int,
            default=None,
            help=(
                "random seed for Monte Carlo test utilities; engine "
                "commands are deterministic and ignore it"
            ),
        )

    p_policy = sub.add_parser(
        "policy", help="print equilibrium decisions for one composition"
    )
    common(p_policy, "directory to write policy.json instead of stdout")
    p_policy.add_argument(
        "--prevalence",
        default=None,
        help="override the config prevalence as three numbers h,i,d",
    )
    p_policy.add_argument(
        "--assessed",
        choices=sorted(_ASSESSED_NAMES),
        default=None,
        help="restrict the report to one assessed state",
    )
    p_policy.set_defaults(fn=cmd_policy)

    p_sim = sub.add_parser(
        "simulate", help="integrate the scenario matrix and write trajectories"
    )
    common(p_sim, "output directory (default ./out)")
    p_sim.add_argument(
        "--dt", type=float, default=None, help="integration step in years"
    )
    p_sim.add_argument(
        "--horizon", type=float, default=None, help="simulated years"
    )
    p_sim.add_argument(
        "--scenario",
        default=None,
        help=(
            "run a single scenario, e.g. private=optimal,public=none "
            "(private: none nosubsidy optimal; public: none optimal)"
        ),
    )
    p_sim.set_defaults(fn=cmd_simulate)

    p_sweep = sub.add_parser(
        "sweep", help="write the simplex policy map and the delta_m sweep"
    )
    common(p_sweep, "output directory (default ./out)")
    p_sweep.add_argument(
        "--resolution",
        type=int,
        default=None,
        help="simplex grid resolution (default 100)",
    )
    p_sweep.set_defaults(fn=cmd_sweep)

    p_timing = sub.add_parser(
        "timing", help="write horizon survival per intervention start time"
    )
    common(p_timing, "output directory (default ./out)")
    p_timing.add_argument(
        "--dt", type=float, default=None, help="integration step in years"
    )
    p_timing.add_argument(
        "--horizon", type=float, default=None, help="simulated years"
    )
    p_timing.add_argument(
        "--switch-times",
        default=None,
        help="comma-separated policy start times in years",
    )
    p_timing.set_defaults(fn=cmd_timing)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepTooLargeError as exc:
        print(
            f"integration failed: {exc}\n"
            "hint: rerun with a smaller --dt (the default is 1/64)",
            file=sys.stderr,
        )
        return EXIT_STEP
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

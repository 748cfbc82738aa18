"""Command layer: one console script per figure family.

Each script reads CSVs plus the engine manifest, renders one figure,
and writes a PNG and an SVG next to each other.  The config hash from
the manifest goes into the caption, the PNG metadata, and the SVG id
salt, so outputs are traceable and reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from . import __version__
from .families import (
    delta_figure,
    simplex_figure,
    timing_figure,
    trajectories_figure,
)
from .io import (
    DELTA_COLUMNS,
    FigureInputError,
    FigureSpec,
    SIMPLEX_COLUMNS,
    TIMING_COLUMNS,
    TRAJECTORY_COLUMNS,
    config_hash_for,
    load_table,
)

EXIT_OK = 0
EXIT_INPUT = 2


def _build_parser(family: str, description: str, many: bool):
    parser = argparse.ArgumentParser(
        prog=f"plot_{family}", description=description
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        metavar="PATH",
        help="input CSV" + ("; repeat for one panel per file" if many else ""),
    )
    parser.add_argument(
        "--out",
        required=True,
        metavar="PATH",
        help="output image path; both .png and .svg are written",
    )
    parser.add_argument(
        "--manifest",
        default=None,
        metavar="PATH",
        help="manifest.json carrying the config hash "
        "(default: looked up next to the inputs)",
    )
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument(
        "--cmap", default="viridis", help="colormap for heatmap panels"
    )
    return parser


def save_figure(fig, spec: FigureSpec, config_hash: str):
    out = Path(spec.out)
    base = out.with_suffix("") if out.suffix in {".png", ".svg"} else out
    base.parent.mkdir(parents=True, exist_ok=True)
    png, svg = base.with_suffix(".png"), base.with_suffix(".svg")
    # fixed hashsalt and no embedded date keep the SVG reproducible
    with plt.rc_context({"svg.hashsalt": config_hash}):
        fig.savefig(png, dpi=spec.dpi, metadata={"ConfigHash": config_hash})
        fig.savefig(svg, metadata={"Date": None})
    plt.close(fig)
    return png, svg


def _single_input(spec: FigureSpec) -> Path:
    if len(spec.inputs) != 1:
        raise FigureInputError(
            f"plot_{spec.family} takes exactly one input CSV, got "
            f"{len(spec.inputs)}"
        )
    return Path(spec.inputs[0])


def _build_trajectories(spec, config_hash):
    tables = [load_table(path, TRAJECTORY_COLUMNS) for path in spec.inputs]
    return trajectories_figure(tables, config_hash)


def _build_simplex(spec, config_hash):
    table = load_table(
        _single_input(spec), SIMPLEX_COLUMNS, text_columns=("assessed",)
    )
    return simplex_figure(table, config_hash, cmap=spec.cmap)


def _build_delta(spec, config_hash):
    table = load_table(
        _single_input(spec), DELTA_COLUMNS, text_columns=("assessed",)
    )
    return delta_figure(table, config_hash)


def _build_timing(spec, config_hash):
    table = load_table(_single_input(spec), TIMING_COLUMNS)
    return timing_figure(table, config_hash)


def _run(family: str, description: str, build, argv, many: bool) -> int:
    args = _build_parser(family, description, many).parse_args(argv)
    try:
        if args.dpi <= 0:
            raise FigureInputError(f"--dpi {args.dpi}: must be positive")
        spec = FigureSpec(
            inputs=tuple(args.inputs),
            out=Path(args.out),
            family=family,
            dpi=args.dpi,
            cmap=args.cmap,
            manifest=Path(args.manifest) if args.manifest else None,
        )
        config_hash = config_hash_for(spec.inputs, spec.manifest)
        fig = build(spec, config_hash)
        png, svg = save_figure(fig, spec, config_hash)
    except FigureInputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"wrote {png} and {svg}")
    return EXIT_OK


def main_trajectories(argv=None) -> int:
    return _run(
        "trajectories",
        "Plot compartment trajectories, one panel per scenario CSV.",
        _build_trajectories,
        argv,
        many=True,
    )


def main_simplex(argv=None) -> int:
    return _run(
        "simplex",
        "Plot ternary equilibrium-policy maps from a simplex sweep CSV.",
        _build_simplex,
        argv,
        many=False,
    )


def main_delta(argv=None) -> int:
    return _run(
        "delta",
        "Plot subsidy, uptake and survival against the social value sweep.",
        _build_delta,
        argv,
        many=False,
    )


def main_timing(argv=None) -> int:
    return _run(
        "timing",
        "Plot horizon survival against the intervention start time.",
        _build_timing,
        argv,
        many=False,
    )

"""CSV and manifest plumbing shared by the figure families.

Column names restate the engine's published CSV contracts; if the
engine ever renames a column the schema check here fails with the
offending name rather than producing an empty plot.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

TRAJECTORY_COLUMNS = ("t", "H_m", "I_m", "D_m", "H_o", "I_o", "D_o")
SIMPLEX_COLUMNS = (
    "p_h",
    "p_i",
    "p_d",
    "assessed",
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

ASSESSED_ORDER = ("h", "i", "d")


class FigureInputError(ValueError):
    """Unusable input: missing file, empty table, or header mismatch."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: inputs, family tag, output base and styling."""

    inputs: tuple
    out: Path
    family: str
    dpi: int = 150
    cmap: str = "viridis"
    manifest: Path | None = None

    def __post_init__(self):
        if not self.inputs:
            raise FigureInputError("no input CSVs given")
        for path in self.inputs:
            if not Path(path).is_file():
                raise FigureInputError(f"input {path}: no such file")


@dataclass
class Table:
    path: Path
    columns: tuple
    rows: list

    def column(self, name):
        return [row[name] for row in self.rows]

    def subset(self, name, value):
        return [row for row in self.rows if row[name] == value]


def load_table(path, required, text_columns=()) -> Table:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for name in required:
            if name not in header:
                raise FigureInputError(f"{path}: missing column {name!r}")
        rows = []
        for raw in reader:
            row = {}
            for name in header:
                value = raw[name]
                if name in text_columns:
                    row[name] = value
                    continue
                try:
                    row[name] = float(value)
                except (TypeError, ValueError):
                    raise FigureInputError(
                        f"{path}: column {name!r} has non-numeric value "
                        f"{value!r}"
                    ) from None
            rows.append(row)
    if not rows:
        raise FigureInputError(f"{path}: no data rows")
    return Table(path=path, columns=tuple(header), rows=rows)


def config_hash_for(inputs, override=None) -> str:
    """Provenance hash from the engine manifest written next to the inputs."""
    if override is not None:
        candidates = [Path(override)]
    else:
        candidates = []
        for path in inputs:
            manifest = Path(path).parent / "manifest.json"
            if manifest not in candidates:
                candidates.append(manifest)
    for manifest in candidates:
        if manifest.is_file():
            with open(manifest, encoding="utf-8") as fh:
                document = json.load(fh)
            value = document.get("config_hash")
            if isinstance(value, str) and value:
                return value
    raise FigureInputError(
        "no usable manifest.json next to the inputs; pass --manifest to "
        "point at the engine output directory"
    )

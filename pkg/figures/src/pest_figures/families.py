"""The four figure families, each building one matplotlib Figure.

Builders take already-validated tables plus the provenance hash and
stay backend-agnostic; the command layer picks the backend and writes
the files.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib.pyplot as plt
import matplotlib.tri as mtri
import numpy as np

from .io import ASSESSED_ORDER, Table

# condition hues shared by every family; ownership picks the linestyle
CONDITION_COLORS = {"healthy": "#2f9e44", "infested": "#e8871e", "dying": "#c0392b"}

TRAJECTORY_SERIES = (
    ("H_m", "healthy", "--", "municipal healthy"),
    ("I_m", "infested", "--", "municipal infested"),
    ("D_m", "dying", "--", "municipal dying"),
    ("H_o", "healthy", "-", "private healthy"),
    ("I_o", "infested", "-", "private infested"),
    ("D_o", "dying", "-", "private dying"),
)

SIMPLEX_PANELS = (
    ("s_star", "optimal subsidy"),
    ("treat_prob_subsidized", "uptake, subsidized"),
    ("treat_prob_unsubsidized", "uptake, unsubsidized"),
    ("public_treat", "public treatment"),
)

_SQRT3_2 = math.sqrt(3.0) / 2.0


def _caption(fig, config_hash: str):
    fig.text(
        0.01, 0.005, f"config {config_hash}", fontsize=7, color="0.45",
        family="monospace",
    )


def _scenario_title(path: Path) -> str:
    stem = path.stem
    if stem.startswith("traj_"):
        stem = stem[len("traj_"):]
    private, sep, public = stem.rpartition("_")
    if sep and private:
        return f"private {private} / public {public}"
    return stem


def trajectories_figure(tables: list[Table], config_hash: str):
    """Compartment fractions over time, one panel per scenario."""
    n = len(tables)
    ncols = min(3, n)
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(3.6 * ncols, 2.9 * nrows),
        sharex=True, sharey=True, squeeze=False,
    )
    flat = axes.ravel()
    for ax in flat[n:]:
        ax.set_visible(False)
    for ax, table in zip(flat, tables):
        t = table.column("t")
        for column, condition, style, label in TRAJECTORY_SERIES:
            ax.plot(
                t, table.column(column), style,
                color=CONDITION_COLORS[condition], label=label, linewidth=1.4,
            )
        ax.set_title(_scenario_title(table.path), fontsize=9)
        ax.set_ylim(0.0, 1.0)
    for ax in axes[-1]:
        ax.set_xlabel("years")
    for row in axes:
        row[0].set_ylabel("fraction of forest")
    handles, labels = flat[0].get_legend_handles_labels()
    fig.legend(handles, labels, loc="lower center", ncol=3, fontsize=8,
               frameon=False)
    fig.tight_layout(rect=(0.0, 0.10, 1.0, 1.0))
    _caption(fig, config_hash)
    return fig


def _ternary_xy(rows):
    p_i = np.array([row["p_i"] for row in rows])
    p_d = np.array([row["p_d"] for row in rows])
    return p_i + 0.5 * p_d, _SQRT3_2 * p_d


def _ternary_panel(ax, rows, column, cmap):
    x, y = _ternary_xy(rows)
    values = np.array([row[column] for row in rows])
    vmin, vmax = float(values.min()), float(values.max())
    if vmax - vmin < 1e-12:
        # constant field: keep the normalization nondegenerate
        vmin, vmax = vmin - 0.5, vmax + 0.5
    if len(rows) >= 3:
        tri = mtri.Triangulation(x, y)
        mesh = ax.tripcolor(
            tri, values, cmap=cmap, vmin=vmin, vmax=vmax, shading="gouraud"
        )
    else:
        mesh = ax.scatter(x, y, c=values, cmap=cmap, vmin=vmin, vmax=vmax)
    for corner, (cx, cy, va) in {
        "h": (0.0, 0.0, "top"),
        "i": (1.0, 0.0, "top"),
        "d": (0.5, _SQRT3_2, "bottom"),
    }.items():
        ax.annotate(
            corner, (cx, cy), ha="center", va=va, fontsize=8,
            xytext=(0, -4 if va == "top" else 4), textcoords="offset points",
        )
    ax.set_xlim(-0.08, 1.08)
    ax.set_ylim(-0.12, _SQRT3_2 + 0.12)
    ax.set_aspect("equal")
    ax.set_axis_off()
    return mesh


def simplex_figure(table: Table, config_hash: str, cmap: str = "viridis"):
    """Ternary maps: assessed states down the rows, quantities across."""
    fig, axes = plt.subplots(
        len(ASSESSED_ORDER), len(SIMPLEX_PANELS),
        figsize=(3.1 * len(SIMPLEX_PANELS), 2.8 * len(ASSESSED_ORDER)),
        squeeze=False,
    )
    for r, assessed in enumerate(ASSESSED_ORDER):
        rows = table.subset("assessed", assessed)
        for c, (column, title) in enumerate(SIMPLEX_PANELS):
            ax = axes[r][c]
            mesh = _ternary_panel(ax, rows, column, cmap)
            fig.colorbar(mesh, ax=ax, fraction=0.046, pad=0.02)
            if r == 0:
                ax.set_title(title, fontsize=9)
            if c == 0:
                ax.text(
                    -0.18, 0.5, f"assessed {assessed}",
                    transform=ax.transAxes, rotation=90, va="center",
                    fontsize=9,
                )
    fig.tight_layout(rect=(0.02, 0.03, 1.0, 1.0))
    _caption(fig, config_hash)
    return fig


def delta_figure(table: Table, config_hash: str):
    """Subsidy, uptake and horizon survival against the social value."""
    panels = (
        ("s_star", "optimal subsidy"),
        ("treat_prob", "treatment probability"),
        ("survival_3y", "3-year survival"),
    )
    fig, axes = plt.subplots(1, len(panels), figsize=(10.5, 3.2))
    for ax, (column, title) in zip(axes, panels):
        for assessed in ASSESSED_ORDER:
            rows = table.subset("assessed", assessed)
            ax.plot(
                [row["delta_m"] for row in rows],
                [row[column] for row in rows],
                label=f"assessed {assessed}", linewidth=1.4,
            )
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("social value of avoided mortality")
    axes[0].legend(fontsize=8, frameon=False)
    fig.tight_layout(rect=(0.0, 0.05, 1.0, 1.0))
    _caption(fig, config_hash)
    return fig


def timing_figure(table: Table, config_hash: str):
    """Horizon survival against the policy start time."""
    series = (
        ("survival_50y_total", "whole forest"),
        ("survival_50y_public", "public trees"),
        ("survival_50y_private", "private trees"),
    )
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    times = table.column("switch_time")
    for column, label in series:
        ax.plot(times, table.column(column), "o-", label=label, linewidth=1.4)
    ax.set_xlabel("policy start time (years)")
    ax.set_ylabel("survival at horizon")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout(rect=(0.0, 0.05, 1.0, 1.0))
    _caption(fig, config_hash)
    return fig

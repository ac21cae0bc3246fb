"""Deterministic SVG rendering of experiment CSV bundles.

Theory series are drawn as dashed lines, simulated series as markers.  The
SVG output carries no timestamp and uses a fixed hash salt, so identical
inputs give byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .analysis import read_series_csv

_MARKERS = "o^svDP*Xd<>"
_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


def _style_for(labels: list) -> dict:
    return {
        label: (_COLORS[i % len(_COLORS)], _MARKERS[i % len(_MARKERS)])
        for i, label in enumerate(labels)
    }


def render_figure(
    theory_csv,
    simulated_csv,
    out_svg,
    title: str,
    xlabel: str,
    ylabel: str,
) -> Path:
    """Plot theory (dashed) and simulated (markers) series into an SVG."""
    theory = read_series_csv(theory_csv) if Path(theory_csv).exists() else []
    simulated = read_series_csv(simulated_csv) if Path(simulated_csv).exists() else []
    labels = list(dict.fromkeys([s.label for s in theory] + [s.label for s in simulated]))
    if not labels:
        raise ValueError("nothing to plot: both CSVs are empty or missing")
    styles = _style_for(labels)

    with plt.rc_context({"svg.hashsalt": "oqsim"}):
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for s in theory:
            color, _ = styles[s.label]
            ax.plot(s.times, s.values, "--", color=color, linewidth=1.2)
        for s in simulated:
            color, marker = styles[s.label]
            ax.plot(
                s.times,
                s.values,
                marker,
                color=color,
                markersize=4.5,
                linestyle="none",
                label=s.label,
            )
        if not simulated:
            for s in theory:
                color, _ = styles[s.label]
                ax.plot([], [], "--", color=color, label=s.label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ncol = 2 if len(labels) > 6 else 1
        ax.legend(fontsize=8, ncol=ncol, framealpha=0.9)
        ax.grid(alpha=0.25)
        fig.tight_layout()
        out_svg = Path(out_svg)
        fig.savefig(out_svg, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out_svg

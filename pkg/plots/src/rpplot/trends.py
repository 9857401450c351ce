"""Trend lines of sweep summary statistics versus nucleus count."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # batch tool, never a GUI

from matplotlib import pyplot as plt
from matplotlib.ticker import MaxNLocator

from .figspec import load_summary

# (point field, axis label, y scale); the best-point quantities share one
# orientation, so the qfi column is the one matched to best inv_n_var
_PANELS = (
    ("gamma", "gamma", "linear"),
    ("inv_n_var", "best 1/(N var)", "log"),
    ("qfi", "matched qfi", "log"),
    ("optimality", "optimality", "log"),
)


@dataclass(frozen=True)
class TrendPoint:
    n: int
    gamma: float
    inv_n_var: float
    qfi: float
    optimality: float


def load_trend_series(summary_paths) -> dict:
    """Group summaries into {(model, include_eed): [TrendPoint...]} sorted
    by nucleus count."""
    paths = [Path(p) for p in summary_paths]
    if not paths:
        raise ValueError("at least one summary is required")
    series: dict = {}
    for path in paths:
        doc = load_summary(path)
        best = doc["best_point"]
        if best is None:
            raise ValueError(
                f"{path}: no best point (every orientation is information-free)"
            )
        key = (doc["model"], bool(doc["include_eed"]))
        point = TrendPoint(
            n=int(doc["n_nuclei"]),
            gamma=float(doc["gamma"]),
            inv_n_var=float(best["inv_n_var"]),
            qfi=float(best["qfi"]),
            optimality=float(best["optimality"]),
        )
        points = series.setdefault(key, [])
        if any(p.n == point.n for p in points):
            raise ValueError(
                f"{path}: duplicate n = {point.n} for model '{key[0]}'"
            )
        points.append(point)
    return {key: sorted(pts, key=lambda p: p.n) for key, pts in series.items()}


def build_trends_figure(series: dict):
    """2x2 panel figure, one line per (model, eed) series; the optimality
    panel carries the attainability reference at 1."""
    fig, axes = plt.subplots(2, 2, figsize=(9.2, 6.4), layout="constrained",
                             sharex=True)
    flat = axes.ravel()
    for ax, (field, label, scale) in zip(flat, _PANELS):
        for (model, eed), points in sorted(series.items()):
            ns = [p.n for p in points]
            vals = [getattr(p, field) for p in points]
            ax.plot(ns, vals, marker="o",
                    label="{} (eed {})".format(model, "on" if eed else "off"))
        ax.set_ylabel(label)
        ax.set_yscale(scale)
        if field == "optimality":
            ax.axhline(1.0, color="black", lw=0.8, ls="--")
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    for ax in flat[2:]:
        ax.set_xlabel("nuclei kept")
    flat[0].legend(fontsize=8)
    return fig


def render_trends(summary_paths, out_path) -> Path:
    """Render the trend panels to an image file."""
    out_path = Path(out_path)
    fig = build_trends_figure(load_trend_series(summary_paths))
    try:
        fig.savefig(out_path, dpi=150)
    finally:
        plt.close(fig)
    return out_path

"""Orientation-grid panels for sweep CSV quantities."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # batch tool, never a GUI

import numpy as np
from matplotlib import pyplot as plt
from matplotlib.colors import LogNorm

from .figspec import FigureSpec, load_summary, load_sweep_csv

_PANEL_W, _PANEL_H = 4.6, 3.6


def _color_norm(z: np.ndarray, log_scale: bool):
    """Pick the color normalization; a log request falls back to linear
    when the finite positive values cannot span a log axis."""
    if not log_scale:
        return None
    pos = z[np.isfinite(z) & (z > 0.0)]
    if pos.size == 0 or pos.min() == pos.max():
        return None
    return LogNorm(vmin=pos.min(), vmax=pos.max())


def _annotate_extrema(ax, thetas, phis, z):
    if not np.any(np.isfinite(z)):
        ax.text(0.5, 0.5, "all values nan", transform=ax.transAxes,
                ha="center", va="center")
        return
    lines = []
    for tag, marker, idx in (
        ("max", "^", np.nanargmax(z)),
        ("min", "v", np.nanargmin(z)),
    ):
        i, j = np.unravel_index(int(idx), z.shape)
        t, p = float(thetas[i]), float(phis[j])
        ax.plot(t, p, marker=marker, color="white", mec="black", ms=8)
        lines.append(f"{tag} {float(z[i, j]):.4g} at ({t:g}, {p:g})")
    ax.text(0.02, 0.98, "\n".join(lines), transform=ax.transAxes,
            ha="left", va="top", fontsize=8,
            bbox={"facecolor": "white", "alpha": 0.75, "pad": 2})


def build_heatmap_figure(spec: FigureSpec):
    """Figure with one (theta, phi) panel per requested quantity."""
    table = load_sweep_csv(spec.csv_path, required=spec.quantities)
    summary = load_summary(spec.summary_path) if spec.summary_path else None

    n_panels = len(spec.quantities)
    fig, axes = plt.subplots(
        1, n_panels, figsize=(_PANEL_W * n_panels, _PANEL_H),
        squeeze=False, layout="constrained",
    )
    for ax, name in zip(axes[0], spec.quantities):
        z = table.columns[name]
        masked = np.ma.masked_invalid(z)
        norm = _color_norm(z, spec.log_scale)
        if norm is not None:
            masked = np.ma.masked_less_equal(masked, 0.0)
        mesh = ax.pcolormesh(table.theta_deg, table.phi_deg, masked.T,
                             norm=norm, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax)
        ax.set_xlabel("theta (deg)")
        ax.set_ylabel("phi (deg)")
        ax.set_title(name)
        if spec.annotate:
            _annotate_extrema(ax, table.theta_deg, table.phi_deg, z)

    if summary is not None:
        title = "{} (eed {})".format(
            summary["model"], "on" if summary["include_eed"] else "off"
        )
        if spec.annotate:
            title += f", gamma = {summary['gamma']:.4g}"
    else:
        title = Path(spec.csv_path).stem
    fig.suptitle(title)
    return fig


def render_heatmap(spec: FigureSpec, out_path) -> Path:
    """Render the panels to an image file; same spec, same bytes."""
    out_path = Path(out_path)
    fig = build_heatmap_figure(spec)
    try:
        fig.savefig(out_path, dpi=150)
    finally:
        plt.close(fig)
    return out_path

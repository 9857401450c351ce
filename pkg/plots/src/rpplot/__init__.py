"""Figure rendering for rpcompass sweep and scan outputs.

Consumes only the frozen CSV/JSON files; nothing here imports the solver
package or recomputes physics.
"""

from .figspec import (
    AXIS_COLUMNS,
    CSV_COLUMNS,
    FigureSpec,
    QUANTITY_COLUMNS,
    SweepTable,
    load_summary,
    load_sweep_csv,
)
from .heatmap import build_heatmap_figure, render_heatmap
from .trends import TrendPoint, build_trends_figure, load_trend_series, render_trends

__all__ = [
    "AXIS_COLUMNS",
    "CSV_COLUMNS",
    "FigureSpec",
    "QUANTITY_COLUMNS",
    "SweepTable",
    "TrendPoint",
    "build_heatmap_figure",
    "build_trends_figure",
    "load_summary",
    "load_sweep_csv",
    "load_trend_series",
    "render_heatmap",
    "render_trends",
]

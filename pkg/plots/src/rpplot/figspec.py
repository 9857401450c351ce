"""Frozen sweep-output schemas and the heatmap figure request."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# column order of the sweep CSV, frozen on the producer side
CSV_COLUMNS = (
    "theta_deg", "phi_deg", "phi_s", "dphi_s_dtheta", "qfi", "cfi",
    "inv_n_var", "optimality", "ortho_dist_s2", "ortho_dist_ps",
)
AXIS_COLUMNS = ("theta_deg", "phi_deg")
QUANTITY_COLUMNS = tuple(c for c in CSV_COLUMNS if c not in AXIS_COLUMNS)

# top-level keys every sweep summary JSON carries; scan JSONs lack most of
# them, which is how the trends loader tells the two apart
SUMMARY_KEYS = ("model", "n_nuclei", "include_eed", "gamma", "best_point")


@dataclass(frozen=True)
class FigureSpec:
    """One heatmap request: which sweep CSV, which quantity panels, how
    they are colored, and whether extrema and gamma get annotated."""

    csv_path: str | Path
    quantities: tuple = ("phi_s",)
    summary_path: str | Path | None = None
    log_scale: bool = False
    annotate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "quantities", tuple(self.quantities))
        if not self.quantities:
            raise ValueError("at least one quantity column is required")
        for name in self.quantities:
            if name not in QUANTITY_COLUMNS:
                raise ValueError(
                    f"unknown quantity '{name}' "
                    f"(schema columns: {', '.join(QUANTITY_COLUMNS)})"
                )


@dataclass(frozen=True)
class SweepTable:
    """Sweep CSV regridded to (theta, phi) arrays, one per column."""

    theta_deg: np.ndarray
    phi_deg: np.ndarray
    columns: dict


def load_sweep_csv(path, required: tuple = ()) -> SweepTable:
    """Parse a sweep CSV back onto its orientation grid.

    Columns beyond the frozen set are carried along untouched; the ones in
    `required` must be present.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        rows = list(reader)
    for name in AXIS_COLUMNS + tuple(required):
        if name not in header:
            raise ValueError(
                f"column '{name}' not in {path} "
                f"(available columns: {', '.join(header)})"
            )
    if not rows:
        raise ValueError(f"{path} has no data rows")
    raw = {name: np.array([float(r[name]) for r in rows]) for name in header}
    thetas = np.array(list(dict.fromkeys(raw["theta_deg"])))
    phis = np.array(list(dict.fromkeys(raw["phi_deg"])))
    shape = (len(thetas), len(phis))
    if len(rows) != shape[0] * shape[1] or not (
        np.array_equal(raw["theta_deg"], np.repeat(thetas, shape[1]))
        and np.array_equal(raw["phi_deg"], np.tile(phis, shape[0]))
    ):
        raise ValueError(f"{path} rows do not form a row-major (theta, phi) grid")
    columns = {
        name: raw[name].reshape(shape)
        for name in header if name not in AXIS_COLUMNS
    }
    return SweepTable(theta_deg=thetas, phi_deg=phis, columns=columns)


def load_summary(path) -> dict:
    """Read a sweep summary JSON, rejecting files with a different shape."""
    path = Path(path)
    doc = json.loads(path.read_text())
    missing = [k for k in SUMMARY_KEYS if not isinstance(doc, dict) or k not in doc]
    if missing:
        raise ValueError(
            f"{path} is not a sweep summary (missing keys: {', '.join(missing)})"
        )
    return doc

"""Orientation-grid sweeps, yield anisotropy, and truncation scans.

A sweep evaluates the full metrology record over a (theta, phi) grid in
degrees, distributing theta-rows over a process pool.  Heavy operators are
assembled once per worker; each orientation then only adds its Zeeman part
before solving.  Results are gathered in grid order, so output is
bit-identical for any worker count.  The sphere average uses trapezoid
weights with the sin(theta) measure (uniform in phi for a full-circle
grid), which integrates constants exactly.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import gyromagnetic_ratio_mT
from .hamiltonian import hamiltonian_terms
from .liouville import (
    SCHUR_MAX_DIM,
    NumericalError,
    _pick_method,
    build_liouvillian,
    hamiltonian_superoperator,
    steady_state,
    steady_state_schur,
)
from .metrology import (
    DEFAULT_DELTA,
    MetrologyRecord,
    StateDerivative,
    record_from_derivative,
    route_diagnostics,
    singlet_population,
    yield_from_population,
)
from .operators import singlet_projector
from .system import SpinSystem, rank_and_truncate

DEFAULT_B0_MT = 0.05

CSV_COLUMNS = (
    "theta_deg", "phi_deg", "phi_s", "dphi_s_dtheta", "qfi", "cfi",
    "inv_n_var", "optimality", "ortho_dist_s2", "ortho_dist_ps",
)


def _axis_values(start: float, stop: float, step: float, periodic: bool) -> np.ndarray:
    span = stop - start
    n = span / step
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"step {step} does not divide range [{start}, {stop}] evenly")
    n = int(round(n))
    if periodic:
        return start + step * np.arange(n)
    return start + step * np.arange(n + 1)


@dataclass(frozen=True)
class SweepGrid:
    """Orientation grid in degrees.  A phi range spanning the full 360
    circle switches to periodic sampling with the endpoint dropped."""

    theta_step: float = 1.0
    phi_step: float = 5.0
    theta_range: tuple = (0.0, 180.0)
    phi_range: tuple = (0.0, 180.0)

    def __post_init__(self):
        if self.theta_step <= 0 or self.phi_step <= 0:
            raise ValueError("grid steps must be positive")
        t_lo, t_hi = self.theta_range
        p_lo, p_hi = self.phi_range
        if not 0.0 <= t_lo < t_hi <= 180.0:
            raise ValueError(f"theta range {self.theta_range} must lie inside [0, 180]")
        if not (p_lo < p_hi and p_hi - p_lo <= 360.0):
            raise ValueError(f"phi range {self.phi_range} must span at most 360 degrees")
        # raises on a non-dividing step
        self.theta_values_deg
        self.phi_values_deg

    @property
    def phi_periodic(self) -> bool:
        return abs((self.phi_range[1] - self.phi_range[0]) - 360.0) < 1e-9

    @property
    def theta_values_deg(self) -> np.ndarray:
        return _axis_values(*self.theta_range, self.theta_step, periodic=False)

    @property
    def phi_values_deg(self) -> np.ndarray:
        return _axis_values(*self.phi_range, self.phi_step, periodic=self.phi_periodic)

    @property
    def shape(self) -> tuple:
        return len(self.theta_values_deg), len(self.phi_values_deg)


def _quadrature_weights(grid: SweepGrid) -> np.ndarray:
    """Outer product of trapezoid (or periodic-uniform) weights with the
    sin(theta) surface measure, shaped like the grid."""
    thetas = np.radians(grid.theta_values_deg)
    w_theta = np.ones_like(thetas)
    if len(w_theta) > 1:
        w_theta[0] = w_theta[-1] = 0.5
    w_phi = np.ones(len(grid.phi_values_deg))
    if not grid.phi_periodic and len(w_phi) > 1:
        w_phi[0] = w_phi[-1] = 0.5
    return np.outer(w_theta * np.sin(thetas), w_phi)


def weighted_sphere_mean(grid: SweepGrid, values: np.ndarray) -> float:
    """Quadrature mean of a gridded quantity over field orientations."""
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
    w = _quadrature_weights(grid)
    total = w.sum()
    if total <= 0.0:
        raise ValueError("grid has zero quadrature weight")
    return float(np.sum(w * values) / total)


@dataclass(frozen=True)
class SweepResult:
    system_name: str
    n_nuclei: int
    dim: int
    grid: SweepGrid
    include_eed: bool
    n_trials: int
    b0_mT: float
    delta_deg: float
    theta_deg: np.ndarray
    phi_deg: np.ndarray
    phi_s: np.ndarray
    dphi_s_dtheta: np.ndarray
    qfi: np.ndarray
    cfi: np.ndarray
    inv_n_var: np.ndarray
    optimality: np.ndarray
    ortho_dist_s2: np.ndarray
    ortho_dist_ps: np.ndarray
    phi_s_mean: float
    phi_s_max: float
    phi_s_min: float
    gamma: float
    qfi_max: float
    qfi_max_theta_deg: float
    qfi_max_phi_deg: float
    inv_n_var_max: float
    inv_n_var_max_theta_deg: float
    inv_n_var_max_phi_deg: float
    max_flux_residual: float
    max_qfi_route_rel_dev: float
    max_sld_residual: float
    max_variance_route_rel_dev: float

    def record_at(self, i: int, j: int) -> MetrologyRecord:
        return MetrologyRecord(
            theta=math.radians(float(self.theta_deg[i])),
            phi=math.radians(float(self.phi_deg[j])),
            phi_s=float(self.phi_s[i, j]),
            dphi_s_dtheta=float(self.dphi_s_dtheta[i, j]),
            qfi=float(self.qfi[i, j]),
            cfi=float(self.cfi[i, j]),
            inv_n_var=float(self.inv_n_var[i, j]),
            optimality=float(self.optimality[i, j]),
            ortho_dist_s2=float(self.ortho_dist_s2[i, j]),
            ortho_dist_ps=float(self.ortho_dist_ps[i, j]),
        )


class _PointSolver:
    """Per-process solving context: everything orientation-independent is
    built once, each orientation only contributes its Zeeman term."""

    def __init__(self, system: SpinSystem, include_eed: bool, b0_mT: float,
                 delta: float, n_trials: int, method: str):
        self.k_b, self.k_f = system.k_b, system.k_f
        self.z = system.z_nuclear
        self.n_trials = n_trials
        self.delta = delta
        # a sweep amortizes operator assembly over thousands of solves, and
        # there the dense Sylvester route beats sparse LU at every size it
        # can reach, so "auto" resolves more aggressively than single solves
        if method == "auto" and system.dim <= SCHUR_MAX_DIM:
            self.method = "schur"
        else:
            self.method = _pick_method(method, system.dim)
        self.omega_scale = -gyromagnetic_ratio_mT(system.g_factor) * b0_mT
        if self.method == "schur":
            h_static, s_total = hamiltonian_terms(system, include_eed, sparse=False)
            self.h_static, self.s_total = h_static, s_total
            self.p_s = singlet_projector(system, sparse=False)
        else:
            h_static, s_total = hamiltonian_terms(system, include_eed, sparse=True)
            self.p_s = singlet_projector(system, sparse=True)
            self.m_static = build_liouvillian(h_static, self.p_s, self.k_b, self.k_f)
            self.zeeman_super = [hamiltonian_superoperator(s) for s in s_total]

    def _solve(self, theta: float, phi: float):
        sin_t = math.sin(theta)
        omega = self.omega_scale * np.array(
            [sin_t * math.cos(phi), sin_t * math.sin(phi), math.cos(theta)]
        )
        if self.method == "schur":
            h = self.h_static + np.einsum("k,kij->ij", omega, self.s_total)
            res = steady_state_schur(h, self.p_s, self.z, self.k_b, self.k_f)
        else:
            m = self.m_static + sum(
                w * z for w, z in zip(omega, self.zeeman_super)
            )
            res = steady_state(m, self.p_s, self.z, self.k_b, self.k_f,
                               method=self.method)
        rho = res.rho_electronic
        rho = 0.5 * (rho + rho.conj().T)
        flux = abs(res.phi_s + self.k_f * res.total_population - 1.0)
        return rho, flux

    def derivative(self, theta: float, phi: float) -> tuple:
        """Central-difference state derivative, one-sided at the poles;
        returns the derivative and the worst flux residual of its solves."""
        rho_c, f_c = self._solve(theta, phi)
        lo, hi = theta - 0.5 * self.delta, theta + 0.5 * self.delta
        if lo >= 0.0 and hi <= math.pi:
            rho_lo, f_lo = self._solve(lo, phi)
            rho_hi, f_hi = self._solve(hi, phi)
        elif lo < 0.0:
            (rho_lo, f_lo), (rho_hi, f_hi) = (rho_c, f_c), self._solve(theta + self.delta, phi)
        else:
            (rho_lo, f_lo), (rho_hi, f_hi) = self._solve(theta - self.delta, phi), (rho_c, f_c)
        drho = (rho_hi - rho_lo) / self.delta
        phi_c, slope = yield_from_population(
            singlet_population(rho_c), self.k_b, self.k_f
        )
        sd = StateDerivative(
            rho=rho_c,
            drho_dtheta=drho,
            step=self.delta,
            phi_s=phi_c,
            dphi_s_dtheta=slope * singlet_population(drho),
        )
        return sd, max(f_c, f_lo, f_hi)


_WORKER_STATE: dict = {}


def _init_worker(phi_deg, solver_args):
    _WORKER_STATE["phi_deg"] = phi_deg
    _WORKER_STATE["solver"] = _PointSolver(*solver_args)


def _run_row(theta_deg: float):
    return _compute_row(_WORKER_STATE["solver"], theta_deg, _WORKER_STATE["phi_deg"])


_ROW_FIELDS = ("phi_s", "dphi_s_dtheta", "qfi", "cfi", "inv_n_var",
               "optimality", "ortho_dist_s2", "ortho_dist_ps")


def _compute_row(solver: _PointSolver, theta_deg: float, phi_deg: np.ndarray):
    theta = math.radians(theta_deg)
    out = {name: np.empty(len(phi_deg)) for name in _ROW_FIELDS}
    diag = np.zeros(4)
    for j, p_deg in enumerate(phi_deg):
        phi = math.radians(float(p_deg))
        try:
            sd, flux = solver.derivative(theta, phi)
        except NumericalError as exc:
            raise NumericalError(
                f"sweep failed at theta={theta_deg:g} deg, phi={float(p_deg):g} deg: {exc}"
            ) from exc
        rec = record_from_derivative(sd, theta, phi, solver.n_trials)
        routes = route_diagnostics(sd, solver.n_trials)
        for name in _ROW_FIELDS:
            out[name][j] = getattr(rec, name)
        diag = np.maximum(diag, [flux, routes.qfi_rel_dev,
                                 routes.sld_residual, routes.variance_rel_dev])
    return out, diag


def sweep(
    system: SpinSystem,
    grid: SweepGrid,
    include_eed: bool = False,
    n_trials: int = 1,
    b0_mT: float = DEFAULT_B0_MT,
    delta_deg: float = math.degrees(DEFAULT_DELTA),
    workers: int = 1,
    method: str = "auto",
) -> SweepResult:
    """Evaluate the metrology record at every grid orientation.

    Rows (fixed theta) are the unit of parallel work; with workers=1 the
    rows run inline through the same code path.
    """
    if n_trials < 1:
        raise ValueError(f"trial count must be >= 1, got {n_trials}")
    theta_deg = grid.theta_values_deg
    phi_deg = grid.phi_values_deg
    delta = math.radians(delta_deg)

    solver_args = (system, include_eed, b0_mT, delta, n_trials, method)
    if workers > 1:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker,
            initargs=(phi_deg, solver_args),
        ) as pool:
            rows = list(pool.map(_run_row, [float(t) for t in theta_deg]))
    else:
        solver = _PointSolver(*solver_args)
        rows = [_compute_row(solver, float(t), phi_deg) for t in theta_deg]

    fields = {
        name: np.vstack([row[0][name] for row in rows]) for name in _ROW_FIELDS
    }
    diag = np.max(np.vstack([row[1] for row in rows]), axis=0)

    phi_s = fields["phi_s"]
    mean = weighted_sphere_mean(grid, phi_s)
    p_max, p_min = float(phi_s.max()), float(phi_s.min())
    gamma = (p_max - p_min) / mean

    def _argmax_loc(arr):
        i, j = np.unravel_index(int(np.argmax(arr)), arr.shape)
        return float(arr[i, j]), float(theta_deg[i]), float(phi_deg[j])

    qfi_max, qfi_t, qfi_p = _argmax_loc(fields["qfi"])
    inv_max, inv_t, inv_p = _argmax_loc(fields["inv_n_var"])

    for arr in fields.values():
        arr.setflags(write=False)
    return SweepResult(
        system_name=system.name,
        n_nuclei=len(system.nuclei),
        dim=system.dim,
        grid=grid,
        include_eed=include_eed,
        n_trials=n_trials,
        b0_mT=b0_mT,
        delta_deg=delta_deg,
        theta_deg=theta_deg,
        phi_deg=phi_deg,
        phi_s_mean=mean,
        phi_s_max=p_max,
        phi_s_min=p_min,
        gamma=gamma,
        qfi_max=qfi_max,
        qfi_max_theta_deg=qfi_t,
        qfi_max_phi_deg=qfi_p,
        inv_n_var_max=inv_max,
        inv_n_var_max_theta_deg=inv_t,
        inv_n_var_max_phi_deg=inv_p,
        max_flux_residual=float(diag[0]),
        max_qfi_route_rel_dev=float(diag[1]),
        max_sld_residual=float(diag[2]),
        max_variance_route_rel_dev=float(diag[3]),
        **fields,
    )


def anisotropy(result: SweepResult) -> float:
    """Gamma = (max - min) / mean of the singlet yield over the grid."""
    if result.phi_s.size == 0:
        raise ValueError("empty sweep result")
    mean = weighted_sphere_mean(result.grid, result.phi_s)
    return float((result.phi_s.max() - result.phi_s.min()) / mean)


def best_precision_point(result: SweepResult) -> MetrologyRecord:
    """Record with the largest inv_n_var; row-major argmax makes ties fall
    to the smallest theta, then smallest phi."""
    if result.inv_n_var.size == 0:
        raise LookupError("empty sweep result")
    if not np.any(result.inv_n_var > 0.0):
        raise LookupError("no orientation with finite yield variance")
    i, j = np.unravel_index(int(np.argmax(result.inv_n_var)), result.inv_n_var.shape)
    return result.record_at(int(i), int(j))


@dataclass(frozen=True)
class TruncationRow:
    n_keep: int
    dim: int
    gamma: float
    best_theta_deg: float
    best_phi_deg: float
    best_inv_n_var: float
    best_qfi: float
    best_optimality: float


@dataclass(frozen=True)
class TruncationSummary:
    """Per-truncation best-point rows plus the four summary statistics kept
    for each model family: the single-nucleus value, worst, best, and a
    robust average over the 7 most optimal truncations (all, if fewer)."""

    rows: tuple
    optimality_at_n1: float | None
    optimality_max: float
    optimality_min: float
    optimality_robust_avg: float
    results: tuple | None = None


def truncation_scan(
    full_system: SpinSystem,
    grid: SweepGrid,
    n_range,
    include_eed: bool = False,
    n_trials: int = 1,
    b0_mT: float = DEFAULT_B0_MT,
    delta_deg: float = math.degrees(DEFAULT_DELTA),
    workers: int = 1,
    method: str = "auto",
    keep_results: bool = False,
) -> TruncationSummary:
    """Sweep nested truncations of a system, keeping the nuclei with the
    largest couplings, and summarize how optimality moves with size."""
    n_values = sorted(set(int(n) for n in n_range))
    if not n_values:
        raise ValueError("empty truncation range")
    if n_values[0] < 1 or n_values[-1] > len(full_system.nuclei):
        raise ValueError(
            f"truncation range {n_values} outside [1, {len(full_system.nuclei)}]"
        )
    rows = []
    results = []
    for n in n_values:
        sub = rank_and_truncate(full_system, n)
        result = sweep(sub, grid, include_eed, n_trials, b0_mT=b0_mT,
                       delta_deg=delta_deg, workers=workers, method=method)
        if keep_results:
            results.append(result)
        best = best_precision_point(result)
        rows.append(TruncationRow(
            n_keep=n,
            dim=sub.dim,
            gamma=result.gamma,
            best_theta_deg=math.degrees(best.theta),
            best_phi_deg=math.degrees(best.phi),
            best_inv_n_var=best.inv_n_var,
            best_qfi=best.qfi,
            best_optimality=best.optimality,
        ))
    opts = [r.best_optimality for r in rows]
    k = 7 if len(opts) >= 7 else len(opts)
    robust = float(np.mean(sorted(opts)[:k]))
    at_n1 = rows[0].best_optimality if n_values[0] == 1 else None
    return TruncationSummary(
        rows=tuple(rows),
        optimality_at_n1=at_n1,
        optimality_max=float(max(opts)),
        optimality_min=float(min(opts)),
        optimality_robust_avg=robust,
        results=tuple(results) if keep_results else None,
    )


def write_sweep_csv(result: SweepResult, path) -> None:
    """One row per grid point with the frozen column set; floats carry
    full round-trip precision."""
    lines = [",".join(CSV_COLUMNS)]
    for i, t in enumerate(result.theta_deg):
        for j, p in enumerate(result.phi_deg):
            cells = [repr(float(t)), repr(float(p))] + [
                repr(float(getattr(result, name)[i, j])) for name in _ROW_FIELDS
            ]
            lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def _summary_dict(result: SweepResult) -> dict:
    try:
        best = best_precision_point(result)
        best_point = {
            "theta_deg": math.degrees(best.theta),
            "phi_deg": math.degrees(best.phi),
            "inv_n_var": best.inv_n_var,
            "qfi": best.qfi,
            "optimality": best.optimality,
        }
    except LookupError:
        # null compass: every slope is rounding dust, there is no best point
        best_point = None
    return {
        "model": result.system_name,
        "n_nuclei": result.n_nuclei,
        "dim": result.dim,
        "include_eed": result.include_eed,
        "n_trials": result.n_trials,
        "b0_mT": result.b0_mT,
        "delta_deg": result.delta_deg,
        "grid": {
            "theta_step_deg": result.grid.theta_step,
            "phi_step_deg": result.grid.phi_step,
            "theta_range_deg": list(result.grid.theta_range),
            "phi_range_deg": list(result.grid.phi_range),
            "n_theta": len(result.theta_deg),
            "n_phi": len(result.phi_deg),
        },
        "phi_s_mean": result.phi_s_mean,
        "phi_s_max": result.phi_s_max,
        "phi_s_min": result.phi_s_min,
        "gamma": result.gamma,
        "qfi_max": {
            "value": result.qfi_max,
            "theta_deg": result.qfi_max_theta_deg,
            "phi_deg": result.qfi_max_phi_deg,
        },
        "inv_n_var_max": {
            "value": result.inv_n_var_max,
            "theta_deg": result.inv_n_var_max_theta_deg,
            "phi_deg": result.inv_n_var_max_phi_deg,
        },
        "best_point": best_point,
        "diagnostics": {
            "max_flux_residual": result.max_flux_residual,
            "max_qfi_route_rel_dev": result.max_qfi_route_rel_dev,
            "max_sld_residual": result.max_sld_residual,
            "max_variance_route_rel_dev": result.max_variance_route_rel_dev,
        },
    }


def write_sweep_summary(result: SweepResult, path) -> None:
    Path(path).write_text(json.dumps(_summary_dict(result), indent=2) + "\n")


def write_scan_summary(summary: TruncationSummary, model: str,
                       include_eed: bool, path) -> None:
    doc = {
        "model": model,
        "include_eed": include_eed,
        "rows": [
            {
                "n_keep": r.n_keep,
                "dim": r.dim,
                "gamma": r.gamma,
                "best_theta_deg": r.best_theta_deg,
                "best_phi_deg": r.best_phi_deg,
                "best_inv_n_var": r.best_inv_n_var,
                "best_qfi": r.best_qfi,
                "best_optimality": r.best_optimality,
            }
            for r in summary.rows
        ],
        "optimality_at_n1": summary.optimality_at_n1,
        "optimality_max": summary.optimality_max,
        "optimality_min": summary.optimality_min,
        "optimality_robust_avg": summary.optimality_robust_avg,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")

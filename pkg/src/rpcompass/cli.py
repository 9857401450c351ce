"""Command-line front end: orientation sweeps, truncation scans, and
invariant checks, all writing schema-stable files.

Angles are degrees on the command line and radians internally.  Defaults
are the standard operating point: B0 = 0.05 mT and the rates from the
model file (shipped models use k_b = k_f = 1 per us).
"""

import dataclasses
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from .liouville import NumericalError, propagate_time_domain, solve_steady_state
from .metrology import (
    cfi_yield,
    qfi_from_sld,
    qfi_spectral,
    qfi_vectorized,
    sld_solve,
    state_derivative,
)
from .modelio import MODEL_SUFFIX, ModelFileError, load_shipped_model, load_spin_system
from .sweep import (
    DEFAULT_B0_MT,
    SweepGrid,
    sweep,
    truncation_scan,
    write_scan_summary,
    write_sweep_csv,
    write_sweep_summary,
)
from .system import FieldOrientation, SpinSystem, rank_and_truncate

CHECK_SEED = 8675309
CHECK_ORIENTATIONS = 8
PROPAGATION_CHECK_MAX_DIM = 48


@dataclass(frozen=True)
class RunConfig:
    """One invocation's worth of settings, flags already normalized."""

    model: str
    include_eed: bool = False
    n_keep: int | None = None
    n_range: tuple[int, int] | None = None
    theta_step_deg: float = 1.0
    phi_step_deg: float = 5.0
    b0_mT: float = DEFAULT_B0_MT
    k_b_per_us: float | None = None
    k_f_per_us: float | None = None
    delta_deg: float = 0.1
    out_dir: Path = Path(".")
    workers: int = 0


def _resolve_system(cfg: RunConfig) -> SpinSystem:
    """Load the model by path or shipped name and apply overrides."""
    path = Path(cfg.model)
    looks_like_path = (
        path.suffix == MODEL_SUFFIX or os.sep in cfg.model or path.exists()
    )
    try:
        if looks_like_path:
            system = load_spin_system(path)
        else:
            system = load_shipped_model(cfg.model)
        overrides = {}
        if cfg.k_b_per_us is not None:
            overrides["k_b"] = cfg.k_b_per_us
        if cfg.k_f_per_us is not None:
            overrides["k_f"] = cfg.k_f_per_us
        if overrides:
            system = dataclasses.replace(system, **overrides)
        if cfg.n_keep is not None:
            system = rank_and_truncate(system, cfg.n_keep)
        if cfg.include_eed and system.eed_mT is None:
            raise ValueError(
                f"model {system.name!r} has no eed tensor; drop --eed"
            )
    except (ModelFileError, ValueError) as exc:
        raise click.UsageError(str(exc)) from exc
    return system


def _grid(cfg: RunConfig) -> SweepGrid:
    try:
        return SweepGrid(theta_step=cfg.theta_step_deg, phi_step=cfg.phi_step_deg)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def _workers(cfg: RunConfig) -> int:
    return cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)


def _model_options(f):
    for opt in reversed([
        click.option("--model", required=True,
                     help="Model file path or the name of a shipped model."),
        click.option("--eed/--no-eed", "include_eed", default=False,
                     show_default=True,
                     help="Include the electron-electron dipolar coupling."),
        click.option("--kb", "k_b_per_us", type=float, default=None,
                     help="Override recombination rate k_b [1/us] "
                          "(default: model value; shipped models use 1.0)."),
        click.option("--kf", "k_f_per_us", type=float, default=None,
                     help="Override escape rate k_f [1/us] "
                          "(default: model value; shipped models use 1.0)."),
        click.option("--b0-mT", "b0_mT", type=float, default=DEFAULT_B0_MT,
                     show_default=True, help="Field strength [mT]."),
        click.option("--delta-deg", type=float, default=0.1, show_default=True,
                     help="Finite-difference step for d/dtheta [deg]."),
    ]):
        f = opt(f)
    return f


def _grid_options(f):
    for opt in reversed([
        click.option("--theta-step", "theta_step_deg", type=float, default=1.0,
                     show_default=True, help="Polar grid step [deg]."),
        click.option("--phi-step", "phi_step_deg", type=float, default=5.0,
                     show_default=True, help="Azimuthal grid step [deg]."),
        click.option("--out", "out_dir", type=click.Path(path_type=Path),
                     default=Path("."), show_default=True,
                     help="Directory for output files."),
        click.option("--workers", type=int, default=0,
                     help="Worker processes (default: available cores; "
                          "1 forces serial execution)."),
    ]):
        f = opt(f)
    return f


@click.group()
def main():
    """Steady-state compass sweeps and their precision limits."""


def _echo_extrema(result) -> None:
    click.echo(
        f"phi_s     mean {result.phi_s_mean:.6f}  min {result.phi_s_min:.6f}  "
        f"max {result.phi_s_max:.6f}  gamma {result.gamma:.6g}"
    )
    click.echo(
        f"qfi       max {result.qfi_max:.6g}  at theta {result.qfi_max_theta_deg:g}, "
        f"phi {result.qfi_max_phi_deg:g} deg"
    )
    click.echo(
        f"1/(N var) max {result.inv_n_var_max:.6g}  at theta "
        f"{result.inv_n_var_max_theta_deg:g}, phi {result.inv_n_var_max_phi_deg:g} deg"
    )


@main.command("sweep")
@_model_options
@_grid_options
@click.option("--n-keep", type=int, default=None,
              help="Keep only the N strongest-coupled nuclei before sweeping.")
def cmd_sweep(model, include_eed, k_b_per_us, k_f_per_us, b0_mT, delta_deg,
              theta_step_deg, phi_step_deg, out_dir, workers, n_keep):
    """Sweep field orientations and write the CSV + summary JSON."""
    cfg = RunConfig(
        model=model, include_eed=include_eed, n_keep=n_keep,
        theta_step_deg=theta_step_deg, phi_step_deg=phi_step_deg,
        b0_mT=b0_mT, k_b_per_us=k_b_per_us, k_f_per_us=k_f_per_us,
        delta_deg=delta_deg, out_dir=out_dir, workers=workers,
    )
    system = _resolve_system(cfg)
    grid = _grid(cfg)
    n_workers = _workers(cfg)
    click.echo(
        f"sweeping {system.name} (dim {system.dim}): "
        f"{grid.shape[0]}x{grid.shape[1]} orientations, "
        f"eed {'on' if cfg.include_eed else 'off'}, workers {n_workers}"
    )
    try:
        result = sweep(system, grid, cfg.include_eed, b0_mT=cfg.b0_mT,
                       delta_deg=cfg.delta_deg, workers=n_workers)
    except NumericalError as exc:
        raise click.ClickException(str(exc)) from exc
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = cfg.out_dir / f"{system.name}_sweep.csv"
    json_path = cfg.out_dir / f"{system.name}_sweep.json"
    write_sweep_csv(result, csv_path)
    write_sweep_summary(result, json_path)
    _echo_extrema(result)
    click.echo(f"wrote {csv_path}")
    click.echo(f"wrote {json_path}")


def _parse_n_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise click.UsageError(f"--n-range must look like A..B, got {text!r}")
    try:
        bounds = int(lo), int(hi)
    except ValueError:
        raise click.UsageError(f"--n-range must look like A..B, got {text!r}") from None
    if bounds[0] > bounds[1]:
        raise click.UsageError(f"--n-range bounds out of order: {text}")
    return bounds


@main.command("scan")
@_model_options
@_grid_options
@click.option("--n-range", required=True,
              help="Truncation sizes to scan, e.g. 1..4 (nuclei kept).")
def cmd_scan(model, include_eed, k_b_per_us, k_f_per_us, b0_mT, delta_deg,
             theta_step_deg, phi_step_deg, out_dir, workers, n_range):
    """Sweep nested truncations of a model and summarize optimality."""
    bounds = _parse_n_range(n_range)
    cfg = RunConfig(
        model=model, include_eed=include_eed, n_range=bounds,
        theta_step_deg=theta_step_deg, phi_step_deg=phi_step_deg,
        b0_mT=b0_mT, k_b_per_us=k_b_per_us, k_f_per_us=k_f_per_us,
        delta_deg=delta_deg, out_dir=out_dir, workers=workers,
    )
    system = _resolve_system(cfg)
    grid = _grid(cfg)
    n_workers = _workers(cfg)
    click.echo(
        f"scanning {system.name}: n = {bounds[0]}..{bounds[1]}, "
        f"{grid.shape[0]}x{grid.shape[1]} orientations each, "
        f"eed {'on' if cfg.include_eed else 'off'}, workers {n_workers}"
    )
    try:
        summary = truncation_scan(
            system, grid, range(bounds[0], bounds[1] + 1), cfg.include_eed,
            b0_mT=cfg.b0_mT, delta_deg=cfg.delta_deg, workers=n_workers,
            keep_results=True,
        )
    except (NumericalError, LookupError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for row, result in zip(summary.rows, summary.results):
        path = cfg.out_dir / f"{system.name}_n{row.n_keep}_sweep.json"
        write_sweep_summary(result, path)
        click.echo(
            f"n={row.n_keep} dim={row.dim}: gamma {row.gamma:.6g}, best "
            f"1/(N var) {row.best_inv_n_var:.6g} at theta {row.best_theta_deg:g}, "
            f"phi {row.best_phi_deg:g} deg, optimality {row.best_optimality:.4g}"
        )
        click.echo(f"wrote {path}")
    scan_path = cfg.out_dir / f"{system.name}_scan.json"
    write_scan_summary(summary, system.name, cfg.include_eed, scan_path)
    click.echo(
        f"optimality: n=1 {summary.optimality_at_n1}, "
        f"max {summary.optimality_max:.4g}, min {summary.optimality_min:.4g}, "
        f"robust avg {summary.optimality_robust_avg:.4g}"
    )
    click.echo(f"wrote {scan_path}")


def _run_invariant_checks(system: SpinSystem, include_eed: bool, b0_mT: float,
                          delta_deg: float) -> bool:
    """Spot-check the solver invariants at a fixed draw of orientations."""
    rng = np.random.default_rng(CHECK_SEED)
    flux = herm = neg = qfi_dev = sld_resid = qcrb = 0.0
    fields = []
    for _ in range(CHECK_ORIENTATIONS):
        theta = math.acos(rng.uniform(-1.0, 1.0))
        phi = rng.uniform(0.0, 2.0 * math.pi)
        fields.append(FieldOrientation(theta=theta, phi=phi, b0_mT=b0_mT))

    for field in fields:
        res = solve_steady_state(system, field, include_eed)
        flux = max(flux, abs(res.phi_s + system.k_f * res.total_population - 1.0))
        rho = res.rho_ss
        herm = max(herm, float(np.linalg.norm(rho - rho.conj().T)))
        eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        neg = max(neg, float(-eigs.min()))

        sd = state_derivative(system, field, delta=math.radians(delta_deg),
                              include_eed=include_eed)
        q_spec = qfi_spectral(sd)
        sld = sld_solve(sd)
        if q_spec > 1e-10:
            dev = max(abs(qfi_from_sld(sd, sld) - q_spec),
                      abs(qfi_vectorized(sd, sld) - q_spec)) / q_spec
            qfi_dev = max(qfi_dev, dev)
        sym = 0.5 * (sld @ sd.rho + sd.rho @ sld)
        sld_resid = max(sld_resid, float(np.linalg.norm(sym - sd.drho_dtheta)))
        c = cfi_yield(sd.phi_s, sd.dphi_s_dtheta)
        # below the qfi noise floor both sides are rounding dust; the
        # floored denominator keeps the ordering test meaningful there
        qcrb = max(qcrb, (c - q_spec) / max(q_spec, 1e-10))

    rows = [
        ("flux balance", flux, 1e-8),
        ("state hermiticity", herm, 1e-10),
        ("state positivity", neg, 1e-10),
        ("qfi route agreement", qfi_dev, 1e-8),
        ("sld defining residual", sld_resid, 1e-8),
        ("qcrb ordering", qcrb, 1e-8),
    ]
    if system.dim <= PROPAGATION_CHECK_MAX_DIM:
        prop = propagate_time_domain(system, fields[0], include_eed,
                                     t_max=30.0 / system.k_f)
        direct = solve_steady_state(system, fields[0], include_eed)
        rows.append((
            "propagation equivalence",
            float(np.linalg.norm(prop.rho_ss - direct.rho_ss)),
            1e-6,
        ))

    all_ok = True
    for name, value, tol in rows:
        ok = value <= tol
        all_ok &= ok
        status = "ok  " if ok else "FAIL"
        click.echo(f"{status}  {name:<24s} {value:10.3e}  (tol {tol:.0e})")
    return all_ok


@main.command("check")
@_model_options
def cmd_check(model, include_eed, k_b_per_us, k_f_per_us, b0_mT, delta_deg):
    """Validate solver invariants on a model at random orientations."""
    cfg = RunConfig(
        model=model, include_eed=include_eed, b0_mT=b0_mT,
        k_b_per_us=k_b_per_us, k_f_per_us=k_f_per_us, delta_deg=delta_deg,
    )
    system = _resolve_system(cfg)
    click.echo(
        f"checking {system.name} (dim {system.dim}) at {CHECK_ORIENTATIONS} "
        f"orientations, eed {'on' if cfg.include_eed else 'off'}"
    )
    try:
        ok = _run_invariant_checks(system, cfg.include_eed, cfg.b0_mT, cfg.delta_deg)
    except NumericalError as exc:
        raise click.ClickException(str(exc)) from exc
    if not ok:
        sys.exit(1)
    click.echo("all checks passed")


if __name__ == "__main__":
    main()

"""Estimation-theory limits for the compass observable.

Works on the reduced electronic steady state rho(theta) and its finite-
difference derivative.  Quantum Fisher information comes in three exchange-
able routes (spectral sum, Tr[L^2 rho], vectorized), the symmetric
logarithmic derivative L solves (1/2){L, rho} = d rho / d theta, and the
yield-based classical bound is F = (dPhi/dtheta)^2 / (Phi (1 - Phi)).
Angles in radians, information in rad^-2, variances in rad^2.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .liouville import NumericalError, solve_steady_state, vectorize, devectorize
from .operators import (
    angular_momentum_ops,
    electron_singlet_projector,
    electron_spin_squared_pair,
)
from .system import FieldOrientation, SpinSystem

DEFAULT_DELTA = math.radians(0.1)
# phi_s this close to 0 or 1 counts as a boundary point (sentinel, not error)
YIELD_BOUNDARY_TOL = 1e-9
# below this the state carries no usable information and the optimal
# estimator is not constructed
QFI_FLOOR = 1e-10
_HERM_TOL = 1e-8


@dataclass(frozen=True)
class StateDerivative:
    """Electronic steady state at theta with its derivative and the singlet
    yield data evaluated from the same reduced states."""

    rho: np.ndarray
    drho_dtheta: np.ndarray
    step: float
    phi_s: float
    dphi_s_dtheta: float


@dataclass(frozen=True)
class MetrologyRecord:
    theta: float
    phi: float
    phi_s: float
    dphi_s_dtheta: float
    qfi: float
    cfi: float
    inv_n_var: float
    optimality: float
    ortho_dist_s2: float
    ortho_dist_ps: float


@dataclass(frozen=True)
class RouteDiagnostics:
    """Cross-route agreement measures for one grid point."""

    qfi_rel_dev: float
    sld_residual: float
    variance_rel_dev: float


def _hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _validate_state(rho: np.ndarray, drho: np.ndarray) -> None:
    if rho.shape != (4, 4) or drho.shape != (4, 4):
        raise ValueError("expected 4x4 electronic matrices")
    if np.linalg.norm(rho - rho.conj().T) > _HERM_TOL:
        raise ValueError("state is not Hermitian within tolerance")
    if np.linalg.norm(drho - drho.conj().T) > _HERM_TOL:
        raise ValueError("state derivative is not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > _HERM_TOL:
        raise ValueError("state does not have unit trace")


def singlet_population(rho_el: np.ndarray) -> float:
    """Tr[P rho] against the electronic singlet projector."""
    return float(np.real(np.einsum("ij,ji->", electron_singlet_projector(), rho_el)))


def yield_from_population(x: float, k_b: float, k_f: float) -> tuple[float, float]:
    """Singlet yield Phi = k_b x / (k_f + k_b x) and dPhi/dx.

    Flux balance makes the yield an exact function of the singlet
    population x of the normalized electronic state.  Evaluating Phi and
    its slope through x ties the scalar signal to the same matrix whose
    derivative feeds the quantum bound, so the classical bound cannot
    drift above the quantum one on floating-point noise alone.
    """
    denom = k_f + k_b * x
    return k_b * x / denom, k_b * k_f / denom**2


def state_derivative(
    system: SpinSystem,
    field: FieldOrientation,
    delta: float = DEFAULT_DELTA,
    include_eed: bool = False,
    method: str = "auto",
) -> StateDerivative:
    """Differentiate the electronic steady state in theta by central
    differences of half-step solves; one-sided at the poles, where the
    center solve is reused.  The yield and its slope come from the same
    states via the singlet population."""
    if delta <= 0:
        raise ValueError(f"step must be positive, got {delta}")
    theta, phi, b0 = field.theta, field.phi, field.b0_mT

    def solve_at(th):
        res = solve_steady_state(
            system, FieldOrientation(b0, th, phi), include_eed, method=method
        )
        return _hermitian_part(res.rho_electronic)

    rho_c = solve_at(theta)
    lo, hi = theta - 0.5 * delta, theta + 0.5 * delta
    if lo >= 0.0 and hi <= math.pi:
        rho_lo, rho_hi = solve_at(lo), solve_at(hi)
    elif lo < 0.0:
        rho_lo, rho_hi = rho_c, solve_at(theta + delta)
    else:
        rho_lo, rho_hi = solve_at(theta - delta), rho_c
    drho = (rho_hi - rho_lo) / delta
    phi_c, slope = yield_from_population(
        singlet_population(rho_c), system.k_b, system.k_f
    )
    return StateDerivative(
        rho=rho_c,
        drho_dtheta=drho,
        step=delta,
        phi_s=phi_c,
        dphi_s_dtheta=slope * singlet_population(drho),
    )


def qfi_spectral(sd: StateDerivative, eps: float = 1e-12) -> float:
    """QFI from the eigenbasis of rho: 2 sum |<i|drho|j>|^2 / (p_i + p_j)
    over pairs with p_i + p_j > eps."""
    _validate_state(sd.rho, sd.drho_dtheta)
    p, u = np.linalg.eigh(sd.rho)
    a = u.conj().T @ sd.drho_dtheta @ u
    denom = p[:, None] + p[None, :]
    mask = denom > eps
    return float(2.0 * np.sum(np.abs(a[mask]) ** 2 / denom[mask]))


def _regularized(rho: np.ndarray, floor: float) -> np.ndarray:
    w, u = np.linalg.eigh(rho)
    w = np.maximum(w, floor)
    w = w / w.sum()
    return (u * w) @ u.conj().T


def sld_solve(sd: StateDerivative, floor: float = 1e-12) -> np.ndarray:
    """Symmetric logarithmic derivative from the vectorized Lyapunov
    equation vec(L) = 2 (rho_bar ox 1 + 1 ox rho)^-1 vec(drho).

    Rank-deficient states are floored at `floor` and renormalized first, so
    boundary-of-support cases stay solvable.
    """
    _validate_state(sd.rho, sd.drho_dtheta)
    rho_reg = _regularized(sd.rho, floor)
    eye = np.eye(4)
    k = np.kron(rho_reg.T, eye) + np.kron(eye, rho_reg)
    try:
        vec_l = 2.0 * sla.solve(k, vectorize(sd.drho_dtheta), assume_a="her")
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SLD solve failed: {exc}") from exc
    return _hermitian_part(devectorize(vec_l))


def qfi_from_sld(sd: StateDerivative, sld: np.ndarray | None = None) -> float:
    """QFI as Tr[L^2 rho], against the unregularized state."""
    if sld is None:
        sld = sld_solve(sd)
    return float(np.real(np.trace(sld @ sld @ sd.rho)))


def qfi_vectorized(sd: StateDerivative, sld: np.ndarray | None = None) -> float:
    """QFI as vec(drho)^dag vec(L)."""
    if sld is None:
        sld = sld_solve(sd)
    return float(np.real(np.vdot(vectorize(sd.drho_dtheta), vectorize(sld))))


def _check_yield(phi_s: float) -> None:
    if phi_s < -YIELD_BOUNDARY_TOL or phi_s > 1.0 + YIELD_BOUNDARY_TOL:
        raise ValueError(f"singlet yield {phi_s} outside [0, 1]")


def _at_boundary(phi_s: float) -> bool:
    return phi_s <= YIELD_BOUNDARY_TOL or phi_s >= 1.0 - YIELD_BOUNDARY_TOL


def cfi_yield(phi_s: float, dphi_s_dtheta: float) -> float:
    """Two-outcome classical Fisher information of the yield measurement.

    At a pinned yield (0 or 1 within 1e-9) the value is 0 for a vanishing
    derivative and +inf otherwise, keeping sweep grids rectangular.
    """
    _check_yield(phi_s)
    if _at_boundary(phi_s):
        return 0.0 if dphi_s_dtheta == 0.0 else math.inf
    return dphi_s_dtheta * dphi_s_dtheta / (phi_s * (1.0 - phi_s))


def yield_variance(phi_s: float, dphi_s_dtheta: float, n_trials: int = 1) -> float:
    """Binomial-propagation variance of the theta estimate from N yield
    trials; +inf when the yield carries no theta dependence."""
    if n_trials < 1:
        raise ValueError(f"trial count must be >= 1, got {n_trials}")
    _check_yield(phi_s)
    if dphi_s_dtheta == 0.0:
        return math.inf
    p = phi_s * (1.0 - phi_s)
    return max(p, 0.0) / (n_trials * dphi_s_dtheta * dphi_s_dtheta)


def yield_variance_from_total_spin(
    phi_s: float, dphi_s_dtheta: float, n_trials: int = 1
) -> float:
    """Same variance obtained by propagating total-spin-squared statistics:
    moments 4(1-Phi) - 4(1-Phi)^2 over slope -2 dPhi/dtheta.  Kept as a
    literally separate arithmetic path so the equivalence stays testable."""
    if n_trials < 1:
        raise ValueError(f"trial count must be >= 1, got {n_trials}")
    _check_yield(phi_s)
    slope = -2.0 * dphi_s_dtheta
    if slope == 0.0:
        return math.inf
    spread = 4.0 * (1.0 - phi_s) - 4.0 * (1.0 - phi_s) ** 2
    return max(spread, 0.0) / (n_trials * slope * slope)


def optimal_estimator(theta: float, sld: np.ndarray, qfi: float) -> np.ndarray:
    """Estimator observable theta*1 + L/qfi, unbiased with variance 1/qfi."""
    if qfi <= 0:
        raise ValueError(f"estimator undefined for qfi {qfi}")
    return theta * np.eye(4) + sld / qfi


@lru_cache(maxsize=1)
def spin_component_basis() -> tuple[np.ndarray, tuple[str, ...]]:
    """The 16 electron-pair spin components, orthonormal under the
    Hilbert-Schmidt inner product: identity/2, the single-spin components
    of each electron, and the nine dyadics 2 S_a S_b."""
    sx, sy, sz = angular_momentum_ops(2)
    eye = np.eye(2)
    singles = {"x": sx, "y": sy, "z": sz}
    ops = [0.5 * np.kron(eye, eye)]
    labels = ["1/2"]
    for ax, s in singles.items():
        ops.append(np.kron(eye, s))
        labels.append(f"S_B{ax}")
    for ax, s in singles.items():
        ops.append(np.kron(s, eye))
        labels.append(f"S_A{ax}")
    for ax_a, s_a in singles.items():
        for ax_b, s_b in singles.items():
            ops.append(2.0 * np.kron(s_a, s_b))
            labels.append(f"2S_A{ax_a}S_B{ax_b}")
    stacked = np.array(ops)
    stacked.setflags(write=False)
    return stacked, tuple(labels)


def spin_component_decomposition(op: np.ndarray) -> np.ndarray:
    """Expansion coefficients c_i = Tr[O S_i] of a Hermitian 4x4 operator."""
    op = np.asarray(op)
    if op.shape != (4, 4):
        raise ValueError(f"expected a 4x4 operator, got shape {op.shape}")
    scale = max(1.0, float(np.linalg.norm(op)))
    if np.linalg.norm(op - op.conj().T) > 1e-10 * scale:
        raise ValueError("operator is not Hermitian within tolerance")
    basis, _ = spin_component_basis()
    return np.real(np.einsum("ij,kji->k", op, basis))


def orthogonality_distance(m_est: np.ndarray, observable: np.ndarray) -> float:
    """Distance from orthogonality |alpha - pi/2|, with alpha the angle
    between the spin-component coefficient vectors of the two operators."""
    c_m = spin_component_decomposition(m_est)
    c_o = spin_component_decomposition(observable)
    norm_m, norm_o = np.linalg.norm(c_m), np.linalg.norm(c_o)
    if norm_m < 1e-14 or norm_o < 1e-14:
        raise ValueError("operator has a vanishing spin-component vector")
    cos_alpha = float(np.clip(np.dot(c_m, c_o) / (norm_m * norm_o), -1.0, 1.0))
    return abs(math.acos(cos_alpha) - 0.5 * math.pi)


def record_from_derivative(
    sd: StateDerivative, theta: float, phi: float, n_trials: int = 1
) -> MetrologyRecord:
    """Assemble the per-orientation metrology quantities from one solved
    derivative.  Orthogonality distances are NaN below the QFI floor, and
    optimality is +inf where the yield measurement carries no information."""
    qfi = qfi_spectral(sd)
    cfi = cfi_yield(sd.phi_s, sd.dphi_s_dtheta)
    variance = yield_variance(sd.phi_s, sd.dphi_s_dtheta, n_trials)
    inv_n_var = 0.0 if math.isinf(variance) else 1.0 / (n_trials * variance)
    optimality = qfi / cfi if cfi > 0.0 else math.inf
    if qfi > QFI_FLOOR:
        sld = sld_solve(sd)
        m_est = optimal_estimator(theta, sld, qfi)
        dist_s2 = orthogonality_distance(m_est, electron_spin_squared_pair())
        dist_ps = orthogonality_distance(m_est, electron_singlet_projector())
    else:
        dist_s2 = dist_ps = math.nan
    return MetrologyRecord(
        theta=theta,
        phi=phi,
        phi_s=sd.phi_s,
        dphi_s_dtheta=sd.dphi_s_dtheta,
        qfi=qfi,
        cfi=cfi,
        inv_n_var=inv_n_var,
        optimality=optimality,
        ortho_dist_s2=dist_s2,
        ortho_dist_ps=dist_ps,
    )


def metrology_record(
    system: SpinSystem,
    field: FieldOrientation,
    n_trials: int = 1,
    delta: float = DEFAULT_DELTA,
    include_eed: bool = False,
    method: str = "auto",
) -> MetrologyRecord:
    """Solve one orientation end to end and report its metrology record."""
    sd = state_derivative(system, field, delta, include_eed, method=method)
    return record_from_derivative(sd, field.theta, field.phi, n_trials)


def route_diagnostics(sd: StateDerivative, n_trials: int = 1) -> RouteDiagnostics:
    """Cross-check the redundant computation routes at one grid point:
    the three QFI forms, the SLD defining equation, and the two variance
    derivations.  Deviations are relative where the scale supports it."""
    sld = sld_solve(sd)
    q_spec = qfi_spectral(sd)
    q_sld = qfi_from_sld(sd, sld)
    q_vec = qfi_vectorized(sd, sld)
    if q_spec > QFI_FLOOR:
        qfi_dev = max(abs(q_sld - q_spec), abs(q_vec - q_spec)) / q_spec
    else:
        qfi_dev = 0.0
    residual = float(np.linalg.norm(
        0.5 * (sld @ sd.rho + sd.rho @ sld) - sd.drho_dtheta
    ))
    v_binom = yield_variance(sd.phi_s, sd.dphi_s_dtheta, n_trials)
    v_spin = yield_variance_from_total_spin(sd.phi_s, sd.dphi_s_dtheta, n_trials)
    if math.isinf(v_binom) or math.isinf(v_spin):
        var_dev = 0.0 if v_binom == v_spin else math.inf
    else:
        var_dev = abs(v_spin - v_binom) / max(v_binom, 1e-300)
    return RouteDiagnostics(
        qfi_rel_dev=qfi_dev, sld_residual=residual, variance_rel_dev=var_dev
    )

"""Liouville-space machinery: vectorization identities, superoperator
assembly against direct evaluation of the master equation, solver
cross-checks, and the independent RK4 propagation."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from rpcompass import (
    FieldOrientation,
    NumericalError,
    load_shipped_model,
    partial_trace_electronic,
    propagate_time_domain,
    solve_steady_state,
)
from rpcompass.liouville import (
    _pick_method,
    build_liouvillian,
    devectorize,
    hamiltonian_superoperator,
    steady_state,
    steady_state_schur,
    vectorize,
)
from rpcompass.hamiltonian import build_hamiltonian
from rpcompass.operators import singlet_projector

ORIENT = FieldOrientation(0.05, 0.9, 0.3)


def _random_hermitian(d, rng, scale=1.0):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (a + a.conj().T)


def _random_matrix(d, rng):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def test_vectorize_column_stacks():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    npt.assert_array_equal(vectorize(m), [1.0, 3.0, 2.0, 4.0])
    npt.assert_array_equal(devectorize(vectorize(m)), m)


def test_vectorize_rejects_non_square():
    with pytest.raises(ValueError, match="square"):
        vectorize(np.ones((2, 3)))
    with pytest.raises(ValueError, match="perfect square"):
        devectorize(np.ones(5))
    with pytest.raises(ValueError, match="vector"):
        devectorize(np.ones((2, 2)))


def test_vec_kron_identity():
    # vec(A X B) = (B^T kron A) vec(X), the convention everything rests on
    rng = np.random.default_rng(11)
    a, x, b = (_random_matrix(3, rng) for _ in range(3))
    npt.assert_allclose(
        np.kron(b.T, a) @ vectorize(x), vectorize(a @ x @ b), atol=1e-12
    )


@pytest.mark.parametrize("sparse", [True, False], ids=["sparse", "dense"])
def test_hamiltonian_superoperator_action(sparse):
    rng = np.random.default_rng(12)
    h = _random_hermitian(6, rng, scale=3.0)
    sup = hamiltonian_superoperator(h, sparse=sparse)
    for _ in range(5):
        rho = _random_matrix(6, rng)
        npt.assert_allclose(
            devectorize(sup @ vectorize(rho)),
            -1j * (h @ rho - rho @ h),
            atol=1e-12,
        )


@pytest.mark.parametrize("sparse", [True, False], ids=["sparse", "dense"])
def test_build_liouvillian_matches_direct_evaluation(sparse):
    """M vec(rho) must equal the master-equation right side evaluated
    straight from the Hilbert-space matrices."""
    system = load_shipped_model("fad_z_1n")
    h = build_hamiltonian(system, ORIENT, include_eed=True, sparse=False)
    p_s = singlet_projector(system, sparse=False)
    k_b, k_f = 0.7, 0.3
    m = build_liouvillian(h, p_s, k_b, k_f, sparse=sparse)
    rng = np.random.default_rng(13)
    for _ in range(10):
        rho = _random_matrix(system.dim, rng)
        direct = (
            -1j * (h @ rho - rho @ h)
            - 0.5 * k_b * (p_s @ rho + rho @ p_s)
            - k_f * rho
        )
        npt.assert_allclose(devectorize(m @ vectorize(rho)), direct, atol=1e-10)


def test_liouvillian_shape_mismatch():
    with pytest.raises(ValueError, match="square and equal"):
        build_liouvillian(np.eye(4), np.eye(6), 1.0, 1.0)


def test_liouvillian_spectrum_sits_left_of_minus_kf():
    # commutator part is skew, the recombination part negative semidefinite,
    # so the escape rate bounds the whole spectrum
    system = load_shipped_model("fad_z_1n")
    h = build_hamiltonian(system, ORIENT, sparse=False)
    p_s = singlet_projector(system, sparse=False)
    m = build_liouvillian(h, p_s, system.k_b, system.k_f, sparse=False)
    eigs = np.linalg.eigvals(m)
    assert np.max(eigs.real) <= -system.k_f + 1e-10


@pytest.mark.parametrize("theta", [0.0, 1.0, 2.2])
def test_electron_pair_yield_is_half_everywhere(theta):
    """Zeeman commutes with the singlet projector when nothing else is in H,
    so the bare pair recombines with yield 1/2 at k_b = k_f regardless of
    where the field points."""
    system = load_shipped_model("electron_pair")
    res = solve_steady_state(system, FieldOrientation(0.05, theta, 0.7))
    assert res.phi_s == pytest.approx(0.5, abs=1e-10)
    # the state itself is the half-filled singlet
    expected = 0.5 * singlet_projector(system, sparse=False)
    npt.assert_allclose(res.rho_ss, expected, atol=1e-10)


def test_steady_state_invariants():
    system = load_shipped_model("fad_w_2n")
    res = solve_steady_state(system, ORIENT, include_eed=True)
    rho = res.rho_ss
    # flux balance: generation 1 leaves either through k_b or k_f
    flux = system.k_b * np.real(
        np.einsum("ij,ji->", singlet_projector(system, sparse=False), rho)
    ) + system.k_f * res.total_population
    assert flux == pytest.approx(1.0, abs=1e-8)
    npt.assert_allclose(rho, rho.conj().T, atol=1e-10)
    herm = 0.5 * (rho + rho.conj().T)
    assert np.linalg.eigvalsh(herm).min() >= -1e-12
    assert np.trace(res.rho_electronic) == pytest.approx(1.0, abs=1e-12)


def test_schur_route_matches_direct():
    system = load_shipped_model("fad_z_1n")
    for theta in (0.4, 1.7):
        field = FieldOrientation(0.05, theta, 1.1)
        direct = solve_steady_state(system, field, include_eed=True, method="direct")
        schur = solve_steady_state(system, field, include_eed=True, method="schur")
        npt.assert_allclose(schur.rho_ss, direct.rho_ss, atol=1e-12)
        assert schur.phi_s == pytest.approx(direct.phi_s, abs=1e-12)


def test_iterative_route_matches_direct():
    system = load_shipped_model("fad_z_1n")
    direct = solve_steady_state(system, ORIENT, method="direct")
    iterative = solve_steady_state(system, ORIENT, method="iterative")
    npt.assert_allclose(iterative.rho_ss, direct.rho_ss, atol=1e-8)


def test_generation_only_rescales_the_state():
    system = load_shipped_model("fad_z_1n")
    base = solve_steady_state(system, ORIENT, generation=1.0)
    scaled = solve_steady_state(system, ORIENT, generation=7.3)
    # phi_s is normalized per generated pair; rho_ss is concentration-like
    assert scaled.phi_s == pytest.approx(base.phi_s, abs=1e-12)
    npt.assert_allclose(scaled.rho_ss, 7.3 * base.rho_ss, atol=1e-12)


def test_steady_state_input_validation():
    system = load_shipped_model("fad_z_1n")
    h = build_hamiltonian(system, ORIENT)
    p_s = singlet_projector(system)
    m = build_liouvillian(h, p_s, 1.0, 1.0)
    with pytest.raises(ValueError, match="nuclear dimension"):
        steady_state(m, p_s, 0, 1.0, 1.0)
    with pytest.raises(ValueError, match="generation"):
        steady_state(m, p_s, 3, 1.0, 1.0, generation=0.0)
    with pytest.raises(ValueError, match="unknown method"):
        steady_state(m, p_s, 3, 1.0, 1.0, method="magic")
    with pytest.raises(ValueError, match="does not match"):
        steady_state(m, np.eye(4), 1, 1.0, 1.0)
    with pytest.raises(ValueError, match="does not match"):
        steady_state_schur(np.eye(6), np.eye(4), 1, 1.0, 1.0)


def test_unreachable_rtol_raises():
    system = load_shipped_model("fad_z_1n")
    with pytest.raises(NumericalError, match="residual"):
        solve_steady_state(system, ORIENT, rtol=1e-300)


def test_pick_method_policy():
    assert _pick_method("auto", 4) == "direct"
    assert _pick_method("auto", 32) == "direct"
    assert _pick_method("auto", 33) == "schur"
    assert _pick_method("auto", 512) == "schur"
    assert _pick_method("auto", 513) == "iterative"
    assert _pick_method("schur", 4) == "schur"


def test_propagation_matches_steady_state():
    """The RK4 integration shares nothing with the superoperator solve, so
    agreement here vouches for both."""
    system = load_shipped_model("fad_z_1n")
    resolvent = solve_steady_state(system, ORIENT, include_eed=True)
    propagated = propagate_time_domain(
        system, ORIENT, include_eed=True, t_max=35.0, dt=2e-4
    )
    npt.assert_allclose(propagated.rho_ss, resolvent.rho_ss, atol=1e-6)
    assert propagated.phi_s == pytest.approx(resolvent.phi_s, abs=1e-6)


def test_propagation_is_fourth_order():
    # fixed-horizon Richardson check: halving dt should cut the error by
    # about 2^4
    system = load_shipped_model("fad_z_1n")

    def final_state(dt):
        res = propagate_time_domain(
            system, ORIENT, t_max=2.0, dt=dt, stop_norm=0.0
        )
        return res.rho_ss

    coarse = final_state(4e-4)
    mid = final_state(2e-4)
    fine = final_state(1e-4)
    e1 = np.linalg.norm(coarse - mid)
    e2 = np.linalg.norm(mid - fine)
    assert 8.0 < e1 / e2 < 32.0


def test_propagation_unconverged_raises():
    system = load_shipped_model("fad_z_1n")
    with pytest.raises(NumericalError, match="not converged"):
        propagate_time_domain(system, ORIENT, t_max=0.5, dt=2e-4)


def test_partial_trace_of_product_state():
    system = load_shipped_model("fad_z_1n")
    rng = np.random.default_rng(14)
    rho_el = _random_hermitian(4, rng)
    rho_nuc = _random_hermitian(system.z_nuclear, rng)
    rho = np.kron(rho_el, rho_nuc)
    npt.assert_allclose(
        partial_trace_electronic(rho, system),
        rho_el * np.trace(rho_nuc),
        atol=1e-12,
    )
    with pytest.raises(ValueError, match="does not match"):
        partial_trace_electronic(np.eye(5), system)

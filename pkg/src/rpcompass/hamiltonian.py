"""Radical-pair Hamiltonians in angular-frequency units (rad us^-1).

The full Hamiltonian is

    H = sum_i [ sum_j S_i . A_ij . I_ij  +  omega_i . S_i ]  +  S_A . D . S_B

with i over the two electrons, j over each electron's nuclei, and
omega_i = -gamma_i B the Larmor frequency vector for the field
B = B0 (sin t cos p, sin t sin p, cos t).  Hyperfine and dipolar tensors are
ingested in mT and multiplied by gamma here, at build time.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .constants import DEFAULT_G_FACTOR, dipolar_prefactor_mT_nm3, gyromagnetic_ratio_mT
from .operators import angular_momentum_ops, electron_pair_ops, embed_site_operator, _use_sparse
from .system import FieldOrientation, SpinSystem


def zeeman_frequencies(field: FieldOrientation, g_factor: float = DEFAULT_G_FACTOR) -> np.ndarray:
    """Larmor angular-frequency vector omega = -gamma B, in rad us^-1."""
    return -gyromagnetic_ratio_mT(g_factor) * field.field_mT


def hamiltonian_terms(
    system: SpinSystem, include_eed: bool = False, sparse: bool | None = None
):
    """Split the Hamiltonian into its field-independent part and Zeeman generators.

    Returns (h_static, s_total) with h_static the hyperfine (plus optional
    dipolar) part and s_total the three embedded total-electron-spin
    components, so that for any field orientation

        H = h_static + omega . s_total.

    Sweeps reuse both pieces across orientations.
    """
    if include_eed and system.eed_mT is None:
        raise ValueError(f"system {system.name!r} has no eed tensor")
    use_sp = _use_sparse(system.dim, sparse)
    gamma = gyromagnetic_ratio_mT(system.g_factor)
    sa, sb = electron_pair_ops(system, use_sp)
    electron = {"A": sa, "B": sb}

    if use_sp:
        h = sp.csr_matrix((system.dim, system.dim), dtype=complex)
    else:
        h = np.zeros((system.dim, system.dim), dtype=complex)
    for k, nuc in enumerate(system.nuclei):
        a = gamma * nuc.hyperfine_mT
        local = angular_momentum_ops(nuc.multiplicity)
        iops = [
            embed_site_operator(local[b], system.nucleus_site(k), system, use_sp)
            for b in range(3)
        ]
        s_el = electron[nuc.radical]
        for al in range(3):
            coupled = a[al, 0] * iops[0] + a[al, 1] * iops[1] + a[al, 2] * iops[2]
            h = h + s_el[al] @ coupled
    if include_eed:
        d_tensor = gamma * system.eed_mT
        for al in range(3):
            coupled = d_tensor[al, 0] * sb[0] + d_tensor[al, 1] * sb[1] + d_tensor[al, 2] * sb[2]
            h = h + sa[al] @ coupled

    s_total = [sa[i] + sb[i] for i in range(3)]
    if use_sp:
        return h.tocsr(), [s.tocsr() for s in s_total]
    return h, np.array(s_total)


def build_hamiltonian(
    system: SpinSystem,
    field: FieldOrientation,
    include_eed: bool = False,
    sparse: bool | None = None,
):
    """Full Hamiltonian for one field orientation, in rad us^-1."""
    h_static, s_total = hamiltonian_terms(system, include_eed, sparse)
    omega = zeeman_frequencies(field, system.g_factor)
    h = h_static + omega[0] * s_total[0] + omega[1] * s_total[1] + omega[2] * s_total[2]
    return h.tocsr() if sp.issparse(h) else h


def point_dipole_tensor(r_nm, g_factor: float = DEFAULT_G_FACTOR) -> np.ndarray:
    """Electron-electron dipolar tensor for a point dipole at separation r.

    D = d(r) (1 - 3 rhat rhat^T) in mT, axially symmetric about rhat with
    eigenvalues in ratio (1, 1, -2).  Only valid well beyond contact, so
    separations at or below 0.1 nm are rejected.
    """
    r = np.asarray(r_nm, dtype=float)
    if r.shape != (3,):
        raise ValueError(f"r must be a 3-vector in nm, got shape {r.shape}")
    dist = float(np.linalg.norm(r))
    if dist <= 0.1:
        raise ValueError(f"point-dipole form invalid at |r| = {dist:.4g} nm <= 0.1 nm")
    rhat = r / dist
    d0 = dipolar_prefactor_mT_nm3(g_factor) / dist**3
    return d0 * (np.eye(3) - 3.0 * np.outer(rhat, rhat))

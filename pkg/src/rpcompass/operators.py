"""Spin operators on the composite radical-pair Hilbert space.

All operators use hbar = 1, so angular-momentum components are dimensionless
and Hamiltonians carry angular frequency.  Operators come back dense below
DENSE_DIM_LIMIT and as scipy CSR matrices above it; every consumer in the
package accepts either.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .system import SpinSystem

# largest dimension for which dense storage is the default
DENSE_DIM_LIMIT = 256


def angular_momentum_ops(multiplicity: int) -> np.ndarray:
    """Spin matrices (Sx, Sy, Sz) for a spin of dimension ``multiplicity``.

    Parameters
    ----------
    multiplicity : int
        2S + 1, so 2 for spin-1/2, 3 for spin-1.

    Returns
    -------
    ndarray, shape (3, multiplicity, multiplicity)
        Hermitian matrices obeying [Sx, Sy] = i Sz (cyclically).
    """
    if not isinstance(multiplicity, int) or multiplicity < 2:
        raise ValueError(f"multiplicity must be an integer >= 2, got {multiplicity!r}")
    s = (multiplicity - 1) / 2.0
    m = np.arange(s, -s - 1.0, -1.0)
    # raising operator in the |s, m> basis ordered m = s ... -s
    ladder = np.sqrt(s * (s + 1.0) - m[1:] * (m[1:] + 1.0))
    sp_op = np.zeros((multiplicity, multiplicity), dtype=complex)
    sp_op[np.arange(multiplicity - 1), np.arange(1, multiplicity)] = ladder
    sx = 0.5 * (sp_op + sp_op.conj().T)
    sy = -0.5j * (sp_op - sp_op.conj().T)
    sz = np.diag(m).astype(complex)
    return np.array([sx, sy, sz])


def _use_sparse(dim: int, sparse: bool | None) -> bool:
    return dim > DENSE_DIM_LIMIT if sparse is None else sparse


def _embed(op, site: int, dims: tuple[int, ...], sparse: bool):
    """Kronecker-embed a single-site operator, identity elsewhere."""
    if sparse:
        out = sp.identity(1, format="csr", dtype=complex)
        for k, d in enumerate(dims):
            factor = sp.csr_matrix(op) if k == site else sp.identity(d, format="csr", dtype=complex)
            out = sp.kron(out, factor, format="csr")
        return out
    out = np.ones((1, 1), dtype=complex)
    for k, d in enumerate(dims):
        factor = op if k == site else np.eye(d)
        out = np.kron(out, factor)
    return out


def embed_site_operator(op, site: int, system: SpinSystem, sparse: bool | None = None):
    """Lift a local operator at one site to the full Hilbert space.

    Sites follow the global ordering: 0 = electron A, 1 = electron B, then
    A-nuclei and B-nuclei in list order.
    """
    dims = system.site_dims
    if not (0 <= site < len(dims)):
        raise ValueError(f"site {site} out of range for {len(dims)} sites")
    op = np.asarray(op) if not sp.issparse(op) else op
    if op.shape != (dims[site], dims[site]):
        raise ValueError(
            f"operator shape {op.shape} does not match local dimension {dims[site]} at site {site}"
        )
    return _embed(op, site, dims, _use_sparse(system.dim, sparse))


def electron_pair_ops(system: SpinSystem, sparse: bool | None = None):
    """Embedded spin operators of the two electrons.

    Returns (sa, sb), each of shape (3, d, d) dense or a list of three sparse
    matrices, ordered (x, y, z).
    """
    half = angular_momentum_ops(2)
    sa = [embed_site_operator(half[i], 0, system, sparse) for i in range(3)]
    sb = [embed_site_operator(half[i], 1, system, sparse) for i in range(3)]
    if sp.issparse(sa[0]):
        return sa, sb
    return np.array(sa), np.array(sb)


def singlet_projector(system: SpinSystem, sparse: bool | None = None):
    """Projector onto the electronic singlet, P_S = 1/4 - S_A . S_B."""
    sa, sb = electron_pair_ops(system, sparse)
    if sp.issparse(sa[0]):
        d = system.dim
        out = 0.25 * sp.identity(d, format="csr", dtype=complex)
        for i in range(3):
            out = out - (sa[i] @ sb[i])
        return out.tocsr()
    d = system.dim
    out = 0.25 * np.eye(d, dtype=complex)
    for i in range(3):
        out -= sa[i] @ sb[i]
    return out


def electron_spin_squared(system: SpinSystem, sparse: bool | None = None):
    """Total electronic spin squared, (S_A + S_B)^2, built term by term."""
    sa, sb = electron_pair_ops(system, sparse)
    terms = [(sa[i] + sb[i]) @ (sa[i] + sb[i]) for i in range(3)]
    out = terms[0] + terms[1] + terms[2]
    return out.tocsr() if sp.issparse(out) else out


# 4x4 electronic-subspace versions, used by the metrology layer
_BARE_PAIR = SpinSystem(name="bare-pair", nuclei=(), k_b=1.0, k_f=1.0)


def electron_singlet_projector() -> np.ndarray:
    """The 4x4 singlet projector of the bare electron pair."""
    return singlet_projector(_BARE_PAIR, sparse=False)


def electron_spin_squared_pair() -> np.ndarray:
    """The 4x4 total-spin-squared operator of the bare electron pair."""
    return electron_spin_squared(_BARE_PAIR, sparse=False)

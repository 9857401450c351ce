import numpy as np
import numpy.testing as npt
import pytest

from rpcompass import (
    SpinSystem,
    Nucleus,
    angular_momentum_ops,
    electron_pair_ops,
    electron_singlet_projector,
    electron_spin_squared,
    electron_spin_squared_pair,
    embed_site_operator,
    singlet_projector,
)


def _nuc(label, mult, radical="A", scale=1.0):
    return Nucleus(label, mult, scale * np.diag([0.1, 0.2, 0.3]), radical)


BARE = SpinSystem("bare", (), 1.0, 1.0)


@pytest.mark.parametrize("mult", [2, 3, 4, 5])
def test_angular_momentum_algebra(mult):
    sx, sy, sz = angular_momentum_ops(mult)
    # su(2): [Sx, Sy] = i Sz and cyclic
    npt.assert_allclose(sx @ sy - sy @ sx, 1j * sz, atol=1e-13)
    npt.assert_allclose(sy @ sz - sz @ sy, 1j * sx, atol=1e-13)
    npt.assert_allclose(sz @ sx - sx @ sz, 1j * sy, atol=1e-13)
    s = (mult - 1) / 2
    casimir = sx @ sx + sy @ sy + sz @ sz
    npt.assert_allclose(casimir, s * (s + 1) * np.eye(mult), atol=1e-13)


def test_angular_momentum_spin_half_is_pauli_over_two():
    sx, sy, sz = angular_momentum_ops(2)
    npt.assert_allclose(sx, [[0, 0.5], [0.5, 0]])
    npt.assert_allclose(sy, [[0, -0.5j], [0.5j, 0]])
    npt.assert_allclose(sz, [[0.5, 0], [0, -0.5]])


def test_angular_momentum_rejects_bad_multiplicity():
    with pytest.raises(ValueError):
        angular_momentum_ops(1)


def test_embed_preserves_spectrum_and_commutation():
    system = SpinSystem("two", (_nuc("N1", 3), _nuc("H1", 2, "B")), 1.0, 1.0)
    local = angular_momentum_ops(3)
    embedded = [embed_site_operator(local[k], 2, system, sparse=False) for k in range(3)]
    assert embedded[0].shape == (system.dim, system.dim)
    comm = embedded[0] @ embedded[1] - embedded[1] @ embedded[0]
    npt.assert_allclose(comm, 1j * embedded[2], atol=1e-13)
    # operators on different sites commute
    other = embed_site_operator(angular_momentum_ops(2)[2], 3, system, sparse=False)
    npt.assert_allclose(
        embedded[0] @ other, other @ embedded[0], atol=1e-13
    )


def test_singlet_projector_is_projector_of_rank_z():
    for nuclei in [(), (_nuc("N1", 3),), (_nuc("N1", 3), _nuc("H1", 2, "B"))]:
        system = SpinSystem("s", nuclei, 1.0, 1.0)
        p = singlet_projector(system, sparse=False)
        npt.assert_allclose(p, p.conj().T, atol=1e-14)
        npt.assert_allclose(p @ p, p, atol=1e-14)
        assert np.trace(p).real == pytest.approx(system.z_nuclear, abs=1e-12)


@pytest.mark.parametrize(
    "nuclei",
    [
        (),
        (_nuc("N1", 3),),
        (_nuc("N1", 3), _nuc("H1", 2, "B")),
        (_nuc("N1", 4), _nuc("H1", 2, "B"), _nuc("H2", 3, "B")),
    ],
    ids=["0n", "1n", "2n", "3n-mixed"],
)
def test_spin_squared_complements_singlet_projector(nuclei):
    """S^2 and the singlet projector resolve the same splitting: S^2 = 2(1-P)."""
    system = SpinSystem("s", nuclei, 1.0, 1.0)
    s2 = electron_spin_squared(system, sparse=False)
    p = singlet_projector(system, sparse=False)
    npt.assert_allclose(s2, 2.0 * (np.eye(system.dim) - p), atol=1e-14)


def test_electron_pair_ops_embed_into_full_space():
    system = SpinSystem("one", (_nuc("N1", 3),), 1.0, 1.0)
    sa, sb = electron_pair_ops(system, sparse=False)
    for ops in (sa, sb):
        comm = ops[0] @ ops[1] - ops[1] @ ops[0]
        npt.assert_allclose(comm, 1j * ops[2], atol=1e-13)
    # A and B electrons live on different factors
    npt.assert_allclose(sa[0] @ sb[1], sb[1] @ sa[0], atol=1e-13)


def test_electronic_four_level_blocks():
    p = electron_singlet_projector()
    s2 = electron_spin_squared_pair()
    # the singlet state (|01> - |10>)/sqrt(2) in the product basis
    singlet = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)
    npt.assert_allclose(p @ singlet, singlet, atol=1e-14)
    npt.assert_allclose(p, np.outer(singlet, singlet), atol=1e-14)
    npt.assert_allclose(s2 @ singlet, np.zeros(4), atol=1e-14)
    # triplet eigenvalue s(s+1) = 2
    triplet = np.array([1.0, 0.0, 0.0, 0.0])
    npt.assert_allclose(s2 @ triplet, 2.0 * triplet, atol=1e-14)


def test_sparse_and_dense_embeddings_agree():
    system = SpinSystem("two", (_nuc("N1", 3), _nuc("H1", 2, "B")), 1.0, 1.0)
    p_sparse = singlet_projector(system, sparse=True)
    p_dense = singlet_projector(system, sparse=False)
    npt.assert_allclose(p_sparse.toarray(), p_dense, atol=1e-15)


def test_bare_pair_dimension():
    assert BARE.dim == 4
    assert singlet_projector(BARE, sparse=False).shape == (4, 4)

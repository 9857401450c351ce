import dataclasses
import math

import numpy as np
import numpy.testing as npt
import pytest

from rpcompass import (
    DimensionCapError,
    FieldOrientation,
    Nucleus,
    SpinSystem,
    average_conformers,
    dimension_cap,
    hyperfine_strength,
    rank_and_truncate,
)

AX = np.diag([0.1, 0.1, 1.0])


def test_nucleus_validation():
    with pytest.raises(ValueError):
        Nucleus("N", 1, AX, "A")
    with pytest.raises(ValueError):
        Nucleus("N", 3, AX, "C")
    with pytest.raises(ValueError):
        Nucleus("N", 3, np.ones((2, 2)), "A")
    with pytest.raises(ValueError):
        Nucleus("N", 3, np.full((3, 3), np.nan), "A")


def test_nucleus_tensor_is_frozen():
    n = Nucleus("N", 3, AX, "A")
    with pytest.raises(ValueError):
        n.hyperfine_mT[0, 0] = 5.0


def test_system_dimensions():
    s = SpinSystem(
        "s",
        (Nucleus("N", 3, AX, "A"), Nucleus("H", 2, AX, "B")),
        1.0,
        1.0,
    )
    assert s.z_nuclear == 6
    assert s.dim == 24
    assert s.site_dims == (2, 2, 3, 2)
    assert s.nucleus_site(0) == 2
    assert s.nucleus_site(1) == 3


def test_site_order_groups_by_radical():
    # B nucleus listed first still sits after all A sites
    s = SpinSystem(
        "s",
        (Nucleus("H", 2, AX, "B"), Nucleus("N", 3, AX, "A")),
        1.0,
        1.0,
    )
    assert s.site_dims == (2, 2, 3, 2)
    assert s.nucleus_site(0) == 3
    assert s.nucleus_site(1) == 2


def test_rates_must_be_positive():
    for k_b, k_f in [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (1.0, math.inf)]:
        with pytest.raises(ValueError):
            SpinSystem("s", (), k_b, k_f)


def test_eed_must_be_symmetric_traceless():
    asym = np.array([[0.1, 0.2, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, -0.2]])
    with pytest.raises(ValueError, match="symmetric"):
        SpinSystem("s", (), 1.0, 1.0, eed_mT=asym)
    traced = np.diag([0.1, 0.1, 0.1])
    with pytest.raises(ValueError, match="traceless"):
        SpinSystem("s", (), 1.0, 1.0, eed_mT=traced)
    ok = np.diag([0.1, 0.1, -0.2])
    assert SpinSystem("s", (), 1.0, 1.0, eed_mT=ok).eed_mT is not None


def test_dimension_cap_env_override(monkeypatch):
    nuclei = tuple(Nucleus(f"H{i}", 2, AX, "A") for i in range(5))
    monkeypatch.setenv("RPCOMPASS_DIM_CAP", "64")
    assert dimension_cap() == 64
    with pytest.raises(DimensionCapError):
        SpinSystem("big", nuclei, 1.0, 1.0)
    monkeypatch.setenv("RPCOMPASS_DIM_CAP", "128")
    assert SpinSystem("big", nuclei, 1.0, 1.0).dim == 128
    monkeypatch.setenv("RPCOMPASS_DIM_CAP", "three")
    with pytest.raises(ValueError):
        dimension_cap()


def test_field_orientation_normalizes_angles():
    f = FieldOrientation(0.05, math.pi / 3, 2.5 * math.pi)
    assert f.phi == pytest.approx(0.5 * math.pi)
    npt.assert_allclose(np.linalg.norm(f.unit_vector), 1.0, atol=1e-15)
    npt.assert_allclose(f.field_mT, 0.05 * f.unit_vector, atol=1e-18)
    with pytest.raises(ValueError):
        FieldOrientation(-0.05, 0.0)
    with pytest.raises(ValueError):
        FieldOrientation(0.05, 3.5)
    # zero field is a legitimate reference point
    assert FieldOrientation(0.0, 1.0).b0_mT == 0.0


def test_hyperfine_strength_is_spectral():
    n = Nucleus("N", 3, np.diag([-2.0, 0.5, 1.0]), "A")
    assert hyperfine_strength(n) == pytest.approx(2.0)


def test_rank_and_truncate_orders_by_strength():
    nuclei = (
        Nucleus("weak", 2, 0.1 * AX, "A"),
        Nucleus("strong", 2, 2.0 * AX, "B"),
        Nucleus("mid", 2, 0.5 * AX, "A"),
    )
    s = SpinSystem("s", nuclei, 1.0, 1.0)
    top2 = rank_and_truncate(s, 2)
    assert tuple(n.label for n in top2.nuclei) == ("strong", "mid")
    # idempotent: truncating the truncation changes nothing
    assert rank_and_truncate(top2, 2) == top2
    assert rank_and_truncate(s, 0).nuclei == ()
    with pytest.raises(ValueError):
        rank_and_truncate(s, 4)
    with pytest.raises(ValueError):
        rank_and_truncate(s, -1)


def test_rank_and_truncate_tie_goes_to_first():
    nuclei = (
        Nucleus("a", 2, AX, "A"),
        Nucleus("b", 2, AX, "B"),
    )
    s = SpinSystem("s", nuclei, 1.0, 1.0)
    assert rank_and_truncate(s, 1).nuclei[0].label == "a"


def test_average_conformers_weights_tensors():
    first = SpinSystem(
        "c1", (Nucleus("N", 3, AX, "A"),), 1.0, 1.0, eed_mT=np.diag([0.1, 0.1, -0.2])
    )
    second = SpinSystem("c2", (Nucleus("H", 2, 2.0 * AX, "B"),), 1.0, 1.0)
    avg = average_conformers(first, second, weight=0.25)
    assert len(avg.nuclei) == 2
    npt.assert_allclose(avg.nuclei[0].hyperfine_mT, 0.25 * AX)
    npt.assert_allclose(avg.nuclei[1].hyperfine_mT, 1.5 * AX)
    npt.assert_allclose(avg.eed_mT, 0.25 * np.diag([0.1, 0.1, -0.2]))
    with pytest.raises(ValueError):
        average_conformers(first, second, weight=1.0)
    mismatched = dataclasses.replace(second, k_b=2.0)
    with pytest.raises(ValueError):
        average_conformers(first, mismatched)


def test_system_equality_ignores_nothing():
    a = SpinSystem("s", (Nucleus("N", 3, AX, "A"),), 1.0, 1.0)
    b = SpinSystem("s", (Nucleus("N", 3, AX, "A"),), 1.0, 1.0)
    assert a == b
    assert a != dataclasses.replace(a, k_f=2.0)

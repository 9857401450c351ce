"""Radical-pair system descriptions.

A system is two electron spins (radicals A and B), each optionally coupled to
its own nuclei through 3x3 hyperfine tensors, plus an optional electron-electron
dipolar tensor and the two Haberkorn rates: k_b removes singlet population
(recombination), k_f removes everything (escape).  Tensors and fields are
stored in mT and converted to angular frequency only when a Hamiltonian is
built.

Site ordering is fixed globally: electron A, electron B, nuclei of A in list
order, nuclei of B in list order.  Everything downstream (embedding, partial
traces, vectorization) relies on it.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass

import numpy as np

from .constants import DEFAULT_G_FACTOR

DEFAULT_DIM_CAP = 4096
DIM_CAP_ENV = "RPCOMPASS_DIM_CAP"


class DimensionCapError(ValueError):
    """Raised when a system's Hilbert dimension exceeds the configured cap."""


def dimension_cap() -> int:
    """Current Hilbert-dimension cap (override with RPCOMPASS_DIM_CAP)."""
    raw = os.environ.get(DIM_CAP_ENV)
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"{DIM_CAP_ENV} must be an integer, got {raw!r}") from None
    if cap < 4:
        raise ValueError(f"{DIM_CAP_ENV} must be at least 4, got {cap}")
    return cap


def _as_tensor(value, name: str) -> np.ndarray:
    t = np.asarray(value, dtype=float)
    if t.shape != (3, 3):
        raise ValueError(f"{name} must be a 3x3 matrix, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError(f"{name} must be finite")
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class Nucleus:
    """One nuclear spin: label, multiplicity 2S+1, hyperfine tensor in mT,
    and the radical (A or B) whose electron it couples to."""

    label: str
    multiplicity: int
    hyperfine_mT: np.ndarray
    radical: str

    def __post_init__(self):
        if not isinstance(self.multiplicity, int) or self.multiplicity < 2:
            raise ValueError(
                f"multiplicity must be an integer >= 2, got {self.multiplicity!r}"
            )
        if self.radical not in ("A", "B"):
            raise ValueError(f"radical must be 'A' or 'B', got {self.radical!r}")
        object.__setattr__(
            self, "hyperfine_mT", _as_tensor(self.hyperfine_mT, f"hyperfine of {self.label}")
        )

    def __eq__(self, other):
        if not isinstance(other, Nucleus):
            return NotImplemented
        return (
            self.label == other.label
            and self.multiplicity == other.multiplicity
            and self.radical == other.radical
            and np.array_equal(self.hyperfine_mT, other.hyperfine_mT)
        )


@dataclass(frozen=True)
class SpinSystem:
    """Immutable description of a radical pair.

    Rates are in us^-1 and must be positive; k_f > 0 is also what keeps the
    steady-state equations non-singular.  The electron-electron dipolar tensor
    (eed_mT), when present, must be symmetric and traceless.
    """

    name: str
    nuclei: tuple[Nucleus, ...]
    k_b: float
    k_f: float
    eed_mT: np.ndarray | None = None
    g_factor: float = DEFAULT_G_FACTOR

    def __post_init__(self):
        object.__setattr__(self, "nuclei", tuple(self.nuclei))
        if not all(isinstance(n, Nucleus) for n in self.nuclei):
            raise ValueError("nuclei must be Nucleus instances")
        if not (self.k_b > 0 and math.isfinite(self.k_b)):
            raise ValueError(f"k_b must be positive, got {self.k_b}")
        if not (self.k_f > 0 and math.isfinite(self.k_f)):
            raise ValueError(f"k_f must be positive, got {self.k_f}")
        if not (0 < self.g_factor < 10):
            raise ValueError(f"implausible g_factor {self.g_factor}")
        if self.eed_mT is not None:
            eed = _as_tensor(self.eed_mT, "eed")
            scale = max(np.linalg.norm(eed), 1e-30)
            if np.max(np.abs(eed - eed.T)) > 1e-10 * scale:
                raise ValueError("eed tensor must be symmetric")
            if abs(np.trace(eed)) > 1e-10 * scale:
                raise ValueError("eed tensor must be traceless")
            object.__setattr__(self, "eed_mT", eed)
        cap = dimension_cap()
        if self.dim > cap:
            raise DimensionCapError(
                f"Hilbert dimension {self.dim} exceeds cap {cap} "
                f"(set {DIM_CAP_ENV} to raise it)"
            )

    def __eq__(self, other):
        if not isinstance(other, SpinSystem):
            return NotImplemented
        same_eed = (
            (self.eed_mT is None and other.eed_mT is None)
            or (
                self.eed_mT is not None
                and other.eed_mT is not None
                and np.array_equal(self.eed_mT, other.eed_mT)
            )
        )
        return (
            self.name == other.name
            and self.nuclei == other.nuclei
            and self.k_b == other.k_b
            and self.k_f == other.k_f
            and self.g_factor == other.g_factor
            and same_eed
        )

    @property
    def z_nuclear(self) -> int:
        """Dimension of the nuclear subspace (product of multiplicities)."""
        z = 1
        for n in self.nuclei:
            z *= n.multiplicity
        return z

    @property
    def dim(self) -> int:
        return 4 * self.z_nuclear

    @property
    def site_dims(self) -> tuple[int, ...]:
        """Local dimensions in global site order (elA, elB, A-nuclei, B-nuclei)."""
        a = tuple(n.multiplicity for n in self.nuclei if n.radical == "A")
        b = tuple(n.multiplicity for n in self.nuclei if n.radical == "B")
        return (2, 2) + a + b

    def nucleus_site(self, index: int) -> int:
        """Site index (in site_dims) of nuclei[index]."""
        nuc = self.nuclei[index]
        n_a = sum(1 for n in self.nuclei if n.radical == "A")
        before = sum(
            1 for n in self.nuclei[:index] if n.radical == nuc.radical
        )
        return 2 + before if nuc.radical == "A" else 2 + n_a + before


@dataclass(frozen=True)
class FieldOrientation:
    """Applied magnetic field: magnitude in mT, polar and azimuthal angles in
    radians.  phi is normalized into [0, 2pi); theta must lie in [0, pi]."""

    b0_mT: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (self.b0_mT >= 0 and math.isfinite(self.b0_mT)):
            raise ValueError(f"b0 must be >= 0 mT, got {self.b0_mT}")
        if not (-1e-12 <= self.theta <= math.pi + 1e-12):
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "theta", min(max(self.theta, 0.0), math.pi))
        if not math.isfinite(self.phi):
            raise ValueError(f"phi must be finite, got {self.phi}")
        object.__setattr__(self, "phi", self.phi % (2.0 * math.pi))

    @property
    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array(
            [st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)]
        )

    @property
    def field_mT(self) -> np.ndarray:
        """Cartesian field vector in mT."""
        return self.b0_mT * self.unit_vector


def hyperfine_strength(nucleus: Nucleus) -> float:
    """Largest-magnitude eigenvalue of the hyperfine tensor, in mT."""
    return float(np.max(np.abs(np.linalg.eigvals(nucleus.hyperfine_mT))))


def rank_and_truncate(system: SpinSystem, n_keep: int) -> SpinSystem:
    """Keep the n_keep nuclei with the strongest hyperfine coupling.

    Strength is the largest-magnitude tensor eigenvalue; kept nuclei retain
    their original relative order, and ties go to the earlier list index, so
    the operation is deterministic and idempotent.
    """
    total = len(system.nuclei)
    if not isinstance(n_keep, int) or not (0 <= n_keep <= total):
        raise ValueError(f"n_keep must lie in [0, {total}], got {n_keep!r}")
    scores = [hyperfine_strength(n) for n in system.nuclei]
    ranked = sorted(range(total), key=lambda i: (-scores[i], i))
    kept = sorted(ranked[:n_keep])
    return dataclasses.replace(
        system, nuclei=tuple(system.nuclei[i] for i in kept)
    )


def average_conformers(
    first: SpinSystem, second: SpinSystem, weight: float = 0.5
) -> SpinSystem:
    """Combine two conformations of the same radical pair into one system.

    Each nucleus's tensor is scaled by its conformer's residence weight and
    the nucleus lists are concatenated; dipolar tensors are averaged with the
    same weights.  Rates and g-factor must agree between the conformers.
    """
    if not (0.0 < weight < 1.0):
        raise ValueError(f"weight must lie in (0, 1), got {weight}")
    if (first.k_b, first.k_f, first.g_factor) != (
        second.k_b,
        second.k_f,
        second.g_factor,
    ):
        raise ValueError("conformers must share rates and g_factor")
    w1, w2 = weight, 1.0 - weight

    def scaled(nuclei, w):
        return tuple(
            dataclasses.replace(n, hyperfine_mT=w * n.hyperfine_mT) for n in nuclei
        )

    e1 = first.eed_mT if first.eed_mT is not None else np.zeros((3, 3))
    e2 = second.eed_mT if second.eed_mT is not None else np.zeros((3, 3))
    eed = w1 * e1 + w2 * e2
    if first.eed_mT is None and second.eed_mT is None:
        eed = None
    return SpinSystem(
        name=f"{first.name}+{second.name}",
        nuclei=scaled(first.nuclei, w1) + scaled(second.nuclei, w2),
        k_b=first.k_b,
        k_f=first.k_f,
        eed_mT=eed,
        g_factor=first.g_factor,
    )

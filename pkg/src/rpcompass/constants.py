"""Physical constants and unit conversions.

Internal unit system: angular frequency in rad us^-1, time in us, magnetic
fields and coupling tensors in mT, distances in nm.  The one conversion used
throughout is the electron gyromagnetic ratio

    gamma = g * mu_B / hbar   (expressed in rad us^-1 mT^-1)

so a tensor given in mT enters a Hamiltonian as gamma * tensor.
"""

# CODATA 2018
BOHR_MAGNETON = 9.2740100783e-24  # J / T
HBAR = 1.054571817e-34            # J s
MU0_OVER_4PI = 1e-7               # T^2 m^3 / J

# g-factor of a typical organic radical (flavin/tryptophan-like)
DEFAULT_G_FACTOR = 2.0013


def gyromagnetic_ratio_mT(g_factor: float = DEFAULT_G_FACTOR) -> float:
    """Electron gyromagnetic ratio in rad us^-1 mT^-1.

    About 176.0 rad us^-1 mT^-1 for g = 2.0013, i.e. a Larmor angular
    frequency of 8.80 rad us^-1 in a 0.05 mT (geomagnetic-scale) field.
    """
    # 1e-3 (T -> mT) times 1e-6 (s^-1 -> us^-1)
    return g_factor * BOHR_MAGNETON / HBAR * 1e-9


def dipolar_prefactor_mT_nm3(g_factor: float = DEFAULT_G_FACTOR) -> float:
    """Point-dipole coupling strength d(r) * r^3 in mT nm^3.

    d(r) = (mu0/4pi) gamma^2 hbar / r^3 is an angular frequency; dividing by
    gamma once more expresses it in field units, leaving
    (mu0/4pi) g mu_B / r^3.  About 1.856 mT nm^3 for g = 2.0013.
    """
    # 1e3 (T -> mT) times 1e27 (m^-3 -> nm^-3)
    return MU0_OVER_4PI * g_factor * BOHR_MAGNETON * 1e30

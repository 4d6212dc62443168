"""Physical constants (CODATA 2018) and the unit conversions used everywhere.

All public APIs work in SI units, with energies also accepted in eV:
frequencies in rad/s, wavenumbers in 1/m, temperatures in K, lengths in m,
forces in N.  Both J-based and eV-based variants of hbar and k_B are stored
so hot loops never convert through the elementary charge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 constants plus the graphene Fermi-velocity ratio.

    c in m/s, hbar in J*s (hbar_ev in eV*s), k_B in J/K (k_B_ev in eV/K),
    alpha_fs dimensionless, v_F_ratio = v_F/c dimensionless.
    """

    c: float = 299_792_458.0
    hbar: float = 1.054_571_817e-34
    hbar_ev: float = 6.582_119_569e-16
    k_B: float = 1.380_649e-23
    k_B_ev: float = 8.617_333_262e-5
    alpha_fs: float = 7.297_352_5693e-3
    v_F_ratio: float = 1.0 / 300.0

    @property
    def ev(self) -> float:
        """One electronvolt in joules."""
        return self.hbar / self.hbar_ev

    @property
    def hbar_c_ev(self) -> float:
        """hbar*c in eV*m."""
        return self.hbar_ev * self.c


CODATA2018 = PhysicalConstants()


def ev_to_angular_frequency(energy_ev: float, const: PhysicalConstants = CODATA2018) -> float:
    """Convert an energy in eV to an angular frequency E/hbar in rad/s."""
    if energy_ev < 0.0:
        raise ValueError(f"energy must be nonnegative, got {energy_ev} eV")
    return energy_ev / const.hbar_ev


def angular_frequency_to_ev(omega: float, const: PhysicalConstants = CODATA2018) -> float:
    """Convert an angular frequency in rad/s to hbar*omega in eV."""
    return omega * const.hbar_ev


def matsubara_frequency(l: int, temperature: float, const: PhysicalConstants = CODATA2018) -> float:
    """Matsubara frequency xi_l = 2 pi k_B T l / hbar in rad/s.

    l must be a nonnegative integer and temperature positive.
    """
    if l < 0 or l != int(l):
        raise ValueError(f"Matsubara index must be a nonnegative integer, got {l}")
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature} K")
    return 2.0 * math.pi * const.k_B * temperature * l / const.hbar


def thermal_length(temperature: float, const: PhysicalConstants = CODATA2018) -> float:
    """Thermal wavelength hbar*c/(k_B*T) in m (about 7.6 um at 300 K)."""
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature} K")
    return const.hbar * const.c / (const.k_B * temperature)

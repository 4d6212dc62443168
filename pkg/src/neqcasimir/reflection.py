"""TM/TE reflection coefficients of a free-standing gapped graphene sheet.

Built from the reduced polarization pair (Pi_00/hbar, Pi/hbar); the hbar
of the textbook formulas cancels against the reduction, so no physical
constants enter the hot loop beyond the wavenumbers themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import CODATA2018, PhysicalConstants
from .polarization import GrapheneSheet, ReducedPolarization, eval_imaginary_freq
from .quadrature import QuadratureSpec

__all__ = ["ReflectionPair", "SingularResponseError", "reflection_real",
           "reflection_matsubara", "reflection_from_polarization"]

# A vanishing reflection denominator signals a surface-mode pole on the
# integration path; it must be routed around with breakpoints, not clamped.
_DENOM_FLOOR = 1e-300


class SingularResponseError(ZeroDivisionError):
    """A reflection denominator vanished at the given (omega, k)."""

    def __init__(self, polarization_name: str, omega, k):
        super().__init__(
            f"singular {polarization_name} response denominator at "
            f"(omega={omega!r}, k={k:.6e} 1/m)")
        self.omega = omega
        self.k = k


@dataclass(frozen=True)
class ReflectionPair:
    """TM and TE reflection amplitudes (dimensionless, complex)."""

    r_tm: complex
    r_te: complex


def reflection_from_polarization(omega, k: float, q: float,
                                 pol: ReducedPolarization) -> ReflectionPair:
    """Evaluate both reflection amplitudes from a polarization pair.

    r_TM = q*pi00 / (2k^2 + q*pi00), r_TE = -pi / (2k^2 q + pi).
    """
    k2 = 2.0 * k * k
    den_tm = k2 + q * pol.pi00
    if abs(den_tm) < _DENOM_FLOOR:
        raise SingularResponseError("TM", omega, k)
    den_te = k2 * q + pol.pi
    if abs(den_te) < _DENOM_FLOOR:
        raise SingularResponseError("TE", omega, k)
    return ReflectionPair(r_tm=q * pol.pi00 / den_tm, r_te=-pol.pi / den_te)


def reflection_real(omega: float, k: float, pol: ReducedPolarization,
                    const: PhysicalConstants = CODATA2018) -> ReflectionPair:
    """Reflection amplitudes at a real evanescent point (k > omega/c)."""
    if k <= omega / const.c:
        raise ValueError(
            f"propagating-wave input rejected: k={k:.6e} <= omega/c={omega / const.c:.6e}")
    q = math.sqrt(k * k - (omega / const.c) ** 2)
    return reflection_from_polarization(omega, k, q, pol)


def reflection_matsubara(l: int, k: float, sheet: GrapheneSheet, t_env: float,
                         const: PhysicalConstants = CODATA2018,
                         spec: QuadratureSpec | None = None) -> ReflectionPair:
    """Reflection amplitudes at the Matsubara point omega = i*xi_l.

    Real-valued: r_tm in [0, 1] and r_te in [-1, 0] since the reduced
    polarization is nonnegative on the imaginary frequency axis.
    """
    pol = eval_imaginary_freq(l, k, sheet, t_env, const, spec)
    xi = 2.0 * math.pi * const.k_B * t_env * l / const.hbar
    q_l = math.hypot(k, xi / const.c)
    return reflection_from_polarization(complex(0.0, xi), k, q_l, pol)

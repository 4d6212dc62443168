"""Nonequilibrium Casimir-Polder force on a nanoparticle above gapped graphene.

Library plus batch CLI computing the dispersion force between a small
spherical nanoparticle at the environmental temperature and a free-standing
gapped graphene sheet held at a different temperature.  The force splits
into a Matsubara-sum part and an evanescent-wave real-frequency part; both
consume the TM/TE reflection coefficients of the sheet built from the
polarization tensor of gapped graphene.
"""

from .constants import (
    CODATA2018,
    PhysicalConstants,
    ev_to_angular_frequency,
    matsubara_frequency,
    thermal_length,
)
from .force import (
    ForceBreakdown,
    Nanoparticle,
    Scenario,
    f_classical,
    f_equilibrium,
    f_evanescent,
    f_matsubara,
    f_nonequilibrium,
    static_polarizability,
    theta_factor,
)
from .polarization import (
    GrapheneSheet,
    Kinematics,
    ReducedPolarization,
    Region,
    classify,
    eval_evanescent,
    eval_imaginary_freq,
    phi,
    psi,
)
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    QuadResult,
    integrate_adaptive,
    integrate_de,
    integrate_semi_infinite,
    sum_matsubara,
)
from .reflection import ReflectionPair, reflection_matsubara, reflection_real

__all__ = [
    "CODATA2018",
    "PhysicalConstants",
    "ev_to_angular_frequency",
    "matsubara_frequency",
    "thermal_length",
    "GrapheneSheet",
    "Kinematics",
    "ReducedPolarization",
    "Region",
    "classify",
    "eval_evanescent",
    "eval_imaginary_freq",
    "phi",
    "psi",
    "ReflectionPair",
    "reflection_matsubara",
    "reflection_real",
    "QuadratureError",
    "QuadratureSpec",
    "QuadResult",
    "integrate_adaptive",
    "integrate_de",
    "integrate_semi_infinite",
    "sum_matsubara",
    "ForceBreakdown",
    "Nanoparticle",
    "Scenario",
    "f_classical",
    "f_equilibrium",
    "f_evanescent",
    "f_matsubara",
    "f_nonequilibrium",
    "static_polarizability",
    "theta_factor",
]

__version__ = "0.1.0"

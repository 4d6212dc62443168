"""Force assembly: classical limit, Matsubara and evanescent contributions.

The nonequilibrium dispersion force on a nanoparticle at the environmental
temperature above a graphene sheet at temperature T_g splits as
F_neq = F_M + F_r: a Matsubara sum evaluated at the environmental
frequencies but with the sheet's occupation temperature, plus a real
frequency integral fed by evanescent waves only.  Forces are in newtons;
negative values point toward the sheet (attraction).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import CODATA2018, PhysicalConstants, matsubara_frequency, thermal_length
from .polarization import GrapheneSheet, eval_evanescent, eval_imaginary_freq
from .quadrature import (
    QuadratureSpec,
    integrate_adaptive,
    integrate_semi_infinite,
    sum_matsubara,
)
from .reflection import reflection_from_polarization

__all__ = [
    "Nanoparticle",
    "Scenario",
    "ForceBreakdown",
    "Tolerances",
    "ForceConvergenceError",
    "static_polarizability",
    "theta_factor",
    "f_classical",
    "f_matsubara",
    "f_evanescent",
    "f_equilibrium",
    "f_nonequilibrium",
]

# Dirac-model validity: hard floor and soft (warn) floor on the separation.
_HARD_MIN_SEPARATION = 100e-9
_SOFT_MIN_SEPARATION = 200e-9


class ForceConvergenceError(RuntimeError):
    """A force quadrature or summation failed to converge."""

    def __init__(self, stage: str, detail: str):
        super().__init__(f"{stage}: {detail}")
        self.stage = stage
        self.detail = detail


@dataclass(frozen=True)
class Nanoparticle:
    """Spherical nanoparticle: radius in m, material 'metal' or 'dielectric'.

    Dielectric particles carry a static permittivity eps0 >= 1.
    """

    radius: float
    material: str = "metal"
    eps0: float | None = None

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius} m")
        if self.material not in ("metal", "dielectric"):
            raise ValueError(f"material must be 'metal' or 'dielectric', got {self.material!r}")
        if self.material == "dielectric":
            if self.eps0 is None or not self.eps0 >= 1.0:
                raise ValueError(f"dielectric particles need eps0 >= 1, got {self.eps0}")
        elif self.eps0 is not None:
            raise ValueError("eps0 is only meaningful for dielectric particles")


@dataclass(frozen=True)
class Scenario:
    """One force evaluation point: separation, sheet, particle, T_E."""

    separation: float
    sheet: GrapheneSheet
    particle: Nanoparticle
    environment_temp: float = 300.0

    def __post_init__(self):
        if self.separation < _HARD_MIN_SEPARATION:
            raise ValueError(
                f"separation {self.separation:.3e} m is below the {_HARD_MIN_SEPARATION:.0e} m "
                "validity floor of the sheet response model")
        if self.separation < _SOFT_MIN_SEPARATION:
            warnings.warn(
                f"separation {self.separation:.3e} m is below the validated "
                f"{_SOFT_MIN_SEPARATION:.0e} m range", stacklevel=2)
        if self.environment_temp <= 0.0:
            raise ValueError(f"environment temperature must be positive, "
                             f"got {self.environment_temp} K")


@dataclass(frozen=True)
class Tolerances:
    """Relative tolerances of the nested quadrature levels."""

    inner: float = 1e-8       # polarization occupation integrals
    wavevector: float = 1e-7  # k (wavevector) integral
    frequency: float = 1e-6   # outer frequency integral
    matsubara: float = 1e-6   # Matsubara sum


@dataclass(frozen=True)
class ForceBreakdown:
    """All force contributions at one grid point, in newtons.

    Ratios are taken against the classical limit f_c (negative), so
    attractive contributions have positive ratios.  l_max is the highest
    Matsubara index the sum visited.
    """

    f_m: float
    f_r: float
    f_neq: float
    f_eq: float
    f_c: float
    ratio_fm: float
    ratio_fr: float
    ratio_fneq: float
    ratio_feq: float
    l_max: int


def static_polarizability(particle: Nanoparticle) -> float:
    """Static polarizability alpha(0) in m^3: R^3 for metal,
    R^3 (eps0-1)/(eps0+1) for dielectric."""
    r3 = particle.radius ** 3
    if particle.material == "metal":
        return r3
    if math.isinf(particle.eps0):
        return r3
    return r3 * (particle.eps0 - 1.0) / (particle.eps0 + 1.0)


def theta_factor(omega, t_env: float, t_g: float,
                 const: PhysicalConstants = CODATA2018):
    """Difference of Bose-Einstein occupations at T_E and T_g (Eq. form
    1/(e^{hw/kT_E}-1) - 1/(e^{hw/kT_g}-1)); positive for T_g < T_E.

    Accepts scalars or arrays; omega = 0 is rejected (both occupations
    diverge).
    """
    om = np.asarray(omega, dtype=float)
    if np.any(om <= 0.0):
        raise ValueError("theta_factor requires omega > 0")
    if t_env <= 0.0 or t_g <= 0.0:
        raise ValueError("temperatures must be positive")

    def occupation(x):
        e = np.exp(-x)
        return e / (1.0 - e)

    scale = const.hbar / const.k_B
    out = occupation(scale * om / t_env) - occupation(scale * om / t_g)
    return out if out.ndim else float(out)


def f_classical(separation: float, temperature: float, alpha0: float,
                const: PhysicalConstants = CODATA2018) -> float:
    """Classical-limit equilibrium force above an ideal metal plane:
    -3 k_B T alpha(0) / (4 a^4)."""
    if separation <= 0.0 or temperature <= 0.0:
        raise ValueError("separation and temperature must be positive")
    return -3.0 * const.k_B * temperature * alpha0 / (4.0 * separation ** 4)


def _matsubara_term_integral(l: int, scenario: Scenario, const: PhysicalConstants,
                             tol: Tolerances) -> float:
    """The k-integral of one Matsubara term, in the q variable (k dk = q dq)."""
    a = scenario.separation
    sheet = scenario.sheet
    t_env = scenario.environment_temp
    c = const.c
    xi = matsubara_frequency(l, t_env, const)
    xi_c = xi / c
    inner_spec = QuadratureSpec(rel_tol=tol.inner)

    def integrand(qvals):
        out = np.empty_like(qvals)
        for i, q in enumerate(qvals):
            k2 = (q - xi_c) * (q + xi_c)
            k = math.sqrt(k2) if k2 > 0.0 else 0.0
            if k == 0.0:
                out[i] = 0.0
                continue
            pol = eval_imaginary_freq(l, k, sheet, t_env, const, inner_spec)
            refl = reflection_from_polarization(complex(0.0, xi), k, q, pol)
            bracket = ((2.0 * q * q * c * c - xi * xi) * refl.r_tm.real
                       - xi * xi * refl.r_te.real)
            out[i] = q * math.exp(-2.0 * a * q) * bracket
        return out

    res = integrate_semi_infinite(integrand, xi_c, 0.5 / a,
                                  QuadratureSpec(rel_tol=tol.wavevector))
    if not res.converged:
        raise ForceConvergenceError(
            "matsubara wavevector integral",
            f"l={l}: error {res.error_estimate:.3e} on value {res.value:.6e}")
    return float(res.value)


def _f_matsubara_detailed(scenario: Scenario, const: PhysicalConstants,
                          tol: Tolerances) -> tuple[float, int]:
    alpha0 = static_polarizability(scenario.particle)
    t_env = scenario.environment_temp
    # decay scale of exp(-2 a xi_l / c) in l; terms must decay past 10x this
    l_scale = const.hbar * const.c / (4.0 * math.pi * const.k_B * t_env
                                      * scenario.separation)
    res = sum_matsubara(
        lambda l: _matsubara_term_integral(l, scenario, const, tol),
        QuadratureSpec(rel_tol=tol.matsubara),
        max_terms=max(200, int(50.0 * l_scale)),
        divergence_check_at=max(8, math.ceil(10.0 * l_scale)))
    if not res.converged:
        raise ForceConvergenceError(
            "matsubara sum", f"tail bound {res.error_estimate:.3e} after "
            f"{res.evaluations} terms")
    pref = -2.0 * const.k_B * t_env * alpha0 / (const.c * const.c)
    return pref * res.value, res.evaluations - 1


def f_matsubara(scenario: Scenario, const: PhysicalConstants = CODATA2018,
                tol: Tolerances = Tolerances()) -> float:
    """Matsubara-sum contribution F_M in N; always negative (attractive)."""
    return _f_matsubara_detailed(scenario, const, tol)[0]


def f_equilibrium(scenario: Scenario, const: PhysicalConstants = CODATA2018,
                  tol: Tolerances = Tolerances()) -> float:
    """Equilibrium force: the Matsubara expression with T_g set to T_E."""
    sheet = scenario.sheet
    eq_sheet = GrapheneSheet(delta=sheet.delta, temperature=scenario.environment_temp,
                             v_f_ratio=sheet.v_f_ratio)
    eq = Scenario(separation=scenario.separation, sheet=eq_sheet,
                  particle=scenario.particle,
                  environment_temp=scenario.environment_temp)
    return f_matsubara(eq, const, tol)


def _evanescent_wavevector_integral(omega: float, scenario: Scenario,
                                    const: PhysicalConstants, tol: Tolerances) -> float:
    """Inner integral of the evanescent contribution at one frequency.

    Integrates q exp(-2aq) Im{(2 q^2 c^2 + w^2) r_TM + w^2 r_TE} over the
    evanescent range, in the q variable, with breakpoints at the interval
    boundary and at the gap curve hbar c p = Delta.  Below the gap
    threshold the whole plasmonic interval has exactly zero imaginary
    parts and is skipped.
    """
    a = scenario.separation
    sheet = scenario.sheet
    c = const.c
    vfr = sheet.v_f_ratio
    om_c = omega / c
    inner_spec = QuadratureSpec(rel_tol=tol.inner)
    q_boundary = om_c * math.sqrt(1.0 / (vfr * vfr) - 1.0)
    omega_gap = sheet.delta / const.hbar_ev
    breakpoints = [q_boundary]
    gap_floor = omega_gap / math.sqrt(1.0 - vfr * vfr)
    if omega > gap_floor:
        k_gap2 = (omega * omega - omega_gap * omega_gap) / (vfr * c) ** 2
        q_gap2 = k_gap2 - om_c * om_c
        if q_gap2 > 0.0:
            breakpoints.append(math.sqrt(q_gap2))
        q_start = 0.0
    else:
        # Im Pi vanishes identically on the whole plasmonic interval here
        # (the gap gate), so the integrand is exactly zero below q_boundary.
        q_start = q_boundary

    def integrand(qvals):
        out = np.empty_like(qvals)
        for i, q in enumerate(qvals):
            k = math.hypot(q, om_c)
            pol = eval_evanescent(omega, k, sheet, const, inner_spec)
            refl = reflection_from_polarization(omega, k, q, pol)
            bracket = ((2.0 * q * q * c * c + omega * omega) * refl.r_tm.imag
                       + omega * omega * refl.r_te.imag)
            out[i] = q * math.exp(-2.0 * a * q) * bracket
        return out

    spec_k = QuadratureSpec(rel_tol=tol.wavevector,
                            breakpoints=tuple(p for p in breakpoints if p > q_start))
    res = integrate_semi_infinite(integrand, q_start, 0.5 / a, spec_k)
    if not res.converged:
        raise ForceConvergenceError(
            "evanescent wavevector integral",
            f"omega={omega:.6e}: error {res.error_estimate:.3e} "
            f"on value {res.value:.6e}")
    return float(res.value)


def f_evanescent(scenario: Scenario, const: PhysicalConstants = CODATA2018,
                 tol: Tolerances = Tolerances()) -> float:
    """Real-frequency (evanescent-wave) contribution F_r in N.

    Zero at T_g = T_E; may take either sign out of equilibrium.  The lower
    frequency cutoff is pushed down until halving it moves the result by
    less than a tenth of the frequency tolerance.
    """
    sheet = scenario.sheet
    t_env = scenario.environment_temp
    t_g = sheet.temperature
    alpha0 = static_polarizability(scenario.particle)

    def g(omegas):
        out = np.empty_like(omegas)
        for i, om in enumerate(omegas):
            th = theta_factor(om, t_env, t_g, const)
            # exact IEEE zero (equal occupations): the finite inner
            # integral cannot contribute
            out[i] = 0.0 if th == 0.0 else th * _evanescent_wavevector_integral(
                om, scenario, const, tol)
        return out

    scale_w = const.k_B * max(t_env, t_g) / const.hbar
    omega_gap = sheet.delta / const.hbar_ev
    spec_w = QuadratureSpec(rel_tol=tol.frequency)
    omega_min = 1e-4 * scale_w
    bps = [omega_gap, omega_gap / math.sqrt(1.0 - sheet.v_f_ratio ** 2),
           const.k_B * t_env / const.hbar, const.k_B * t_g / const.hbar]
    main = integrate_semi_infinite(
        g, omega_min, scale_w, spec_w.with_breakpoints([b for b in bps if b > omega_min]))
    if not main.converged:
        raise ForceConvergenceError(
            "evanescent frequency integral",
            f"error {main.error_estimate:.3e} on value {main.value:.6e}")
    total = main.value
    # push the lower cutoff down until it is demonstrably immaterial
    low_spec = QuadratureSpec(rel_tol=1e-3, abs_tol=1e-300)
    for _ in range(60):
        piece = integrate_adaptive(g, 0.5 * omega_min, omega_min, low_spec)
        total = total + piece.value
        if abs(piece.value) <= 0.1 * tol.frequency * abs(total):
            break
        omega_min *= 0.5
    else:
        raise ForceConvergenceError(
            "evanescent frequency integral",
            f"lower cutoff did not stabilize (last piece {piece.value:.3e} "
            f"at omega_min={omega_min:.3e})")
    pref = 2.0 * const.hbar * alpha0 / (math.pi * const.c * const.c)
    return pref * float(total)


def _validity_warnings(scenario: Scenario, const: PhysicalConstants) -> None:
    r = scenario.particle.radius
    if r / scenario.separation > 0.1:
        warnings.warn(
            f"radius/separation = {r / scenario.separation:.2f} strains the "
            "point-particle (static polarizability) treatment", stacklevel=3)
    t_hot = max(scenario.environment_temp, scenario.sheet.temperature)
    if r > 0.1 * thermal_length(t_hot, const):
        warnings.warn(
            f"radius {r:.2e} m is not small against the thermal length at "
            f"{t_hot} K", stacklevel=3)


def f_nonequilibrium(scenario: Scenario, const: PhysicalConstants = CODATA2018,
                     tol: Tolerances = Tolerances()) -> ForceBreakdown:
    """All force contributions and their ratios to the classical limit.

    f_neq = f_m + f_r holds exactly (same floating-point sum).
    """
    _validity_warnings(scenario, const)
    alpha0 = static_polarizability(scenario.particle)
    f_m, l_max = _f_matsubara_detailed(scenario, const, tol)
    f_r = f_evanescent(scenario, const, tol)
    f_eq = f_equilibrium(scenario, const, tol)
    f_c = f_classical(scenario.separation, scenario.environment_temp, alpha0, const)
    f_neq = f_m + f_r
    return ForceBreakdown(
        f_m=f_m, f_r=f_r, f_neq=f_neq, f_eq=f_eq, f_c=f_c,
        ratio_fm=f_m / f_c, ratio_fr=f_r / f_c, ratio_fneq=f_neq / f_c,
        ratio_feq=f_eq / f_c, l_max=l_max)

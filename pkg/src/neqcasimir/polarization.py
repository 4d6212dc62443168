"""Reduced polarization tensor of gapped graphene for evanescent waves.

Evaluates (Pi_00/hbar, Pi/hbar) of a free-standing graphene sheet with
mass-gap parameter Delta = 2 m v_F^2 at real frequencies in the evanescent
region k > omega/c and at pure imaginary Matsubara frequencies.  The
evanescent region splits at k = omega/v_F into a plasmonic interval
(omega/c < k < omega/v_F) and an outer interval (k > omega/v_F); the
zero-temperature parts and the thermal corrections take different closed
and integral forms on the two intervals.

Units: pi00 stores Pi_00/hbar in 1/m, pi stores Pi/hbar in 1/m^3;
frequencies in rad/s, wavenumbers in 1/m, the gap in eV.  All operations
are pure functions; results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import CODATA2018, PhysicalConstants
from .quadrature import QuadratureSpec, QuadResult, integrate_adaptive

__all__ = [
    "Region",
    "GrapheneSheet",
    "Kinematics",
    "ThermalIntegrandParams",
    "ReducedPolarization",
    "PolarizationConvergenceError",
    "classify",
    "thermal_params",
    "phi",
    "psi",
    "zero_t_plasmonic",
    "zero_t_outer",
    "thermal_plasmonic",
    "thermal_outer",
    "eval_evanescent",
    "eval_imaginary_freq",
]

# Relative half-width |k v_F/omega - 1| below which a point is tagged as
# sitting on the interval boundary.
DEFAULT_BOUNDARY_BAND = 1e-9

# Below |hbar c p|/Delta = 1e-2 the closed forms for Phi and Psi lose
# digits to cancellation; the matched series (terms through the 5th) keep
# the switchover error under ~1e-12 relative on both sides.
SERIES_RADIUS = 1e-2
_SC = tuple(4.0 * m / (4.0 * m * m - 1.0) for m in range(1, 6))

# Occupation-factor window: 42 e-folds leave < 1e-18 of the weight beyond
# the cutoff; every truncated integral is re-checked on a doubled window.
_WINDOW = 42.0

# Square-root branch of the outer-interval thermal integrand where a
# lambda-term radicand goes negative: sqrt(r) = +i*sqrt|r| on the
# lambda = +1 term and the conjugate -i*sqrt|r| on the lambda = -1 term.
# The conjugate pairing keeps the static limit real and makes the
# imaginary parts vanish linearly as omega -> 0 (so the evanescent force
# integral converges at its lower end); the +i choice on the lambda = +1
# term sets Im R_TM/TE < 0 on the outer interval, matching the sign
# structure the force computation relies on (positive on the plasmonic
# interval, negative on the outer one).
_IP_PLUS = -1j   # 1/sqrt(r_{+1}) = _IP_PLUS / sqrt(|r|) on negative radicand
_IP_MINUS = +1j  # 1/sqrt(r_{-1}) = _IP_MINUS / sqrt(|r|)


class PolarizationConvergenceError(RuntimeError):
    """Quadrature for a polarization component failed to converge."""

    def __init__(self, message: str, omega: float, k: float):
        super().__init__(f"{message} at (omega={omega:.6e} rad/s, k={k:.6e} 1/m)")
        self.omega = omega
        self.k = k


class Region(Enum):
    PLASMONIC = "plasmonic"
    OUTER = "outer"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class GrapheneSheet:
    """Gapped graphene sheet: gap in eV, temperature in K, v_F/c ratio."""

    delta: float
    temperature: float
    v_f_ratio: float = CODATA2018.v_F_ratio

    def __post_init__(self):
        if self.delta < 0.0:
            raise ValueError(f"mass gap must be nonnegative, got {self.delta} eV")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature} K")
        if not 0.0 < self.v_f_ratio < 1.0:
            raise ValueError(f"v_F/c must lie in (0, 1), got {self.v_f_ratio}")


@dataclass(frozen=True)
class Kinematics:
    """One evanescent (omega, k) point with its derived wavenumbers.

    q2 = k^2 - omega^2/c^2 >= 0; p2 = (omega^2 - v_F^2 k^2)/c^2 is
    nonnegative on the plasmonic interval; ptilde2 = -p2 is positive on
    the outer interval.
    """

    omega: float
    k: float
    q2: float
    p2: float
    ptilde2: float
    region: Region


@dataclass(frozen=True)
class ThermalIntegrandParams:
    """Breakpoints and scales of the thermal integrands at one point.

    u_minus/u_plus are occupation-integral breakpoints in 1/m (NaN where
    A < 0 or on the outer interval), A = 1 - Delta^2/(hbar c p)^2 (signed
    through p^2, so negative past the gap curve and -inf on the boundary),
    beta = hbar c/(k_B T_g) in m, D = hbar c ptilde/(2 k_B T_g) (NaN on
    the plasmonic interval).
    """

    u_minus: float
    u_plus: float
    A: float
    beta: float
    D: float


@dataclass(frozen=True)
class ReducedPolarization:
    """Polarization pair: pi00 = Pi_00/hbar in 1/m, pi = Pi/hbar in 1/m^3."""

    pi00: complex
    pi: complex

    def __add__(self, other: "ReducedPolarization") -> "ReducedPolarization":
        return ReducedPolarization(self.pi00 + other.pi00, self.pi + other.pi)


def classify(omega: float, k: float, *, v_f_ratio: float = CODATA2018.v_F_ratio,
             boundary_band: float = DEFAULT_BOUNDARY_BAND,
             const: PhysicalConstants = CODATA2018) -> Kinematics:
    """Tag an evanescent (omega, k) point and compute its wavenumbers.

    Rejects propagating-wave input (k <= omega/c) and negative frequencies.
    """
    if omega < 0.0:
        raise ValueError(f"omega must be nonnegative, got {omega}")
    if k <= omega / const.c:
        raise ValueError(
            f"propagating-wave input rejected: k={k:.6e} <= omega/c={omega / const.c:.6e}")
    c = const.c
    v_f = v_f_ratio * c
    q2 = k * k - (omega / c) ** 2
    p2 = (omega * omega - (v_f * k) ** 2) / (c * c)
    if omega == 0.0:
        region = Region.OUTER
    else:
        ratio = k * v_f / omega
        if abs(ratio - 1.0) < boundary_band:
            region = Region.BOUNDARY
        elif ratio < 1.0:
            region = Region.PLASMONIC
        else:
            region = Region.OUTER
    return Kinematics(omega=omega, k=k, q2=q2, p2=p2, ptilde2=-p2, region=region)


def thermal_params(kin: Kinematics, sheet: GrapheneSheet,
                   const: PhysicalConstants = CODATA2018) -> ThermalIntegrandParams:
    """Breakpoints and scales entering the thermal integrals at this point."""
    beta = const.hbar * const.c / (const.k_B * sheet.temperature)
    v_f = sheet.v_f_ratio * const.c
    u_minus = u_plus = math.nan
    d_par = math.nan
    if kin.p2 >= 0.0:
        x_ev = const.hbar_c_ev * math.sqrt(kin.p2)
        if sheet.delta == 0.0:
            a_par = 1.0
        elif x_ev == 0.0:
            a_par = -math.inf
        else:
            a_par = 1.0 - (sheet.delta / x_ev) ** 2
        if a_par >= 0.0:
            root = v_f * kin.k * math.sqrt(a_par)
            u_minus = (kin.omega - root) / (2.0 * const.c)
            u_plus = (kin.omega + root) / (2.0 * const.c)
    else:
        a_par = math.nan
        xt_ev = const.hbar_c_ev * math.sqrt(kin.ptilde2)
        d_par = xt_ev / (2.0 * const.k_B_ev * sheet.temperature)
    return ThermalIntegrandParams(u_minus=u_minus, u_plus=u_plus, A=a_par,
                                  beta=beta, D=d_par)


def _fermi(t):
    """Occupation factor 1/(exp(t) + 1), overflow-safe for large t."""
    e = np.exp(-np.asarray(t, dtype=float))
    return e / (1.0 + e)


def phi(kin: Kinematics, delta: float, const: PhysicalConstants = CODATA2018) -> complex:
    """Interband response function Phi on the plasmonic interval, in eV.

    Complex with Im Phi = -(pi/2)*hcp*(1 + Delta^2/hcp^2) when
    hcp >= Delta, purely real below the gap.  At hcp == Delta exactly the
    real part is log-divergent and a non-finite value is returned; callers
    integrating across the gap curve split there instead of sampling it.
    """
    if kin.region is Region.OUTER:
        raise ValueError("phi requires a plasmonic or boundary point (p2 >= 0)")
    x = const.hbar_c_ev * math.sqrt(max(kin.p2, 0.0))
    if delta == 0.0:
        return complex(0.0, -0.5 * math.pi * x)
    y = x / delta
    if y <= SERIES_RADIUS:
        yy = y * y
        series = _SC[0] + yy * (_SC[1] + yy * (_SC[2] + yy * (_SC[3] + yy * _SC[4])))
        return complex(-(x * x / delta) * series, 0.0)
    if x == delta:
        return complex(-math.inf, -math.pi * delta)
    if x > delta:
        core = x * (1.0 + (delta / x) ** 2)
        return complex(delta - core * math.atanh(delta / x), -0.5 * math.pi * core)
    return complex(delta - x * (1.0 + (delta / x) ** 2) * math.atanh(y), 0.0)


def psi(kin: Kinematics, delta: float, const: PhysicalConstants = CODATA2018) -> float:
    """Response function Psi on the outer interval; real and positive."""
    if kin.region is Region.PLASMONIC:
        raise ValueError("psi requires an outer or boundary point (ptilde2 >= 0)")
    xt = const.hbar_c_ev * math.sqrt(max(kin.ptilde2, 0.0))
    if delta == 0.0:
        return math.pi
    y = xt / delta
    if y <= SERIES_RADIUS:
        yy = y * y
        series = _SC[0] - yy * (_SC[1] - yy * (_SC[2] - yy * (_SC[3] - yy * _SC[4])))
        return 2.0 * y * series
    return 2.0 * (1.0 / y + (1.0 - 1.0 / (y * y)) * math.atan(y))


def _zero_t(k: float, p2: float, delta: float, const: PhysicalConstants) -> ReducedPolarization:
    """Zero-temperature parts from the signed p^2 (positive = plasmonic).

    pi is built as -p2 * pi00, which realizes the algebraic identities
    pi = -p^2 pi00 (plasmonic) and pi = ptilde^2 pi00 (outer) exactly.
    Near the interval boundary both components follow one matched series
    in the signed variable z = (hbar c)^2 p^2 / Delta^2, so the dispatch
    is continuous there.
    """
    alpha = const.alpha_fs
    hbc = const.hbar_c_ev
    k2 = k * k
    ax = math.sqrt(abs(p2))
    if delta == 0.0 and p2 == 0.0:
        raise ValueError("pristine graphene is singular on the interval boundary")
    if delta > 0.0 and hbc * ax / delta <= SERIES_RADIUS:
        z = hbc * hbc * p2 / (delta * delta)
        series = _SC[0] + z * (_SC[1] + z * (_SC[2] + z * (_SC[3] + z * _SC[4])))
        pi00 = complex(2.0 * alpha * k2 * (hbc / delta) * series, 0.0)
    elif p2 > 0.0:
        kin = Kinematics(omega=math.nan, k=k, q2=math.nan, p2=p2, ptilde2=-p2,
                         region=Region.PLASMONIC)
        pi00 = -2.0 * alpha * k2 * phi(kin, delta, const) / (hbc * p2)
    else:
        kin = Kinematics(omega=math.nan, k=k, q2=math.nan, p2=p2, ptilde2=-p2,
                         region=Region.OUTER)
        pi00 = complex(alpha * k2 * psi(kin, delta, const) / ax, 0.0)
    return ReducedPolarization(pi00=pi00, pi=-p2 * pi00)


def zero_t_plasmonic(kin: Kinematics, delta: float,
                     const: PhysicalConstants = CODATA2018) -> ReducedPolarization:
    """Zero-temperature polarization on the plasmonic interval."""
    if kin.region is Region.OUTER:
        raise ValueError("zero_t_plasmonic requires a plasmonic or boundary point")
    return _zero_t(kin.k, max(kin.p2, 0.0), delta, const)


def zero_t_outer(kin: Kinematics, delta: float,
                 const: PhysicalConstants = CODATA2018) -> ReducedPolarization:
    """Zero-temperature polarization on the outer interval."""
    if kin.region is Region.PLASMONIC:
        raise ValueError("zero_t_outer requires an outer or boundary point")
    return _zero_t(kin.k, min(kin.p2, 0.0), delta, const)


def _scaled_spec(spec: QuadratureSpec, abs_floor, pref) -> QuadratureSpec:
    """Translate result-unit absolute floors into raw-integral units."""
    if abs_floor is None:
        return spec
    floor = 0.25 * np.asarray(abs_floor, dtype=float) / np.abs(pref)
    return spec.with_abs_tol(tuple(floor))


def _run_pieces(pieces, tail_f, tail_lo, tail_hi, spec, what, omega, k):
    """Sum converged piece results and verify the doubled-window tail."""
    value = np.zeros(2, dtype=complex)
    ok = True
    for res in pieces:
        value = value + np.atleast_1d(res.value)
        ok = ok and res.converged
    base_tol = np.maximum(np.asarray(spec.abs_tol, dtype=float),
                          spec.rel_tol * np.abs(value))
    if tail_f is not None and tail_hi > tail_lo:
        tail_spec = QuadratureSpec(rel_tol=1e-3, abs_tol=tuple(0.1 * base_tol + 1e-300),
                                   max_depth=spec.max_depth)
        tailr = integrate_adaptive(tail_f, tail_lo, tail_hi, tail_spec)
        value = value + np.atleast_1d(tailr.value)
        tol = np.maximum(np.asarray(spec.abs_tol, dtype=float),
                         spec.rel_tol * np.abs(value)) + 1e-300
        ok = ok and tailr.converged and bool(np.all(np.abs(np.atleast_1d(tailr.value)) <= tol))
    if not ok:
        raise PolarizationConvergenceError(f"{what} did not converge", omega, k)
    return value


def _piece(f, lo: float, hi: float, spec: QuadratureSpec, out: list) -> None:
    if hi > lo and (hi - lo) > 1e-15 * max(1.0, abs(lo), abs(hi)):
        out.append(integrate_adaptive(f, lo, hi, spec))


def _thermal_plasmonic_gapped_side(omega, k, delta, t_g, vfr, const, spec, abs_floor=None):
    """Thermal correction for hbar*c*p <= Delta (including the boundary).

    One occupation integral of the B1/B2 kernel differences, written in a
    scaled form that stays finite as p -> 0 so the boundary limit is
    smooth.  Purely real; the imaginary parts are gated off below the gap.
    """
    c = const.c
    v_f = vfr * c
    w = (v_f * k) ** 2
    cp2 = max(omega * omega - w, 0.0)
    tau = 2.0 * const.k_B_ev * t_g / const.hbar_ev        # rad/s per unit t
    t_lo = delta / (2.0 * const.k_B_ev * t_g)
    ghat = v_f * k * (delta / const.hbar_ev)              # = c*p*g, p-independent
    om2 = omega * omega
    inv_beta = const.k_B_ev * t_g / const.hbar_c_ev       # 1/m
    alpha = const.alpha_fs
    pref = np.array([8.0 * alpha / (vfr * vfr) * inv_beta,
                     8.0 * alpha * om2 / (vfr * vfr * c * c) * inv_beta])
    ispec = _scaled_spec(spec, abs_floor, pref)

    def kernels(t):
        # the occupation kernels are odd in their frequency argument, so the
        # 2cu - omega term carries sgn(2cu - omega)
        xp = tau * t + omega
        xm = tau * t - omega
        sgn = np.sign(xm)
        rp = np.sqrt(cp2 * (xp * xp - w) + ghat * ghat)
        rm = np.sqrt(cp2 * (xm * xm - w) + ghat * ghat)
        br00 = 2.0 - ((xp * xp - w) / rp - sgn * (xm * xm - w) / rm)
        brpi = 2.0 - ((cp2 * xp * xp - ghat * ghat) / rp
                      - sgn * (cp2 * xm * xm - ghat * ghat) / rm) / om2
        return _fermi(t)[:, None] * np.stack([br00, brpi], axis=-1)

    t_flip = omega / tau  # 2cu = omega: integrable kernel jump
    kspec = ispec.with_breakpoints([t_flip] if t_lo < t_flip < t_lo + _WINDOW else [])
    pieces = [integrate_adaptive(kernels, t_lo, t_lo + _WINDOW, kspec)]
    value = _run_pieces(pieces, kernels, t_lo + _WINDOW, t_lo + 2.0 * _WINDOW,
                        ispec, "below-gap thermal integral", omega, k)
    return ReducedPolarization(complex(pref[0] * value[0].real, 0.0),
                               complex(pref[1] * value[1].real, 0.0))


def _thermal_plasmonic_open_side(omega, k, delta, t_g, vfr, const, spec, abs_floor=None):
    """Thermal correction for hbar*c*p > Delta.

    Real parts: three occupation integrals per component, with hyperbolic
    substitutions absorbing the inverse-square-root endpoints at u_-, u_+.
    Imaginary parts: the integral between u_- and u_+ under the
    substitution 2cu - omega = v_F k sqrt(A) sin(theta), which removes
    both endpoint singularities exactly.
    """
    c = const.c
    v_f = vfr * c
    w = (v_f * k) ** 2
    cp = math.sqrt(omega * omega - w)
    x_ev = const.hbar_ev * cp
    a_par = 1.0 - (delta / x_ev) ** 2 if delta > 0.0 else 1.0
    s_a = math.sqrt(a_par)
    vks = v_f * k * s_a
    wa = w * a_par
    wma = w - wa
    tau = 2.0 * const.k_B_ev * t_g / const.hbar_ev
    t_lo = delta / (2.0 * const.k_B_ev * t_g)
    t_minus = (omega - vks) / tau
    t_plus = (omega + vks) / tau
    om2 = omega * omega
    inv_beta = const.k_B_ev * t_g / const.hbar_c_ev
    alpha = const.alpha_fs
    pref_re = np.array([8.0 * alpha / (vfr * vfr),
                        8.0 * alpha * om2 / (vfr * vfr * c * c)])
    ispec = _scaled_spec(spec, abs_floor, pref_re)
    pieces: list[QuadResult] = []

    def b1(x):
        return (x * x - w) / np.sqrt(x * x - wa)

    def b2(x):
        return (x * x - wma) / np.sqrt(x * x - wa)

    # piece 1: u in [Delta/(2 hbar c), u_-] via 2cu - omega = -vks*cosh(eta)
    arg1 = (omega - delta / const.hbar_ev) / vks
    if arg1 > 1.0:
        eta1 = math.acosh(arg1)

        def f1(eta):
            ch = np.cosh(eta)
            sh = np.sinh(eta)
            t = (omega - vks * ch) / tau
            xp = 2.0 * omega - vks * ch
            jac = vks * sh / (2.0 * c)
            g00 = jac * (2.0 - b1(xp) / cp) - (wa * ch * ch - w) / (2.0 * c * cp)
            gpi = jac * (2.0 - cp * b2(xp) / om2) - cp * (wa * ch * ch - wma) / (2.0 * c * om2)
            return _fermi(t)[:, None] * np.stack([g00, gpi], axis=-1)

        _piece(f1, 0.0, eta1, ispec, pieces)

    # piece 2: u in [u_-, u_+]; only the smooth 2cu + omega kernel appears
    def f2(t):
        xp = tau * t + omega
        g00 = 2.0 - b1(xp) / cp
        gpi = 2.0 - cp * b2(xp) / om2
        return (inv_beta * _fermi(t))[:, None] * np.stack([g00, gpi], axis=-1)

    _piece(f2, t_minus, t_plus, ispec, pieces)

    # piece 3: u in [u_+, cutoff] via 2cu - omega = +vks*cosh(eta)
    t_end = max(t_lo, t_plus) + _WINDOW

    def f3(eta):
        ch = np.cosh(eta)
        sh = np.sinh(eta)
        t = (omega + vks * ch) / tau
        xp = 2.0 * omega + vks * ch
        jac = vks * sh / (2.0 * c)
        g00 = jac * (2.0 - b1(xp) / cp) + (wa * ch * ch - w) / (2.0 * c * cp)
        gpi = jac * (2.0 - cp * b2(xp) / om2) + cp * (wa * ch * ch - wma) / (2.0 * c * om2)
        return _fermi(t)[:, None] * np.stack([g00, gpi], axis=-1)

    eta3 = math.acosh((tau * t_end - omega) / vks)
    eta32 = math.acosh((tau * (t_end + _WINDOW) - omega) / vks)
    _piece(f3, 0.0, eta3, ispec, pieces)
    value = _run_pieces(pieces, f3, eta3, eta32, ispec,
                        "above-gap thermal integral", omega, k)
    re00 = pref_re[0] * value[0].real
    repi = pref_re[1] * value[1].real

    # imaginary parts: theta(hcp - Delta) is satisfied here by construction
    p = cp / c
    pref_im = np.array([4.0 * alpha * k * k / p, 4.0 * alpha * p * k * k])
    imspec = _scaled_spec(spec, abs_floor, pref_im)

    def fim(theta):
        sn = np.sin(theta)
        t = (omega + vks * sn) / tau
        g00 = a_par * sn * sn - 1.0
        gpi = a_par * sn * sn + (1.0 - a_par)
        return _fermi(t)[:, None] * np.stack([g00, gpi], axis=-1)

    imres = integrate_adaptive(fim, -0.5 * math.pi, 0.5 * math.pi, imspec)
    if not imres.converged:
        raise PolarizationConvergenceError("thermal imaginary part did not converge",
                                           omega, k)
    im00 = pref_im[0] * float(np.atleast_1d(imres.value)[0])
    impi = pref_im[1] * float(np.atleast_1d(imres.value)[1])
    return ReducedPolarization(complex(re00, im00), complex(repi, impi))


def thermal_plasmonic(kin: Kinematics, sheet: GrapheneSheet,
                      const: PhysicalConstants = CODATA2018,
                      spec: QuadratureSpec | None = None,
                      abs_floor=None) -> ReducedPolarization:
    """Thermal correction (Pi00^(1)/hbar, Pi^(1)/hbar), plasmonic interval.

    The imaginary parts are gated by the step function
    theta(hbar c p - Delta) and are exactly zero below the gap curve.
    ``abs_floor`` optionally supplies per-component absolute error floors
    in result units (used by :func:`eval_evanescent` to tie the thermal
    tolerance to the zero-temperature scale).
    """
    if kin.region is Region.OUTER:
        raise ValueError("thermal_plasmonic requires a plasmonic or boundary point")
    spec = spec or QuadratureSpec()
    x_ev = const.hbar_c_ev * math.sqrt(max(kin.p2, 0.0))
    if sheet.delta > 0.0 and x_ev <= sheet.delta:
        return _thermal_plasmonic_gapped_side(
            kin.omega, kin.k, sheet.delta, sheet.temperature, sheet.v_f_ratio,
            const, spec, abs_floor)
    return _thermal_plasmonic_open_side(
        kin.omega, kin.k, sheet.delta, sheet.temperature, sheet.v_f_ratio,
        const, spec, abs_floor)


def _thermal_outer_real(omega, k, delta, t_g, vfr, const, spec, abs_floor=None):
    """Thermal correction on the outer interval at real omega > 0.

    The lambda-term radicand is r_l = rho^2 - (v + l*b)^2 with
    rho^2 = 1 + M + b^2, singular at v_plus = rho - b (l = +1) and
    v_minus = rho + b (l = -1), both inside the integration range.  Each
    sub-piece uses a sine or cosh substitution absorbing the
    inverse-square-root endpoint it owns; the other lambda term stays
    smooth there.
    """
    c = const.c
    v_f = vfr * c
    pt = math.sqrt((v_f * k) ** 2 - omega * omega) / c
    xt_ev = const.hbar_c_ev * pt
    d_scale = xt_ev / (2.0 * const.k_B_ev * t_g)
    v0 = delta / xt_ev if delta > 0.0 else 0.0
    b = omega / (c * pt)
    m_par = (v0 * (v_f * k) / (c * pt)) ** 2
    m2 = (v_f * k * v0 / c) ** 2
    rho = math.sqrt(1.0 + m_par + b * b)
    v_plus = (1.0 + m_par) / (rho + b)  # rho - b without cancellation
    v_minus = rho + b
    om_c = omega / c
    om2_c2 = om_c * om_c
    pref = 8.0 * const.alpha_fs * pt / (vfr * vfr)
    ispec = _scaled_spec(spec, abs_floor, np.array([pref, pref]))

    def fermi_v(v):
        return _fermi(d_scale * v)

    def n_lam(v, lam):
        return 1.0 - v * v - 2.0 * lam * b * v

    def nn_lam(v, lam):
        return (pt * v + lam * om_c) ** 2 + m2

    pieces: list[QuadResult] = []

    # piece A [v0, v_plus]: v = rho*sin(phi) - b absorbs the r_+ root
    if v_plus > v0 * (1.0 + 1e-15):
        phi0 = math.asin(min(1.0, (v0 + b) / rho))

        def f_a(phivals):
            sn = np.sin(phivals)
            cs = np.cos(phivals)
            v = rho * sn - b
            # rho^2 - (v-b)^2 factored to avoid cancellation
            rm = np.sqrt(np.maximum((2.0 * b + rho * (1.0 - sn)) * (rho * (1.0 + sn) - 2.0 * b),
                                    0.0))
            jac = rho * cs
            ferm = fermi_v(v)
            g00 = jac - 0.5 * (n_lam(v, 1.0) + n_lam(v, -1.0) * jac / rm)
            gpi = jac * om2_c2 - 0.5 * (nn_lam(v, 1.0) + nn_lam(v, -1.0) * jac / rm)
            return (ferm[:, None] * np.stack([g00, gpi], axis=-1)).astype(complex)

        _piece(f_a, phi0, 0.5 * math.pi, ispec, pieces)

    if b > 0.0:
        # piece B1 [v_plus, rho]: v + b = rho*cosh(eta)
        eta_b1 = math.acosh((rho + b) / rho)

        def f_b1(eta):
            ch = np.cosh(eta)
            sh = np.sinh(eta)
            cm1 = 2.0 * np.sinh(0.5 * eta) ** 2  # cosh(eta) - 1
            v = rho * ch - b
            rm = np.sqrt(np.maximum((2.0 * b - rho * cm1) * (rho * (1.0 + ch) - 2.0 * b), 0.0))
            jac = rho * sh
            ferm = fermi_v(v)
            g00 = jac - 0.5 * (_IP_PLUS * n_lam(v, 1.0) + n_lam(v, -1.0) * jac / rm)
            gpi = jac * om2_c2 - 0.5 * (_IP_PLUS * nn_lam(v, 1.0) + nn_lam(v, -1.0) * jac / rm)
            return ferm[:, None] * np.stack([g00, gpi], axis=-1)

        _piece(f_b1, 0.0, eta_b1, ispec, pieces)

        # piece B2 [rho, v_minus]: v - b = rho*sin(phi)
        phi_b2 = math.asin(min(1.0, (rho - b) / rho))

        def f_b2(phivals):
            sn = np.sin(phivals)
            cs = np.cos(phivals)
            v = rho * sn + b
            rp = np.sqrt(np.maximum((2.0 * b - rho * (1.0 - sn)) * (v + b + rho), 0.0))
            jac = rho * cs
            ferm = fermi_v(v)
            g00 = jac - 0.5 * (_IP_PLUS * n_lam(v, 1.0) * jac / rp + n_lam(v, -1.0))
            gpi = jac * om2_c2 - 0.5 * (_IP_PLUS * nn_lam(v, 1.0) * jac / rp + nn_lam(v, -1.0))
            return ferm[:, None] * np.stack([g00, gpi], axis=-1)

        _piece(f_b2, phi_b2, 0.5 * math.pi, ispec, pieces)

    # piece C [v_minus, cutoff]: v - b = rho*cosh(eta), plus doubled tail
    window = _WINDOW / d_scale
    vc_hi = max(v0, v_minus) + window

    def f_c(eta):
        ch = np.cosh(eta)
        sh = np.sinh(eta)
        cm1 = 2.0 * np.sinh(0.5 * eta) ** 2
        v = rho * ch + b
        rp = np.sqrt(np.maximum((2.0 * b + rho * cm1) * (v + b + rho), 0.0))
        jac = rho * sh
        ferm = fermi_v(v)
        g00 = jac - 0.5 * (_IP_PLUS * n_lam(v, 1.0) * jac / rp + _IP_MINUS * n_lam(v, -1.0))
        gpi = jac * om2_c2 - 0.5 * (_IP_PLUS * nn_lam(v, 1.0) * jac / rp
                                    + _IP_MINUS * nn_lam(v, -1.0))
        return ferm[:, None] * np.stack([g00, gpi], axis=-1)

    eta_c = math.acosh((vc_hi - b) / rho)
    eta_c2 = math.acosh((vc_hi + window - b) / rho)
    _piece(f_c, 0.0, eta_c, ispec, pieces)
    value = _run_pieces(pieces, f_c, eta_c, eta_c2, ispec,
                        "outer thermal integral", omega, k)
    return ReducedPolarization(pref * complex(value[0]), pref * complex(value[1]))


def _thermal_outer_imag_axis(k, delta, t_g, vfr, const, spec, xi, abs_floor=None):
    """Thermal correction continued to omega = i*xi (xi >= 0); real output.

    For xi > 0 the lambda = +1 and lambda = -1 terms are complex
    conjugates, so their sum is twice the real part of the lambda = +1
    term; for xi = 0 the radicand is real and only the segment below its
    root contributes to the real part (sine substitution), while beyond it
    the conjugate pair cancels exactly.
    """
    c = const.c
    v_f = vfr * c
    pt = math.sqrt((v_f * k) ** 2 + xi * xi) / c
    xt_ev = const.hbar_c_ev * pt
    d_scale = xt_ev / (2.0 * const.k_B_ev * t_g)
    v0 = delta / xt_ev if delta > 0.0 else 0.0
    m_par = (v0 * (v_f * k) / (c * pt)) ** 2
    m2 = (v_f * k * v0 / c) ** 2
    window = _WINDOW / d_scale
    pref = 8.0 * const.alpha_fs * pt / (vfr * vfr)
    ispec = _scaled_spec(spec, abs_floor, np.array([pref, pref]))
    pieces: list[QuadResult] = []

    if xi == 0.0:
        rho = math.sqrt(1.0 + m_par)
        phi0 = math.asin(min(1.0, v0 / rho))

        def f_a(phivals):
            sn = np.sin(phivals)
            v = rho * sn
            jac = rho * np.cos(phivals)
            ferm = _fermi(d_scale * v)
            g00 = jac - (1.0 - v * v)
            gpi = -((pt * v) ** 2 + m2)
            return ferm[:, None] * np.stack([g00, gpi], axis=-1)

        _piece(f_a, phi0, 0.5 * math.pi, ispec, pieces)
        v_end = max(v0 + window, rho)

        def f_c(v):
            ferm = _fermi(d_scale * v)
            return np.stack([ferm, np.zeros_like(ferm)], axis=-1)

        _piece(f_c, rho, v_end, ispec, pieces)
        value = _run_pieces(pieces, f_c, v_end, v_end + window, ispec,
                            "static thermal integral", 0.0, k)
    else:
        b_i = xi / (c * pt)
        v_end = v0 + window
        v_peak2 = 1.0 + m_par - 2.0 * b_i * b_i
        bps = [math.sqrt(v_peak2)] if v_peak2 > 0.0 else []

        def f_main(v):
            r = (1.0 + m_par - v * v) - 2.0j * b_i * v
            sq = np.sqrt(r)
            ferm = _fermi(d_scale * v)
            g00 = 1.0 - (((1.0 - v * v) - 2.0j * b_i * v) / sq).real
            gpi = -(xi / c) ** 2 - (((pt * v + 1.0j * xi / c) ** 2 + m2) / sq).real
            return ferm[:, None] * np.stack([g00, gpi], axis=-1)

        pieces.append(integrate_adaptive(
            f_main, v0, v_end,
            ispec.with_breakpoints([p for p in bps if v0 < p < v_end])))
        value = _run_pieces(pieces, f_main, v_end, v_end + window, ispec,
                            "imaginary-axis thermal integral", xi, k)
    return pref * value[0].real, pref * value[1].real


def thermal_outer(kin: Kinematics, sheet: GrapheneSheet,
                  const: PhysicalConstants = CODATA2018,
                  spec: QuadratureSpec | None = None,
                  abs_floor=None) -> ReducedPolarization:
    """Thermal correction (Pi00^(1)/hbar, Pi^(1)/hbar), outer interval."""
    if kin.region is Region.PLASMONIC or not kin.ptilde2 > 0.0:
        raise ValueError("thermal_outer requires an outer point (ptilde2 > 0)")
    spec = spec or QuadratureSpec()
    if kin.omega == 0.0:
        re00, repi = _thermal_outer_imag_axis(
            kin.k, sheet.delta, sheet.temperature, sheet.v_f_ratio, const, spec,
            xi=0.0, abs_floor=abs_floor)
        return ReducedPolarization(complex(re00, 0.0), complex(repi, 0.0))
    return _thermal_outer_real(kin.omega, kin.k, sheet.delta, sheet.temperature,
                               sheet.v_f_ratio, const, spec, abs_floor)


def _thermal_floor(zt: ReducedPolarization, spec: QuadratureSpec) -> np.ndarray:
    """Absolute error floors for the thermal parts, in result units.

    Tied to the zero-temperature scale so the total polarization error
    stays at rel_tol even when the thermal correction is exponentially
    small against the zero-temperature part.
    """
    return np.array([0.5 * spec.rel_tol * max(abs(zt.pi00), 5e-300),
                     0.5 * spec.rel_tol * max(abs(zt.pi), 5e-300)])


def eval_evanescent(omega: float, k: float, sheet: GrapheneSheet,
                    const: PhysicalConstants = CODATA2018,
                    spec: QuadratureSpec | None = None) -> ReducedPolarization:
    """Total reduced polarization at a real evanescent point (k > omega/c).

    Zero-temperature part plus thermal correction, dispatched on the
    interval.  Boundary points use the matched series for the
    zero-temperature part and the below-gap limit form (smooth across the
    boundary) for the thermal one.
    """
    spec = spec or QuadratureSpec()
    kin = classify(omega, k, v_f_ratio=sheet.v_f_ratio, const=const)
    if sheet.delta == 0.0 and kin.region is Region.BOUNDARY:
        raise ValueError("pristine graphene is singular on the interval boundary")
    zt = _zero_t(k, kin.p2, sheet.delta, const)
    floor = _thermal_floor(zt, spec)
    if kin.region is Region.PLASMONIC:
        th = thermal_plasmonic(kin, sheet, const, spec, abs_floor=floor)
    elif kin.region is Region.OUTER:
        th = thermal_outer(kin, sheet, const, spec, abs_floor=floor)
    else:
        th = _thermal_plasmonic_gapped_side(
            omega, k, sheet.delta, sheet.temperature, sheet.v_f_ratio, const,
            spec, abs_floor=floor)
    return zt + th


def eval_imaginary_freq(l: int, k: float, sheet: GrapheneSheet, t_env: float,
                        const: PhysicalConstants = CODATA2018,
                        spec: QuadratureSpec | None = None) -> ReducedPolarization:
    """Reduced polarization at the Matsubara point omega = i*xi_l.

    xi_l is fixed by the environmental temperature while the graphene
    temperature enters only through the occupation factor.  Both
    components are strictly real (returned with zero imaginary part).
    """
    if l < 0 or l != int(l):
        raise ValueError(f"Matsubara index must be a nonnegative integer, got {l}")
    if k <= 0.0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    if t_env <= 0.0:
        raise ValueError(f"environmental temperature must be positive, got {t_env}")
    spec = spec or QuadratureSpec()
    xi = 2.0 * math.pi * const.k_B * t_env * l / const.hbar
    c = const.c
    v_f = sheet.v_f_ratio * c
    pt2 = ((v_f * k) ** 2 + xi * xi) / (c * c)
    zt = _zero_t(k, -pt2, sheet.delta, const)
    re00, repi = _thermal_outer_imag_axis(
        k, sheet.delta, sheet.temperature, sheet.v_f_ratio, const, spec,
        xi=xi, abs_floor=_thermal_floor(zt, spec))
    return ReducedPolarization(pi00=zt.pi00 + re00, pi=zt.pi + repi)

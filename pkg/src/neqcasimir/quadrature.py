"""Quadrature and summation engine.

Adaptive Gauss-Kronrod on finite intervals with breakpoint management,
tanh-sinh (double-exponential) integration for endpoint singularities, a
semi-infinite rule based on an exponential substitution with tail
verification, and a convergence-controlled Matsubara sum.

Integrands are vectorized callables: ``f(x)`` receives a 1-D array of
abscissae and returns either a same-length array (scalar integrand, real or
complex) or an ``(n, m)`` array (``m`` stacked integrands sharing the same
abscissae).  Results are deterministic: interval contributions are
accumulated with compensated summation in fixed (left-to-right) order, so
the outcome does not depend on subdivision history or caller concurrency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np


class QuadratureError(RuntimeError):
    """Raised for invalid quadrature inputs or divergent summations."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and subdivision policy for one integration.

    ``abs_tol`` may be a scalar or a per-component array for stacked
    integrands.  ``breakpoints`` are interior abscissae where the integrand
    is singular or kinked; the interval is split there before refinement.
    """

    rel_tol: float = 1e-8
    abs_tol: float | tuple = 0.0
    max_depth: int = 30
    breakpoints: tuple[float, ...] = ()
    max_intervals: int = 4096

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise QuadratureError(f"rel_tol must be positive, got {self.rel_tol}")

    def with_breakpoints(self, points: Sequence[float]) -> "QuadratureSpec":
        return replace(self, breakpoints=tuple(points))

    def with_abs_tol(self, abs_tol) -> "QuadratureSpec":
        return replace(self, abs_tol=abs_tol)


@dataclass
class QuadResult:
    """Outcome of one integration or summation.

    ``value`` and ``error_estimate`` are scalars for scalar integrands and
    per-component arrays for stacked ones.  ``converged`` implies
    ``error_estimate <= max(rel_tol*|value|, abs_tol)`` componentwise.
    For :func:`sum_matsubara`, ``evaluations`` counts term evaluations,
    i.e. ``l_max + 1``.
    """

    value: float | complex | np.ndarray
    error_estimate: float | np.ndarray
    evaluations: int
    converged: bool


# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
_XGK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])
_GAUSS_IDX = np.arange(1, 15, 2)


def _gk15(f: Callable, a: float, b: float):
    """One Gauss-Kronrod panel; returns (value, error_array)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = np.asarray(f(mid + half * _XGK))
    resk = half * np.tensordot(_WGK, y, axes=(0, 0))
    resg = half * np.tensordot(_WG, y[_GAUSS_IDX], axes=(0, 0))
    return resk, np.abs(resk - resg)


def _tolerance(value, spec: QuadratureSpec):
    tol = np.maximum(np.asarray(spec.abs_tol, dtype=float), spec.rel_tol * np.abs(value))
    return np.maximum(tol, 5e-308)


def _ordered_sum(pieces: list):
    """Compensated sum of contributions in the given (fixed) order."""
    first = np.asarray(pieces[0])
    if first.ndim == 0:
        if np.iscomplexobj(first):
            return complex(math.fsum(complex(p).real for p in pieces),
                           math.fsum(complex(p).imag for p in pieces))
        return math.fsum(float(p) for p in pieces)
    out = np.empty_like(first)
    for idx in range(first.size):
        col = [np.asarray(p).reshape(-1)[idx] for p in pieces]
        if np.iscomplexobj(first):
            out.reshape(-1)[idx] = complex(math.fsum(c.real for c in col),
                                           math.fsum(c.imag for c in col))
        else:
            out.reshape(-1)[idx] = math.fsum(col)
    return out


class _Interval:
    __slots__ = ("a", "b", "value", "err", "depth", "frozen")

    def __init__(self, a, b, value, err, depth):
        self.a, self.b = a, b
        self.value, self.err = value, err
        self.depth = depth
        self.frozen = False


def integrate_adaptive(f: Callable, a: float, b: float, spec: QuadratureSpec) -> QuadResult:
    """Adaptive Gauss-Kronrod integration of ``f`` over the finite [a, b].

    Splits at ``spec.breakpoints`` first, then bisects the interval with the
    worst error-to-tolerance ratio until every component satisfies
    ``sum(err) <= max(rel_tol*|value|, abs_tol)`` or the subdivision budget
    is exhausted (yielding ``converged=False``, never a silent wrong value).
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise QuadratureError(f"bounds must be finite, got [{a}, {b}]")
    if not a < b:
        raise QuadratureError(f"lower bound must be below upper, got [{a}, {b}]")

    edges = [a] + sorted({float(p) for p in spec.breakpoints if a < p < b}) + [b]
    nev = 0
    intervals: list[_Interval] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = _gk15(f, lo, hi)
        nev += 15
        intervals.append(_Interval(lo, hi, val, err, 0))

    converged = False
    while True:
        total = sum(iv.value for iv in intervals)
        err_tot = sum(iv.err for iv in intervals)
        tol = _tolerance(total, spec)
        if np.all(err_tot <= tol):
            converged = True
            break
        if len(intervals) >= spec.max_intervals:
            break
        candidates = [i for i, iv in enumerate(intervals) if not iv.frozen]
        if not candidates:
            break
        worst = max(candidates, key=lambda i: float(np.max(intervals[i].err / tol)))
        iv = intervals[worst]
        mid = 0.5 * (iv.a + iv.b)
        if iv.depth >= spec.max_depth or not iv.a < mid < iv.b:
            iv.frozen = True
            continue
        lval, lerr = _gk15(f, iv.a, mid)
        rval, rerr = _gk15(f, mid, iv.b)
        nev += 30
        intervals[worst] = _Interval(iv.a, mid, lval, lerr, iv.depth + 1)
        intervals.insert(worst + 1, _Interval(mid, iv.b, rval, rerr, iv.depth + 1))

    intervals.sort(key=lambda iv: iv.a)
    value = _ordered_sum([iv.value for iv in intervals])
    error = _ordered_sum([iv.err for iv in intervals])
    return QuadResult(value=value, error_estimate=error, evaluations=nev, converged=converged)


# tanh-sinh abscissa cap: at |t| = 4.3 the node sits ~1e-50*(b-a) from the
# endpoint with weight ~1e-47, so deeper nodes cannot contribute.
_DE_TMAX = 4.3
_DE_MAX_LEVEL = 12
# Non-finite integrand values are tolerated only where the tanh-sinh weight
# is below this bound; for an integrable algebraic endpoint singularity the
# weight*value product there is rigorously below 1e-200 of the integral.
_DE_IGNORE_WEIGHT = 1e-250


def _de_nodes(level: int):
    h = 1.0 / (1 << level)
    if level == 0:
        k = np.arange(-math.floor(_DE_TMAX), math.floor(_DE_TMAX) + 1, dtype=float)
        t = k
    else:
        m = math.floor((_DE_TMAX - h) / (2 * h))
        t = (2.0 * np.arange(-m - 1, m + 1, dtype=float) + 1.0) * h
    u = 0.5 * math.pi * np.sinh(t)
    # distance of the mapped point from the nearer endpoint, in half-widths
    eu = np.exp(-2.0 * np.abs(u))
    off = 2.0 * eu / (1.0 + eu)
    w = 0.5 * math.pi * np.cosh(t) / np.cosh(u) ** 2
    return t, off, w, h


def integrate_de(f: Callable, a: float, b: float, spec: QuadratureSpec) -> QuadResult:
    """tanh-sinh integration of ``f`` over [a, b].

    Handles integrable algebraic or logarithmic endpoint singularities.
    Nodes are clamped one ulp inside the interval, so ``f`` is never called
    at an endpoint.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise QuadratureError(f"bounds must be finite, got [{a}, {b}]")
    if not a < b:
        raise QuadratureError(f"lower bound must be below upper, got [{a}, {b}]")
    half = 0.5 * (b - a)
    lo_in = np.nextafter(a, b)
    hi_in = np.nextafter(b, a)

    def level_sum(level: int):
        t, off, w, h = _de_nodes(level)
        x = np.where(t >= 0.0, b - half * off, a + half * off)
        x = np.clip(x, lo_in, hi_in)
        y = np.asarray(f(x))
        bad = ~np.isfinite(y)
        if np.any(bad):
            wcol = w.reshape((-1,) + (1,) * (y.ndim - 1))
            if np.any(bad & (np.broadcast_to(wcol, y.shape) >= _DE_IGNORE_WEIGHT)):
                return None, len(t)
            y = np.where(bad, 0.0, y)
        return half * h * np.tensordot(w, y, axes=(0, 0)), len(t)

    s_prev, nev = level_sum(0)
    if s_prev is None:
        return QuadResult(np.nan, math.inf, nev, False)
    err = None
    converged = False
    for level in range(1, _DE_MAX_LEVEL + 1):
        part, n = level_sum(level)
        nev += n
        if part is None:
            return QuadResult(np.nan, math.inf, nev, False)
        s_new = 0.5 * s_prev + part
        err = np.abs(s_new - s_prev)
        s_prev = s_new
        if level >= 2 and np.all(err <= _tolerance(s_new, spec)):
            converged = True
            break
    return QuadResult(value=s_prev, error_estimate=err, evaluations=nev, converged=converged)


# 42 e-folds: the bound C*exp(-x/s) leaves < 1e-18 of the integrand's mass
# beyond the cutoff, which the doubled-cutoff check then verifies.
_TAIL_EFOLDS = 42.0


def integrate_semi_infinite(f: Callable, a: float, decay_scale: float,
                            spec: QuadratureSpec) -> QuadResult:
    """Integrate ``f`` over [a, inf) assuming |f| <= C*exp(-x/decay_scale).

    Maps x = a + s*(e^y - 1) and integrates y over [0, log1p(42)]; the tail
    out to the doubled cutoff is integrated loosely and must stay within
    tolerance of the total, otherwise the result is non-converged.
    """
    if decay_scale <= 0.0 or not math.isfinite(decay_scale):
        raise QuadratureError(f"decay_scale must be positive and finite, got {decay_scale}")
    s = decay_scale

    def g(y):
        ey = np.exp(y)
        x = a + s * (ey - 1.0)
        vals = np.asarray(f(x))
        jac = s * ey
        return vals * jac.reshape((-1,) + (1,) * (vals.ndim - 1))

    y_cut = math.log1p(_TAIL_EFOLDS)
    y_cut2 = math.log1p(2.0 * _TAIL_EFOLDS)
    ybreaks = [math.log1p((p - a) / s) for p in spec.breakpoints
               if a < p < a + s * _TAIL_EFOLDS]
    main = integrate_adaptive(g, 0.0, y_cut, spec.with_breakpoints(ybreaks))
    tail_spec = QuadratureSpec(rel_tol=1e-3, abs_tol=0.1 * _tolerance(main.value, spec),
                               max_depth=spec.max_depth)
    tail = integrate_adaptive(g, y_cut, y_cut2, tail_spec)
    value = main.value + tail.value
    error = main.error_estimate + np.abs(tail.value) + tail.error_estimate
    tail_ok = bool(np.all(np.abs(tail.value) <= _tolerance(value, spec)))
    return QuadResult(value=value, error_estimate=error,
                      evaluations=main.evaluations + tail.evaluations,
                      converged=main.converged and tail.converged and tail_ok)


def sum_matsubara(term: Callable[[int], float], spec: QuadratureSpec,
                  max_terms: int = 20000,
                  divergence_check_at: int | None = None) -> QuadResult:
    """Primed Matsubara sum: 0.5*term(0) + sum_{l>=1} term(l).

    Terms must decay geometrically or faster in the tail.  Stops once the
    running tail bound |term(l)|/(1 - observed ratio) drops below
    tolerance.  Raises :class:`QuadratureError` if the terms are still not
    decaying at ``divergence_check_at`` (or at ``max_terms``).
    """
    terms = [0.5 * term(0)]
    prev_mag = None
    ratios: list[float] = []
    l = 0
    converged = False
    tail = math.inf
    while l < max_terms:
        l += 1
        t = term(l)
        terms.append(t)
        mag = abs(t)
        if prev_mag is not None and prev_mag > 0.0:
            ratios.append(mag / prev_mag)
        prev_mag = mag
        partial = math.fsum(terms)
        tol = float(_tolerance(partial, spec))
        if mag == 0.0:
            tail = 0.0
            converged = True
            break
        if len(ratios) >= 2:
            ratio = min(max(ratios[-3:]), 0.999)
            if ratio < 1.0:
                tail = mag / (1.0 - ratio)
                if tail <= tol:
                    converged = True
                    break
        if divergence_check_at is not None and l >= divergence_check_at:
            recent = ratios[-3:]
            if not recent or min(recent) >= 1.0:
                raise QuadratureError(
                    f"Matsubara terms not decaying by l={l} (last ratios {recent})")
    if not converged:
        recent = ratios[-3:]
        if not recent or min(recent) >= 1.0:
            raise QuadratureError(
                f"Matsubara terms not decaying after l={l} (last ratios {recent})")
    value = math.fsum(terms)
    return QuadResult(value=value, error_estimate=tail, evaluations=l + 1,
                      converged=converged)

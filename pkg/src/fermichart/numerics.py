"""Quadrature and root-finding backbone.

Integrands are vectorized: they receive a numpy array of abscissae and must
return an array of the same shape.  Plain scalar callables are accepted and
evaluated element by element.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import (ConvergenceError, DivergentIntegralError, DomainError, IntegrandError,
                     NoRootError)

OPEN = math.inf
_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny
_QUARTER_PI = 0.25 * math.pi
_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class Tolerances:
    quad_rel: float = 1e-10
    quad_abs: float = 1e-12
    root_rel: float = 1e-12
    tol_condition: float = 1e-9
    max_subdivisions: int = 60
    tail_probe_factor: float = 2.0

    def __post_init__(self):
        for name in ("quad_rel", "quad_abs", "root_rel", "tol_condition", "max_subdivisions"):
            if not getattr(self, name) > 0:
                raise DomainError(f"tolerance {name} must be positive")
        if not self.tail_probe_factor > 1:
            raise DomainError("tail_probe_factor must exceed 1")

    def tightened(self, **changes) -> "Tolerances":
        return replace(self, **changes)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(self.value + other.value,
                          self.abs_error_estimate + other.abs_error_estimate,
                          self.evaluations + other.evaluations)

    def scaled(self, c: float) -> "QuadResult":
        return QuadResult(c * self.value, abs(c) * self.abs_error_estimate, self.evaluations)


@dataclass(frozen=True)
class Divergent:
    """Returned by :func:`integrate_tail` when the tail integral does not converge."""

    panels: int
    last_panel: float
    reason: str


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 13]] = _WG[0]
GAUSS_WEIGHTS[[3, 11]] = _WG[1]
GAUSS_WEIGHTS[[5, 9]] = _WG[2]
GAUSS_WEIGHTS[7] = _WG[3]


def _call(f, x):
    try:
        y = f(x)
    except TypeError:
        y = None
    if y is None or np.shape(y) != x.shape:
        y = np.frompyfunc(f, 1, 1)(x).astype(float)
    return np.asarray(y, dtype=float)


def _gk15(f, a, b):
    """Apply the G7/K15 pair to each panel [a_i, b_i]; returns (values, errors)."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * NODES
    with np.errstate(all="ignore"):
        y = _call(f, x)
        if not np.isfinite(y).all():
            bad = x[~np.isfinite(y)]
            raise IntegrandError(f"integrand is not finite at t = {bad.ravel()[0]!r}")
        yk = y @ KRONROD_WEIGHTS
        k = h * yk
        err = np.abs(k - h * (y @ GAUSS_WEIGHTS))
        ah = np.abs(h)
        resabs = ah * (np.abs(y) @ KRONROD_WEIGHTS)
        resasc = ah * (np.abs(y - 0.5 * yk[:, None]) @ KRONROD_WEIGHTS)
        # QUADPACK's error scaling for the 15-point pair.
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc > 0) & (err > 0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _TINY / (50.0 * _EPS), np.maximum(floor, err), err)
    return k, err


def integrate_smooth(f: Callable, lo: float, hi: float, tol: Tolerances = DEFAULT_TOL,
                     *, points=None) -> QuadResult:
    """Globally adaptive Gauss-Kronrod quadrature of ``f`` over [lo, hi].

    ``points`` optionally gives interior breakpoints for the initial
    partition; subdivisions beyond that partition count against
    ``tol.max_subdivisions``.
    """
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("integration limits must be finite")
    if hi < lo:
        raise DomainError(f"need lo <= hi, got [{lo}, {hi}]")
    if hi == lo:
        y = _call(f, np.array([lo]))
        if not np.all(np.isfinite(y)):
            raise IntegrandError(f"integrand is not finite at t = {lo!r}")
        return QuadResult(0.0, 0.0, 1)
    edges = [lo]
    if points is not None:
        edges.extend(sorted(p for p in points if lo < p < hi))
    edges.append(hi)
    edges = np.asarray(edges)
    a, b = edges[:-1], edges[1:]
    vals, errs = _gk15(f, a, b)
    evaluations = 15 * len(a)
    panels = [[float(a[i]), float(b[i]), float(vals[i]), float(errs[i])] for i in range(len(a))]
    heap = [(-p[3], i) for i, p in enumerate(panels)]
    heapq.heapify(heap)
    total_err = float(np.sum(errs))
    splits = 0
    while True:
        total = math.fsum(p[2] for p in panels if p is not None)
        if total_err <= max(tol.quad_abs, tol.quad_rel * abs(total)):
            return QuadResult(total, total_err, evaluations)
        neg_err, idx = heapq.heappop(heap)
        pa, pb, _, perr = panels[idx]
        mid = 0.5 * (pa + pb)
        if not (pa < mid < pb) or (pb - pa) <= 8 * _EPS * max(abs(pa), abs(pb)):
            # Panel cannot be refined further; accept it at roundoff level.
            panels[idx][3] = 0.0
            total_err -= perr
            heapq.heappush(heap, (0.0, idx))
            if all(-e == 0.0 for e, _ in heap):
                return QuadResult(total, max(total_err, 0.0), evaluations)
            continue
        if splits >= tol.max_subdivisions:
            best = QuadResult(total, total_err, evaluations)
            raise ConvergenceError(
                f"subdivision budget {tol.max_subdivisions} exhausted on [{lo}, {hi}] "
                f"(estimate {total!r} +/- {total_err:.3g})", best)
        v2, e2 = _gk15(f, np.array([pa, mid]), np.array([mid, pb]))
        evaluations += 30
        splits += 1
        panels[idx] = None
        total_err += float(e2[0] + e2[1]) - perr
        for seg in ((pa, mid, float(v2[0]), float(e2[0])), (mid, pb, float(v2[1]), float(e2[1]))):
            panels.append(list(seg))
            heapq.heappush(heap, (-seg[3], len(panels) - 1))


_TAIL_CAP = 1e250
_TAIL_BATCH = 32
_CONFIRM_PANELS = 8


def integrate_tail(f: Callable, lo: float, tol: Tolerances = DEFAULT_TOL) -> QuadResult | Divergent:
    """Integral of a positive, eventually decreasing ``f`` over [lo, inf).

    Integrates over doubling panels [lo, 2 lo], [2 lo, 4 lo], ... and stops
    once a panel drops below ``max(quad_abs, quad_rel * total)``, adding the
    geometric remainder implied by the last panel ratio.  Returns
    :class:`Divergent` when the panel ratio stays >= 1 - quad_rel for 8
    consecutive panels, or when the panels reach t ~ 1e250 without the
    stopping criterion being met (slowly divergent tails such as 1/(t log t)).
    """
    lo = float(lo)
    if not lo > 0:
        raise DomainError("tail integral needs a positive lower limit")
    log2 = math.log(2.0)
    u0 = math.log(lo)

    def g(u):
        t = np.exp(u)
        return t * _call(f, t)

    values: list[float] = []
    errors: list[float] = []
    evaluations = 0
    run = 0
    k = 0
    while True:
        edges = u0 + log2 * np.arange(k, k + _TAIL_BATCH + 1)
        if math.exp(edges[-1]) > _TAIL_CAP:
            return Divergent(len(values), values[-1] if values else math.nan,
                             "panels did not decay before the probe cap")
        ua, ub = edges[:-1], edges[1:]
        vals, errs = _gk15(g, ua, ub)
        evaluations += 15 * len(ua)
        for i in range(len(ua)):
            v, e = float(vals[i]), float(errs[i])
            if e > max(tol.quad_abs * 1e-3, tol.quad_rel * abs(v)):
                res = integrate_smooth(g, ua[i], ub[i], tol)
                v, e = res.value, res.abs_error_estimate
                evaluations += res.evaluations
            prev = values[-1] if values else None
            values.append(v)
            errors.append(e)
            if prev is not None and prev > 0:
                ratio = v / prev
                run = run + 1 if ratio >= 1.0 - tol.quad_rel else 0
                if run >= _CONFIRM_PANELS:
                    return Divergent(len(values), v, "panel ratio did not fall below 1")
                total = math.fsum(values)
                if v <= max(tol.quad_abs, tol.quad_rel * abs(total)) and ratio < 1.0:
                    remainder = v * ratio / (1.0 - ratio)
                    err = math.fsum(errors) + abs(remainder) + _EPS * abs(total)
                    return QuadResult(total + remainder, float(err), evaluations)
            elif prev is not None and v == 0.0:
                return QuadResult(math.fsum(values), float(math.fsum(errors)), evaluations)
        k += _TAIL_BATCH


def find_root_monotone(f: Callable[[float], float], lo: float, hi: float = OPEN,
                       tol: Tolerances = DEFAULT_TOL, *, max_growth: int = 200,
                       scale: float | None = None) -> float:
    """Root of a strictly monotone ``f`` on [lo, hi]; ``hi = OPEN`` grows the bracket.

    With an open upper end the bracket becomes [lo, lo + w * (factor**n - 1) / (factor - 1)]
    for increasing n until ``f`` changes sign, where the first width w is ``scale``
    if given and ``(|lo| or 1) * (factor - 1)`` otherwise.  Refinement uses Brent's method.
    """
    lo = float(lo)
    flo = float(f(lo))
    if flo == 0.0:
        return lo
    if not math.isfinite(flo):
        raise NoRootError(f"f({lo!r}) is not finite")
    if math.isinf(hi):
        factor = tol.tail_probe_factor
        if scale is not None and scale > 0:
            width = float(scale)
        else:
            width = (abs(lo) if lo != 0 else 1.0) * (factor - 1.0)
        hi_val = None
        for _ in range(max_growth):
            cand = lo + width
            try:
                fc = float(f(cand))
            except (ArithmeticError, ValueError, OverflowError) as exc:
                raise NoRootError(f"bracket growth hit an evaluation failure at {cand!r}: {exc}") from exc
            if not math.isfinite(fc):
                raise NoRootError(f"f({cand!r}) is not finite during bracket growth")
            if fc == 0.0:
                return cand
            if (fc > 0) != (flo > 0):
                hi_val = cand
                break
            lo, flo = cand, fc
            width *= factor
        if hi_val is None:
            raise NoRootError("no sign change found within the bracket-growth budget")
        hi = hi_val
    else:
        hi = float(hi)
        fhi = float(f(hi))
        if fhi == 0.0:
            return hi
        if (fhi > 0) == (flo > 0):
            raise NoRootError(f"f does not change sign on [{lo!r}, {hi!r}]")
    rtol = max(tol.root_rel, 4.0 * _EPS)
    return float(brentq(f, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500))


# --------------------------------------------------------------------------
# Sine-substituted chart integrals


@dataclass(frozen=True)
class EndAngle:
    """Lower endpoint theta0 of the substitution a(t) = a(tau) sin(theta).

    Stored together with its complement phi0 = pi/2 - theta0; whichever of the
    two is <= pi/4 is the one computed directly, so both the observer end
    (phi0 -> 0) and the big-bang end (theta0 -> 0) keep full relative
    precision.
    """

    theta: float
    phi: float

    @classmethod
    def from_theta(cls, theta: float) -> "EndAngle":
        return cls(theta, _HALF_PI - theta)

    @classmethod
    def from_phi(cls, phi: float) -> "EndAngle":
        return cls(_HALF_PI - phi, phi)

    @classmethod
    def from_ratio(cls, s0: float, big_a: float) -> "EndAngle":
        """Endpoint for a(t_lo) = s0 against a(tau) = big_a."""
        if s0 <= 0.0:
            return cls(0.0, _HALF_PI)
        c = math.sqrt(max((big_a - s0) * (big_a + s0), 0.0))
        return cls(math.atan2(s0, c), math.atan2(c, s0))

    @classmethod
    def from_gap(cls, s0: float, gap: float) -> "EndAngle":
        """Endpoint for a(t_lo) = s0 against a(tau) = s0 + gap, with the gap known precisely."""
        if s0 <= 0.0:
            return cls(0.0, _HALF_PI)
        c = math.sqrt(max(gap * (2.0 * s0 + gap), 0.0))
        return cls(math.atan2(s0, c), math.atan2(c, s0))

    @classmethod
    def from_sigma(cls, sigma: float) -> "EndAngle":
        w = math.sqrt(max(sigma - 1.0, 0.0))
        return cls(math.atan2(1.0, w), math.atan2(w, 1.0))

    @property
    def sin_theta(self) -> float:
        return math.sin(self.theta) if self.theta <= _QUARTER_PI else math.cos(self.phi)

    @property
    def cos_theta(self) -> float:
        return math.sin(self.phi) if self.phi <= _QUARTER_PI else math.cos(self.theta)

    @property
    def sigma(self) -> float:
        st = self.sin_theta
        return math.inf if st == 0.0 else 1.0 / (st * st)


def _geometric_points(start: float, stop: float, ratio: float = 4.0, depth: int = 18):
    """Breakpoints start*ratio**k below ``stop`` (or stop/ratio**k when start == 0)."""
    if start > 0.0:
        pts, p = [], start * ratio
        while p < stop:
            pts.append(p)
            p *= ratio
        return pts
    return [stop / ratio**k for k in range(1, depth + 1)]


def integrate_sine_substituted(g_theta: Callable, end: EndAngle, tol: Tolerances = DEFAULT_TOL,
                               g_phi: Callable | None = None, kinks=None) -> QuadResult:
    """Integral of ``g_theta(theta)`` over [end.theta, pi/2].

    The range is split at pi/4: the upper part is integrated in the
    complement variable phi = pi/2 - theta using ``g_phi(phi)`` (default:
    ``g_theta(pi/2 - phi)``), the lower part in theta with geometric
    breakpoints toward the endpoint nearest theta = 0.  ``kinks`` lists
    values of sin(theta) in (0, 1) where the integrand is not smooth (spline
    knots); they become extra breakpoints.
    """
    if g_phi is None:
        def g_phi(phi):
            return g_theta(_HALF_PI - phi)
    u = np.asarray([] if kinks is None else kinks, dtype=float)
    u = u[(u > 0.0) & (u < 1.0)]
    phi_end = min(end.phi, _QUARTER_PI)
    res = integrate_smooth(g_phi, 0.0, phi_end, tol, points=np.arccos(u))
    if end.phi > _QUARTER_PI:
        pts = _geometric_points(end.theta, _QUARTER_PI) + np.arcsin(u).tolist()
        res = res + integrate_smooth(g_theta, end.theta, _QUARTER_PI, tol, points=pts)
    return res


def integrate_sine_u(g: Callable, end: EndAngle, tol: Tolerances = DEFAULT_TOL, kinks=None) -> QuadResult:
    """Integral over theta in [end.theta, pi/2] of ``g(sin theta)``."""
    return integrate_sine_substituted(lambda th: g(np.sin(th)), end, tol,
                                      g_phi=lambda ph: g(np.cos(ph)), kinks=kinks)


def model_kinks(model, big_a: float):
    """Knot values of a tabulated model as fractions of ``big_a`` (None if smooth)."""
    knots = model.knot_values()
    return None if knots is None else np.asarray(knots) / big_a


class Kernel(enum.Enum):
    RHO = "rho"
    CHI = "chi"


def chart_kernel(kernel: Kernel, model, big_a: float) -> Callable:
    """Sine-substituted integrand in u = sin(theta) for the given kernel."""
    if kernel is Kernel.RHO:
        return lambda u: big_a * u * model.bdot(big_a * u)
    if kernel is Kernel.CHI:
        return lambda u: model.bdot(big_a * u) / u
    raise DomainError(f"unknown kernel {kernel!r}")


def integrate_chart_end(kernel: Kernel, model, big_a: float, end: EndAngle,
                        tol: Tolerances = DEFAULT_TOL) -> QuadResult:
    if kernel is Kernel.CHI and end.theta <= 0.0:
        raise DivergentIntegralError("chi integral down to the big bang is not finite in general")
    if end.phi <= 0.0:
        return QuadResult(0.0, 0.0, 1)
    return integrate_sine_u(chart_kernel(kernel, model, big_a), end, tol, kinks=model_kinks(model, big_a))


def integrate_chart(kernel: Kernel, ctx, tau: float, t_lo: float) -> QuadResult:
    """Chart integral from t_lo to tau for the RHO (proper length) or CHI kernel.

    RHO: int a(t) / sqrt(a(tau)^2 - a(t)^2) dt
    CHI: int a(tau) / (a(t) sqrt(a(tau)^2 - a(t)^2)) dt
    Both are evaluated after substituting a(t) = a(tau) sin(theta).
    """
    tau, t_lo = float(tau), float(t_lo)
    if not tau > 0:
        raise DomainError("tau must be positive")
    if not 0.0 <= t_lo <= tau:
        raise DomainError(f"need 0 <= t_lo <= tau, got t_lo={t_lo!r}, tau={tau!r}")
    model = ctx.model
    big_a = float(model.derivs(tau)[0])
    s0 = 0.0 if t_lo == 0.0 else float(model.derivs(t_lo)[0])
    end = EndAngle.from_ratio(s0, big_a) if t_lo < tau else EndAngle(_HALF_PI, 0.0)
    return integrate_chart_end(kernel, model, big_a, end, ctx.tol)

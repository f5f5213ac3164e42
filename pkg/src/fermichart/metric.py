"""Metric coefficients in Fermi coordinates.

g_tautau has three equivalent closed forms.  T0_INTEGRAL is the production
form.  SIGMA evaluates the sigma-parametrized b'' integral.  CHI_DERIVATIVE
builds -(a(tau)^2 - a(t0)^2) (dchi_t0/dtau)^2 with its integral evaluated
directly in t via t = tau - x^2, with no use of the inverse b, so it
exercises an independent quadrature path.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .chart import (ChartContext, FermiPoint, end_for, max_radius, sigma_from_rho, time_at,
                    _check_tau)
from .errors import ConvergenceError, DomainError
from .numerics import (EndAngle, Kernel, QuadResult, integrate_chart_end, integrate_sine_substituted,
                       integrate_sine_u, integrate_smooth, model_kinks)

CONSISTENCY_THRESHOLD = 1e-6
_HALF_PI = 0.5 * math.pi


class FormDisagreementWarning(RuntimeWarning):
    """The three g_tautau forms disagree beyond the consistency threshold."""


class GttForm(enum.Enum):
    SIGMA = "sigma"
    T0_INTEGRAL = "t0_integral"
    CHI_DERIVATIVE = "chi_derivative"
    ALL = "all"


class GttForms(NamedTuple):
    sigma: float
    t0_integral: float
    chi_derivative: float
    spread: float


@dataclass(frozen=True)
class SkValue:
    k: int
    chi: float
    value: float

    @classmethod
    def of(cls, k: int, chi: float) -> "SkValue":
        return cls(k, float(chi), float(sk(k, float(chi))))


def sk(k: int, chi):
    """S_k(chi): chi for k = 0, sinh(chi) for k = -1."""
    if k == 0:
        return chi
    if k == -1:
        return np.sinh(chi) if isinstance(chi, np.ndarray) else math.sinh(chi)
    raise DomainError(f"curvature index must be 0 or -1, got {k!r}")


def _sinh_minus_x(x: float) -> float:
    if abs(x) >= 0.5:
        return math.sinh(x) - x
    x2 = x * x
    term, total, n = x * x2 / 6.0, 0.0, 3
    while abs(term) > 1e-18 * abs(x * x2):
        total += term
        term *= x2 / ((n + 1) * (n + 2))
        n += 2
    return total


# --------------------------------------------------------------------------
# g_tautau


def _speed_bracket(ctx, big_a, end) -> QuadResult:
    """-a(tau) int_{theta0}^{pi/2} (a''/a'^3)(cos theta0 - cos theta) d theta.

    Added to 1/a'(tau) this equals 1/a'(t0) - a(tau) cos(theta0) int a''/a'^3,
    rewritten by expanding 1/a'(t0) - 1/a'(tau) as an integral so that no
    two large terms cancel when t0 is close to the big bang.
    """
    model = ctx.model
    th0, ph0 = end.theta, end.phi

    def g_theta(th):
        w = 2.0 * np.sin(0.5 * (th + th0)) * np.sin(0.5 * (th - th0))
        return model.accel_ratio(big_a * np.sin(th)) * w

    def g_phi(ph):
        w = 2.0 * np.cos(0.5 * (ph0 + ph)) * np.sin(0.5 * (ph0 - ph))
        return model.accel_ratio(big_a * np.cos(ph)) * w

    return integrate_sine_substituted(g_theta, end, ctx.tol, g_phi=g_phi,
                                      kinks=model_kinks(model, big_a)).scaled(-big_a)


def _bddot_integral(ctx, big_a, end) -> QuadResult:
    model = ctx.model
    return integrate_sine_u(lambda u: model.bddot(big_a * u), end, ctx.tol, kinks=model_kinks(model, big_a))


def _t_domain_integral(ctx, tau: float, t0: float) -> QuadResult:
    """int_{t0}^{tau} (a''/a'^2) (w(t) - w(t0)) dt with w = 1/sqrt(a(tau)^2 - a(t)^2).

    Integrated directly in t away from tau and with t = tau - x^2 near it.
    """
    model = ctx.model
    big_a, ad_tau, add_tau = (float(v) for v in model.derivs(tau))
    a0 = float(model.derivs(t0)[0])
    c = math.sqrt((big_a - a0) * (big_a + a0))
    scale = min(tau, big_a / ad_tau)
    # below x^2 = cut, a(tau) - a(t) loses digits; use its Taylor form instead
    cut = 1e-5 * scale

    d0 = big_a - a0

    def integrand(a, ad, add, gap, rise):
        r = np.sqrt(gap * (big_a + a))
        return (add / ad**2) * rise * (a + a0) / (c * r * (c + r))

    def f_t(t):
        a, ad, add = model.derivs(t)
        return integrand(a, ad, add, big_a - a, a - a0)

    def f_x(x):
        x = np.asarray(x, dtype=float)
        x2 = x * x
        a, ad, add = model.derivs(tau - x2)
        gap = np.where(x2 < cut, x2 * (ad_tau - 0.5 * add_tau * x2), big_a - a)
        # a - a0 as (a(tau) - a0) - gap, smooth even when t0 is close to tau
        return integrand(a, ad, add, gap, d0 - gap) * 2.0 * x

    t_mid = max(t0, tau - 0.5 * scale)
    knots = model.knot_times()
    knots = np.asarray([] if knots is None else knots)
    upper = knots[(knots > t_mid) & (knots < tau)]
    res = integrate_smooth(f_x, 0.0, math.sqrt(tau - t_mid), ctx.tol, points=np.sqrt(tau - upper))
    if t_mid > t0:
        pts = knots[(knots > t0) & (knots < t_mid)].tolist()
        tk = 4.0 * t0
        while tk < t_mid:
            pts.append(tk)
            tk *= 4.0
        res = res + integrate_smooth(f_t, t0, t_mid, ctx.tol, points=pts)
    return res


def _gtt_t0(ctx, tau, end, t0):
    big_a = ctx.a(tau)
    ad_tau = float(ctx.model.derivs(tau)[1])
    res = _speed_bracket(ctx, big_a, end)
    bracket = 1.0 / ad_tau + res.value
    return -((ad_tau * bracket) ** 2), 2 * ad_tau**2 * abs(bracket) * res.abs_error_estimate


def _gtt_sigma(ctx, tau, end, t0):
    """Literal sigma form; subtracts two large terms when t0 is near the big bang."""
    model = ctx.model
    big_a = ctx.a(tau)
    ad_tau = float(model.derivs(tau)[1])
    bdot0 = float(model.bdot(big_a * end.sin_theta))
    res = _bddot_integral(ctx, big_a, end)
    scale = big_a * end.cos_theta
    bracket = bdot0 + scale * res.value
    return -(ad_tau**2) * bracket * bracket, 2 * ad_tau**2 * abs(bracket) * scale * res.abs_error_estimate


def dchi_dtau(ctx: ChartContext, t0: float, tau: float) -> float:
    """Rate of change of chi_t0 with the observer's proper time tau (tau > t0)."""
    return _dchi_dtau(ctx, float(t0), float(tau))[0]


def _dchi_dtau(ctx, t0, tau):
    if not 0 < t0 < tau:
        raise DomainError(f"need 0 < t0 < tau, got t0={t0!r}, tau={tau!r}")
    model = ctx.model
    a_tau, ad_tau, _ = (float(v) for v in model.derivs(tau))
    a0 = float(model.derivs(t0)[0])
    c = math.sqrt((a_tau - a0) * (a_tau + a0))
    res = _t_domain_integral(ctx, tau, t0)
    return 1.0 / c - ad_tau * res.value, ad_tau * res.abs_error_estimate, c


def _gtt_chi(ctx, tau, end, t0):
    rate, err, c = _dchi_dtau(ctx, t0, tau)
    return -(c * rate) ** 2, 2 * c * c * abs(rate) * err


_FORMS = {
    GttForm.SIGMA: _gtt_sigma,
    GttForm.T0_INTEGRAL: _gtt_t0,
    GttForm.CHI_DERIVATIVE: _gtt_chi,
}


def gtt_at(ctx: ChartContext, tau: float, end: EndAngle, form: GttForm = GttForm.T0_INTEGRAL,
           t0: float | None = None):
    """g_tautau at the point with substitution angle ``end``; (value, error) or GttForms."""
    if end.phi == 0.0:
        return GttForms(-1.0, -1.0, -1.0, 0.0) if form is GttForm.ALL else (-1.0, 0.0)
    if t0 is None:
        t0 = time_at(ctx, tau, end)
    if form is GttForm.ALL:
        vals = [_FORMS[f](ctx, tau, end, t0)[0]
                for f in (GttForm.SIGMA, GttForm.T0_INTEGRAL, GttForm.CHI_DERIVATIVE)]
        ref = abs(vals[1])
        spread = (max(vals) - min(vals)) / ref if ref > 0 else 0.0
        return GttForms(vals[0], vals[1], vals[2], spread)
    return _FORMS[form](ctx, tau, end, t0)


def g_tau_tau(ctx: ChartContext, tau: float, rho: float, form: GttForm = GttForm.T0_INTEGRAL):
    """g_tautau(tau, rho); a float, or :class:`GttForms` when ``form`` is ALL."""
    tau = _check_tau(tau)
    sp = sigma_from_rho(ctx, tau, rho)
    out = gtt_at(ctx, tau, sp.angle, form)
    if form is GttForm.ALL:
        if out.spread > CONSISTENCY_THRESHOLD:
            warnings.warn(f"g_tautau forms disagree at tau={tau}, rho={rho}: {out}",
                          FormDisagreementWarning, stacklevel=2)
        return out
    return out[0]


def jacobian(ctx: ChartContext, tau: float, sigma: float) -> float:
    """Jacobian determinant of (tau, sigma) -> (t, chi); requires sigma > 1."""
    tau = _check_tau(tau)
    sigma = float(sigma)
    if not sigma > 1.0:
        raise DomainError(f"sigma must exceed 1, got {sigma!r}")
    return jacobian_at(ctx, tau, EndAngle.from_sigma(sigma))


def jacobian_at(ctx: ChartContext, tau: float, end: EndAngle) -> float:
    model = ctx.model
    big_a = ctx.a(tau)
    ad_tau = float(model.derivs(tau)[1])
    st, ct = end.sin_theta, end.cos_theta
    bdot0 = float(model.bdot(big_a * st))
    k_int = _bddot_integral(ctx, big_a, end).value
    return 0.5 * ad_tau * st * st * bdot0 * (bdot0 * st / ct + big_a * st * k_int)


# --------------------------------------------------------------------------
# lambda_k


def _numerator(ctx: ChartContext, tau: float, end: EndAngle):
    """(rho, chi, a(t0)^2 S_k(chi)^2 - rho^2) along the geodesic, without cancellation."""
    model = ctx.model
    big_a = ctx.a(tau)
    st0 = end.sin_theta
    a0 = big_a * st0
    scale = max(big_a * end.cos_theta, 1e-300)
    tol = ctx.tol.tightened(quad_rel=1e-13, quad_abs=max(1e-15 * scale**3 / max(tau, 1.0)**2, 1e-300),
                            max_subdivisions=max(ctx.tol.max_subdivisions, 200))
    phi0 = end.phi

    def d_theta(th):
        u = np.sin(th)
        return big_a * model.bdot(big_a * u) * (st0 - u * u) / u

    def d_phi(ph):
        u = np.cos(ph)
        diff = -2.0 * np.sin(0.5 * (phi0 + ph)) * np.sin(0.5 * (phi0 - ph)) \
            + 2.0 * u * np.sin(0.5 * ph) ** 2
        return big_a * model.bdot(big_a * u) * diff / u

    def quad(fn):
        try:
            return fn()
        except ConvergenceError as exc:
            return exc.best

    rho = quad(lambda: integrate_chart_end(Kernel.RHO, model, big_a, end, tol)).value
    chi = quad(lambda: integrate_chart_end(Kernel.CHI, model, big_a, end, tol)).value
    kinks = model_kinks(model, big_a)
    diff = quad(lambda: integrate_sine_substituted(d_theta, end, tol, g_phi=d_phi, kinks=kinks)).value
    if ctx.k == 0:
        num = diff * (a0 * chi + rho)
    else:
        e = a0 * _sinh_minus_x(chi) + diff
        num = e * (a0 * math.sinh(chi) + rho)
    return rho, chi, num


def lambda_k(ctx: ChartContext, tau: float, rho: float) -> float:
    """lambda_k(tau, rho) = (a(t0)^2 S_k(chi_t0(tau))^2 - rho^2) / rho^4.

    At rho = 0 the extrapolated limit from :func:`lambda_k_limit` is returned.
    """
    tau = _check_tau(tau)
    rho = float(rho)
    if rho == 0.0:
        return lambda_k_limit(ctx, tau)[0]
    sp = sigma_from_rho(ctx, tau, rho)
    _, _, num = _numerator(ctx, tau, sp.angle)
    return num / rho**4


def lambda_k_limit(ctx: ChartContext, tau: float) -> tuple[float, float]:
    """rho -> 0 limit of lambda_k and an error estimate.

    Richardson extrapolation in rho^2 from rho = h, h/2, h/4 with
    h = 1e-3 * rho_max(tau).
    """
    tau = _check_tau(tau)
    h = 1e-3 * max_radius(ctx, tau)
    l1, l2, l3 = (lambda_k(ctx, tau, h / m) for m in (1.0, 2.0, 4.0))
    r1 = (4.0 * l2 - l1) / 3.0
    r2 = (4.0 * l3 - l2) / 3.0
    best = (16.0 * r2 - r1) / 15.0
    return best, abs(best - r2)


# --------------------------------------------------------------------------
# Line elements


@dataclass(frozen=True)
class MetricSample:
    tau: float
    rho: float
    t0: float
    chi: float
    g_tautau: float
    lambda_k: float
    angular_coeff: float
    form_spread: float
    consistent: bool
    quad_error: float = 0.0


def line_element(ctx: ChartContext, p: FermiPoint) -> MetricSample:
    """Polar metric coefficients at a Fermi point, with all g_tautau forms cross-checked."""
    tau = p.tau
    if p.rho == 0.0:
        lam, lam_err = lambda_k_limit(ctx, tau)
        return MetricSample(tau, 0.0, tau, 0.0, -1.0, lam, 0.0, 0.0, True, lam_err)
    sp = sigma_from_rho(ctx, tau, p.rho)
    end = sp.angle
    t0 = time_at(ctx, tau, end)
    forms = gtt_at(ctx, tau, end, GttForm.ALL, t0=t0)
    g, g_err = gtt_at(ctx, tau, end, GttForm.T0_INTEGRAL, t0=t0)
    _, chi, num = _numerator(ctx, tau, end)
    a0 = ctx.a(t0)
    angular = (a0 * sk(ctx.k, chi)) ** 2
    consistent = forms.spread <= CONSISTENCY_THRESHOLD
    if not consistent:
        warnings.warn(f"g_tautau forms disagree at {p}: {forms}", FormDisagreementWarning,
                      stacklevel=2)
    return MetricSample(tau, p.rho, t0, chi, g, num / p.rho**4, angular, forms.spread,
                        consistent, g_err)


def cartesian_metric(ctx: ChartContext, tau: float, x: float, y: float, z: float) -> np.ndarray:
    """4x4 metric coefficients in Fermi coordinates (tau, x, y, z)."""
    pos = np.array([x, y, z], dtype=float)
    rho = float(np.sqrt(pos @ pos))
    g = np.eye(4)
    if rho == 0.0:
        g[0, 0] = -1.0
        return g
    sample = line_element(ctx, FermiPoint(tau, rho))
    g[0, 0] = sample.g_tautau
    g[1:, 1:] += sample.lambda_k * (rho * rho * np.eye(3) - np.outer(pos, pos))
    return g

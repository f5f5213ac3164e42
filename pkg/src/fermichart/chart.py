"""Fermi chart of a comoving observer: geodesics, coordinate maps, radii, horizons.

Coordinates of a point are either curvature coordinates (t, chi) or Fermi
polar coordinates (tau, rho).  Angles are carried through untouched; the
chart is radially symmetric.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import scalefactor
from .errors import (BeyondHorizonError, DomainError, NoRootError, NotRegularError,
                     OutOfChartError)
from .numerics import (DEFAULT_TOL, OPEN, Divergent, EndAngle, Kernel, Tolerances,
                       find_root_monotone, integrate_chart_end, integrate_smooth,
                       integrate_tail)
from .scalefactor import ScaleFactorModel

_QUARTER_PI = 0.25 * math.pi
_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True, eq=False)
class ChartContext:
    """A regular scale factor, the curvature index k, and numerical tolerances.

    The horizon and radius memo caches are guarded by a lock, so a context
    can be shared between threads.
    """

    model: ScaleFactorModel
    k: int = 0
    tol: Tolerances = DEFAULT_TOL
    check_t_max: float = 100.0
    require_regular: bool = True
    _horizon_cache: dict = field(default_factory=dict, repr=False)
    _radius_cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.k not in (0, -1):
            raise DomainError(f"curvature index must be 0 or -1, got {self.k!r}")
        if self.require_regular:
            t_check = min(self.check_t_max, self.model.t_max)
            report = scalefactor.regularity_check(self.model, t_check, 64,
                                                  self.tol.tol_condition)
            if not report.is_regular:
                worst = report.condition_violations[:1]
                raise NotRegularError(
                    f"{type(self.model).__name__} is not regular on (0, {t_check:g}]: "
                    f"big_bang_ok={report.big_bang_ok}, monotone_ok={report.monotone_ok}, "
                    f"max a*a''/a'^2 = {report.max_condition_value:.6g} at {worst}")

    def _cached(self, cache: dict, key: float, compute):
        with self._lock:
            if key in cache:
                return cache[key]
        value = compute()
        with self._lock:
            cache.setdefault(key, value)
        return value

    def a(self, t: float) -> float:
        return float(self.model.derivs(t)[0])


@dataclass(frozen=True)
class CurvaturePoint:
    t: float
    chi: float
    theta: Optional[float] = None
    phi: Optional[float] = None
    error: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError(f"cosmological time must be positive, got {self.t!r}")
        if not self.chi >= 0:
            raise DomainError(f"chi must be non-negative, got {self.chi!r}")


@dataclass(frozen=True)
class FermiPoint:
    tau: float
    rho: float
    theta: Optional[float] = None
    phi: Optional[float] = None
    error: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"proper time must be positive, got {self.tau!r}")
        if not self.rho >= 0:
            raise DomainError(f"rho must be non-negative, got {self.rho!r}")


@dataclass(frozen=True)
class SigmaParam:
    """Geodesic parameter sigma = (a(tau)/a(t))**2 with its substitution angle."""

    sigma: float
    angle: EndAngle

    def __post_init__(self):
        if not self.sigma >= 1.0:
            raise DomainError(f"sigma must be >= 1, got {self.sigma!r}")

    @classmethod
    def from_angle(cls, angle: EndAngle) -> "SigmaParam":
        return cls(angle.sigma, angle)


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not tau > 0 or not math.isfinite(tau):
        raise DomainError(f"tau must be positive and finite, got {tau!r}")
    return tau


def end_for(ctx: ChartContext, tau: float, t0: float) -> EndAngle:
    """Substitution angle where the geodesic from beta(tau) reaches time t0."""
    if t0 >= tau:
        return EndAngle(_HALF_PI, 0.0)
    s0 = 0.0 if t0 == 0.0 else ctx.a(t0)
    return EndAngle.from_ratio(s0, ctx.a(tau))


def _end_after(ctx: ChartContext, t0: float, lapse: float) -> EndAngle:
    """Like :func:`end_for` at tau = t0 + lapse, keeping a(tau) - a(t0) accurate for tiny lapses."""
    a0, ad0, add0 = (float(v) for v in ctx.model.derivs(t0))
    if lapse < 1e-5 * min(t0, a0 / ad0):
        gap = lapse * (ad0 + 0.5 * add0 * lapse)
    else:
        gap = ctx.a(t0 + lapse) - a0
    return EndAngle.from_gap(a0, gap)


def time_at(ctx: ChartContext, tau: float, end: EndAngle) -> float:
    """t(tau, sigma) = b(a(tau)/sqrt(sigma))."""
    if end.phi == 0.0:
        return tau
    return float(ctx.model.b(ctx.a(tau) * end.sin_theta))


# --------------------------------------------------------------------------
# Horizon


def chi_horizon(ctx: ChartContext, t0: float) -> float:
    """Comoving coordinate of the event horizon at time t0; ``math.inf`` if none."""
    t0 = float(t0)
    if not t0 > 0:
        raise DomainError("t0 must be positive")
    if math.isfinite(ctx.model.t_max):
        raise scalefactor.RangeError("the horizon integral needs a model defined on [t0, inf)")

    def compute():
        model = ctx.model
        res = integrate_tail(lambda t: 1.0 / model.derivs(t)[0], t0, ctx.tol)
        return math.inf if isinstance(res, Divergent) else res.value

    return ctx._cached(ctx._horizon_cache, t0, compute)


def _horizon_or_none(ctx: ChartContext, t0: float) -> Optional[float]:
    try:
        return chi_horizon(ctx, t0)
    except scalefactor.RangeError:
        return None


# --------------------------------------------------------------------------
# Geodesics and radial integrals


def _chi_from_end(ctx: ChartContext, tau: float, end: EndAngle):
    return integrate_chart_end(Kernel.CHI, ctx.model, ctx.a(tau), end, ctx.tol)


def _rho_from_end(ctx: ChartContext, tau: float, end: EndAngle):
    return integrate_chart_end(Kernel.RHO, ctx.model, ctx.a(tau), end, ctx.tol)


def geodesic_point(ctx: ChartContext, tau: float, sigma: float) -> CurvaturePoint:
    """Point with parameter sigma on the spacelike geodesic orthogonal to beta at tau."""
    tau = _check_tau(tau)
    sigma = float(sigma)
    if not sigma >= 1.0:
        raise DomainError(f"sigma must be >= 1, got {sigma!r}")
    return point_at_angle(ctx, tau, EndAngle.from_sigma(sigma))


def point_at_angle(ctx: ChartContext, tau: float, end: EndAngle) -> CurvaturePoint:
    if end.phi == 0.0:
        return CurvaturePoint(tau, 0.0)
    res = _chi_from_end(ctx, tau, end)
    return CurvaturePoint(time_at(ctx, tau, end), res.value, error=res.abs_error_estimate)


def proper_length(ctx: ChartContext, tau: float, t0: float) -> float:
    """Proper length rho of the geodesic from beta(tau) down to cosmological time t0."""
    tau = _check_tau(tau)
    t0 = float(t0)
    if not 0.0 <= t0 < tau:
        if t0 == tau:
            return 0.0
        raise DomainError(f"need 0 <= t0 < tau, got t0={t0!r}, tau={tau!r}")
    if t0 == 0.0:
        return max_radius(ctx, tau)
    return _rho_from_end(ctx, tau, end_for(ctx, tau, t0)).value


def max_radius(ctx: ChartContext, tau: float) -> float:
    """Proper radius of the Fermi spaceslice at tau (geodesic length to the big bang)."""
    tau = _check_tau(tau)
    return ctx._cached(ctx._radius_cache, tau,
                       lambda: _rho_from_end(ctx, tau, EndAngle(0.0, _HALF_PI)).value)


def chi_t0(ctx: ChartContext, t0: float, tau: float) -> float:
    """chi where the geodesic orthogonal to beta at tau crosses time t0."""
    t0, tau = float(t0), float(tau)
    if not t0 > 0:
        raise DomainError("t0 must be positive")
    if tau < t0:
        raise DomainError(f"need tau >= t0, got tau={tau!r}, t0={t0!r}")
    if tau == t0:
        return 0.0
    return _chi_from_end(ctx, tau, end_for(ctx, tau, t0)).value


def _rho_at_split(ctx: ChartContext, tau: float) -> float:
    return _rho_from_end(ctx, tau, EndAngle(_QUARTER_PI, _QUARTER_PI)).value


def sigma_from_rho(ctx: ChartContext, tau: float, rho: float) -> SigmaParam:
    """The geodesic parameter sigma at proper distance rho from beta(tau).

    Solved in the substitution angle, where rho is monotone and bounded:
    below the pi/4 split the root is sought in phi0, above it in theta0.
    """
    tau = _check_tau(tau)
    rho = float(rho)
    if rho < 0:
        raise DomainError("rho must be non-negative")
    if rho == 0.0:
        return SigmaParam(1.0, EndAngle(_HALF_PI, 0.0))
    rho_max = max_radius(ctx, tau)
    if rho >= rho_max:
        raise OutOfChartError(f"rho = {rho!r} is not below the spaceslice radius {rho_max!r}")
    big_a = ctx.a(tau)
    model = ctx.model
    tol = ctx.tol
    root_tol = tol.tightened(root_rel=min(tol.root_rel, 1e-14))
    rho_split = _rho_at_split(ctx, tau)
    if rho <= rho_split:
        def f(phi):
            return integrate_chart_end(Kernel.RHO, model, big_a, EndAngle.from_phi(phi), tol).value - rho
        phi = find_root_monotone(f, 0.0, _QUARTER_PI, root_tol)
        return SigmaParam.from_angle(EndAngle.from_phi(phi))

    def g(theta):
        upper = integrate_chart_end(Kernel.RHO, model, big_a, EndAngle(theta, _HALF_PI - theta), tol)
        return upper.value - rho

    theta = find_root_monotone(g, 0.0, _QUARTER_PI, root_tol)
    return SigmaParam.from_angle(EndAngle.from_theta(theta))


# --------------------------------------------------------------------------
# Coordinate maps


def to_fermi(ctx: ChartContext, p: CurvaturePoint) -> FermiPoint:
    """Map curvature coordinates (t, chi) to Fermi coordinates (tau, rho)."""
    if p.chi == 0.0:
        return FermiPoint(p.t, 0.0, p.theta, p.phi)
    horizon = _horizon_or_none(ctx, p.t)
    if horizon is not None and p.chi >= horizon:
        raise BeyondHorizonError(
            f"chi = {p.chi!r} is not inside the event horizon chi_horiz({p.t!r}) = {horizon!r}")
    t0 = p.t
    model = ctx.model
    s0 = ctx.a(t0)

    # solve for the lapse tau - t0, so the root tolerance is relative to it;
    # chi grows like its square root near the worldline
    def f(lapse):
        tau = t0 + lapse
        if tau > model.t_max:
            raise scalefactor.RangeError("tau beyond tabulated range")
        if tau <= t0:
            return -p.chi
        return integrate_chart_end(Kernel.CHI, model, ctx.a(tau),
                                   _end_after(ctx, t0, lapse), ctx.tol).value - p.chi

    # leading order near the worldline: chi^2 ~ 2 lapse / (a0 a0')
    guess = 0.5 * s0 * float(model.derivs(t0)[1]) * p.chi * p.chi
    try:
        lapse = find_root_monotone(f, 0.0, OPEN, ctx.tol.tightened(root_rel=min(ctx.tol.root_rel, 1e-14)),
                                   scale=guess)
    except NoRootError as exc:
        raise OutOfChartError(f"no Fermi time found for {p!r}: {exc}") from exc
    tau = t0 + lapse
    res = _rho_from_end(ctx, tau, _end_after(ctx, t0, lapse))
    return FermiPoint(tau, res.value, p.theta, p.phi, error=res.abs_error_estimate)


def from_fermi(ctx: ChartContext, p: FermiPoint) -> CurvaturePoint:
    """Map Fermi coordinates (tau, rho) to curvature coordinates (t, chi)."""
    if p.rho == 0.0:
        return CurvaturePoint(p.tau, 0.0, p.theta, p.phi)
    sp = sigma_from_rho(ctx, p.tau, p.rho)
    q = point_at_angle(ctx, p.tau, sp.angle)
    return CurvaturePoint(q.t, q.chi, p.theta, p.phi, error=q.error)


def in_chart(ctx: ChartContext, p: CurvaturePoint | FermiPoint) -> tuple[bool, float]:
    """Whether p lies in the (open) maximal Fermi chart, with distance to its boundary.

    The margin is measured in the point's own radial coordinate and is
    ``math.inf`` when there is no horizon.
    """
    if isinstance(p, FermiPoint):
        margin = max_radius(ctx, p.tau) - p.rho
        return margin > 0, margin
    horizon = chi_horizon(ctx, p.t)
    margin = horizon - p.chi
    return margin > 0, margin


def chi_t0_gap_bound(ctx: ChartContext, t0: float, tau: float) -> tuple[float, float]:
    """(chi_t0(tau) - int_{t0}^{tau} dt/a, 1/adot(tau)): the gap and its upper bound."""
    model = ctx.model
    pts = np.geomspace(t0, tau, 12)[1:-1]
    knots = model.knot_times()
    if knots is not None:
        pts = np.concatenate([pts, knots])
    direct = integrate_smooth(lambda t: 1.0 / model.derivs(t)[0], t0, tau, ctx.tol, points=pts).value
    return chi_t0(ctx, t0, tau) - direct, 1.0 / float(model.derivs(tau)[1])

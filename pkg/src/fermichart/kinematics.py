"""Relative velocities of comoving test particles seen by the central observer."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chart import ChartContext, CurvaturePoint, _check_tau, _rho_from_end, end_for, to_fermi
from .errors import DomainError
from .metric import GttForm, _speed_bracket, gtt_at
from .numerics import EndAngle, integrate_sine_substituted, model_kinks

MILNE_EQUALITY_TOL = 1e-10
REGIME_SAMPLES = 64


class Regime(enum.Enum):
    NON_INFLATIONARY = "non_inflationary"
    INFLATIONARY = "inflationary"
    MIXED = "mixed"


def acceleration_regime(model, t_lo: float, t_hi: float, n: int = REGIME_SAMPLES) -> Regime:
    """Sign pattern of a'' on (t_lo, t_hi).

    The probes are n log-spaced interior points plus n evenly spaced ones,
    so that a sign change near either end is seen.  ``t_lo = 0`` is replaced
    by ``1e-9 * t_hi`` for the log grid.  Identically zero acceleration counts
    as non-inflationary.
    """
    lo = t_lo if t_lo > 0 else 1e-9 * t_hi
    ts = np.concatenate([np.geomspace(lo, t_hi, n + 2)[1:-1], np.linspace(t_lo, t_hi, n + 2)[1:-1]])
    add = model.derivs(ts)[2]
    if np.all(add <= 0):
        return Regime.NON_INFLATIONARY
    if np.all(add >= 0):
        return Regime.INFLATIONARY
    return Regime.MIXED


@dataclass(frozen=True)
class VelocitySample:
    tau: float
    t0: float
    rho: float
    v_kin: float
    v_fermi: float
    hubble_term: float
    correction: float
    light_bound: float
    regime: Regime
    identity_residual: float
    hubble_ok: Optional[bool] = None
    ordering: Optional[str] = None
    ordering_ok: Optional[bool] = None

    @property
    def metric_residual(self) -> float:
        """Relative mismatch of -g_tautau against (v_fermi / v_kin)^2."""
        lhs = self.light_bound**2
        if self.v_kin == 0.0:
            return abs(lhs - 1.0)
        return abs(lhs - (self.v_fermi / self.v_kin) ** 2) / lhs


def _check_times(tau, t0, allow_equal=False):
    tau = _check_tau(tau)
    t0 = float(t0)
    ok = 0 < t0 <= tau if allow_equal else 0 < t0 < tau
    if not ok:
        rel = "<=" if allow_equal else "<"
        raise DomainError(f"need 0 < t0 {rel} tau, got t0={t0!r}, tau={tau!r}")
    return tau, t0


def v_kin_comoving(ctx: ChartContext, tau: float, t0: float) -> float:
    """Kinematic relative speed sqrt(1 - a(t0)^2/a(tau)^2)."""
    tau, t0 = _check_times(tau, t0, allow_equal=True)
    if t0 == tau:
        return 0.0
    return end_for(ctx, tau, t0).cos_theta


def _v_fermi_at(ctx, tau, end):
    model = ctx.model
    big_a = ctx.a(tau)
    ad_tau = float(model.derivs(tau)[1])
    return end.cos_theta * (1.0 + ad_tau * _speed_bracket(ctx, big_a, end).value)


def v_fermi_comoving(ctx: ChartContext, tau: float, t0: float) -> float:
    """Fermi relative speed of the comoving particle crossing the spaceslice at time t0."""
    tau, t0 = _check_times(tau, t0)
    return _v_fermi_at(ctx, tau, end_for(ctx, tau, t0))


def _correction_at(ctx, tau, end):
    model = ctx.model
    big_a = ctx.a(tau)
    a_tau, ad_tau, _ = (float(v) for v in model.derivs(tau))
    th0, ph0 = end.theta, end.phi

    def g_theta(th):
        # sin^2(th) - sin^2(th0)
        return model.accel_ratio(big_a * np.sin(th)) * np.sin(th - th0) * np.sin(th + th0)

    def g_phi(ph):
        return model.accel_ratio(big_a * np.cos(ph)) * np.sin(ph0 - ph) * np.sin(ph0 + ph)

    res = integrate_sine_substituted(g_theta, end, ctx.tol, g_phi=g_phi, kinks=model_kinks(model, big_a))
    return (ad_tau / a_tau) * big_a * big_a * res.value


def _ordering(ctx, tau, t0, v_kin, v_fermi, light_bound):
    full = acceleration_regime(ctx.model, 0.0, tau)
    probes = np.linspace(0.0, tau, REGIME_SAMPLES + 2)[1:-1]
    if full is Regime.NON_INFLATIONARY and np.all(ctx.model.derivs(probes)[2] == 0):
        ok = abs(v_fermi - v_kin) <= MILNE_EQUALITY_TOL and abs(light_bound - 1) <= MILNE_EQUALITY_TOL
        return "v_fermi = v_kin", ok
    if full is Regime.NON_INFLATIONARY:
        return "v_fermi > v_kin", bool(v_fermi > v_kin and light_bound > 1)
    if acceleration_regime(ctx.model, t0, tau) is Regime.INFLATIONARY:
        # 1 - v_kin from the sine side, as v_kin rounds to 1 for tiny t0
        below_one = end_for(ctx, tau, t0).sin_theta > 0
        return "v_fermi < v_kin < 1", bool(v_fermi < v_kin and below_one and light_bound < 1)
    return None, None


def hubble_decomposition(ctx: ChartContext, tau: float, t0: float) -> VelocitySample:
    """Velocity sample with the split v_fermi = H(tau) rho - correction.

    ``light_bound`` is sqrt(-g_tautau) from the chi-derivative form, which
    shares no quadrature with v_fermi, so ``metric_residual`` is a genuine
    cross-check.  ``hubble_ok`` compares v_fermi with H rho according to the
    sign of a'' on (t0, tau) and is None for a MIXED regime.
    """
    tau, t0 = _check_times(tau, t0)
    end = end_for(ctx, tau, t0)
    return _sample(ctx, tau, t0, end, with_ordering=False)


def classify_speeds(ctx: ChartContext, tau: float, t0: float) -> VelocitySample:
    """:func:`hubble_decomposition` plus the ordering of v_fermi, v_kin and 1."""
    tau, t0 = _check_times(tau, t0)
    return _sample(ctx, tau, t0, end_for(ctx, tau, t0), with_ordering=True)


def _sample(ctx, tau, t0, end: EndAngle, with_ordering: bool) -> VelocitySample:
    model = ctx.model
    a_tau, ad_tau, _ = (float(v) for v in model.derivs(tau))
    hub = ad_tau / a_tau
    rho = _rho_from_end(ctx, tau, end).value
    v_kin = end.cos_theta
    v_fermi = _v_fermi_at(ctx, tau, end)
    corr = _correction_at(ctx, tau, end)
    g_chi, _ = gtt_at(ctx, tau, end, GttForm.CHI_DERIVATIVE, t0=t0)
    light = math.sqrt(-g_chi)
    hubble_term = hub * rho
    residual = abs(v_fermi - (hubble_term - corr))
    regime = acceleration_regime(model, t0, tau)
    slack = MILNE_EQUALITY_TOL * max(1.0, hubble_term)
    if regime is Regime.NON_INFLATIONARY:
        hubble_ok = v_fermi >= hubble_term - slack
    elif regime is Regime.INFLATIONARY:
        hubble_ok = v_fermi <= hubble_term + slack
    else:
        hubble_ok = None
    ordering = ordering_ok = None
    if with_ordering:
        ordering, ordering_ok = _ordering(ctx, tau, t0, v_kin, v_fermi, light)
    return VelocitySample(tau, t0, rho, v_kin, v_fermi, hubble_term, corr, light, regime,
                          residual, bool(hubble_ok) if hubble_ok is not None else None,
                          ordering, ordering_ok)


def distance_sandwich(ctx: ChartContext, p: CurvaturePoint) -> tuple[float, float, float]:
    """(a(t)/a(tau) d, rho, a(tau)/a(t) d) with d = a(t) chi and (tau, rho) = to_fermi(p)."""
    if p.chi == 0.0:
        return 0.0, 0.0, 0.0
    fp = to_fermi(ctx, p)
    a_t = ctx.a(p.t)
    ratio = a_t / ctx.a(fp.tau)
    d = a_t * p.chi
    return ratio * d, fp.rho, d / ratio

"""Named invariant checks over a single model, as run by ``fermichart verify``.

Each check returns a :class:`CheckResult` whose ``worst_margin`` is the
smallest slack (allowed minus observed) over its probes; a negative margin
means a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.special import gamma

from . import chart as ch
from .chart import ChartContext, CurvaturePoint, FermiPoint
from .errors import FermiChartError, RangeError
from .kinematics import Regime, acceleration_regime, classify_speeds, distance_sandwich
from .metric import GttForm, g_tau_tau, jacobian
from .numerics import EndAngle
from .scalefactor import PowerLaw, hubble


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst_margin: float
    detail: str = ""
    test_id: str = ""
    applicable: bool = True


@dataclass(frozen=True)
class VerifyConfig:
    taus: tuple[float, ...] = (0.5, 1.0, 2.0)
    rho_fractions: tuple[float, ...] = (0.05, 0.3, 0.6, 0.9)
    t0_fractions: tuple[float, ...] = (0.05, 0.3, 0.7, 0.95)
    n_random: int = 12
    seed: int = 20240611
    form_tol: float = 1e-7
    identity_tol: float = 1e-7
    bound_slack: float = 1e-9


def power_law_radius_ratio(alpha: float) -> float:
    """rho_M(tau)/tau for a = t^alpha."""
    return math.sqrt(math.pi) * gamma((1 + alpha) / (2 * alpha)) / gamma(1 / (2 * alpha))


def _tau_cap(ctx, hi):
    return min(hi, 0.5 * ctx.model.t_max)


_TESTS = "tests/test_acceptance.py::"


def _result(name, margins, detail, test):
    worst = float(min(margins)) if margins else math.inf
    return CheckResult(name, bool(worst >= 0), worst, detail, _TESTS + test)


def _na(name, why, test):
    return CheckResult(name, True, math.inf, why, _TESTS + test, applicable=False)


def check_radius_formula(ctx, cfg):
    if not isinstance(ctx.model, PowerLaw):
        return _na("radius_power_law", "model is not a power law", "test_c01_power_law_radius")
    ratio = power_law_radius_ratio(ctx.model.alpha)
    margins = []
    for tau in cfg.taus:
        rel = abs(ch.max_radius(ctx, tau) / tau - ratio) / ratio
        margins.append(1e-8 - rel)
    return _result("radius_power_law", margins, f"rho_M/tau vs {ratio:.12g}", "test_c01_power_law_radius")


def check_milne(ctx, cfg):
    m = ctx.model
    if not (isinstance(m, PowerLaw) and m.alpha == 1.0):
        return _na("milne_oracle", "model is not Milne", "test_c03_milne_oracle")
    margins, worst_g = [], 0.0
    for t0 in (0.5, 1.0, 2.0):
        for chi in (0.1, 0.7, 1.5):
            fp = ch.to_fermi(ctx, CurvaturePoint(t0, chi))
            err = max(abs(fp.tau - t0 * math.cosh(chi)), abs(fp.rho - t0 * math.sinh(chi)))
            back = ch.from_fermi(ctx, fp)
            err = max(err, abs(back.t - t0), abs(back.chi - chi))
            g = g_tau_tau(ctx, fp.tau, fp.rho, GttForm.ALL)
            gerr = max(abs(g.sigma + 1), abs(g.t0_integral + 1), abs(g.chi_derivative + 1))
            worst_g = max(worst_g, gerr)
            margins += [1e-9 - err, 1e-9 - gerr]
    return _result("milne_oracle", margins, f"g_tautau = -1 within {worst_g:.3g}", "test_c03_milne_oracle")


def check_radius_bounds(ctx, cfg):
    rng = np.random.default_rng(cfg.seed)
    margins = []
    for tau in rng.uniform(0.1, _tau_cap(ctx, 5.0), cfg.n_random):
        tau = float(tau)
        r, h = ch.max_radius(ctx, tau), hubble(ctx.model, tau)
        margins.append(0.5 * math.pi / h + cfg.bound_slack - r)
        if acceleration_regime(ctx.model, 0.0, tau) is Regime.NON_INFLATIONARY:
            margins.append(1.0 / h + cfg.bound_slack - r)
    return _result("radius_bounds", margins, "rho_M <= (pi/2)/H, and <= 1/H without inflation",
                   "test_c04_radius_bounds")


def check_horizon(ctx, cfg):
    margins = []
    try:
        for tau in cfg.taus:
            for f in cfg.t0_fractions:
                t0 = f * tau
                horizon = ch.chi_horizon(ctx, t0)
                chi = ch.chi_t0(ctx, t0, tau)
                gap, bound = ch.chi_t0_gap_bound(ctx, t0, tau)
                if math.isfinite(horizon):
                    margins.append(horizon - chi)
                margins += [gap + 1e-12, bound - gap + 1e-12]
    except RangeError as exc:
        return _na("horizon", str(exc), "test_c05_horizon")
    return _result("horizon", margins, "chi_t0 < chi_horiz and 0 <= gap <= 1/adot(tau)", "test_c05_horizon")


def _rho_grid(ctx, cfg):
    for tau in cfg.taus:
        rmax = ch.max_radius(ctx, tau)
        for f in cfg.rho_fractions:
            yield tau, f * rmax


def _t0_grid(cfg):
    for tau in cfg.taus:
        for f in cfg.t0_fractions:
            yield tau, f * tau


def check_forms(ctx, cfg):
    margins, worst = [], 0.0
    for tau, rho in _rho_grid(ctx, cfg):
        g = g_tau_tau(ctx, tau, rho, GttForm.ALL)
        worst = max(worst, g.spread)
        margins.append(cfg.form_tol - g.spread)
    return _result("gtt_three_forms", margins, f"max relative spread {worst:.3g}", "test_c06_metric_forms")


def check_velocity(ctx, cfg):
    id_m, dec_m, hub_m, ord_m = [], [], [], []
    non_super = []
    for tau, t0 in _t0_grid(cfg):
        s = classify_speeds(ctx, tau, t0)
        id_m.append(cfg.identity_tol - s.metric_residual)
        dec_m.append(1e-9 * max(1.0, s.v_fermi) - s.identity_residual)
        if s.hubble_ok is not None:
            hub_m.append(abs(s.v_fermi - s.hubble_term) if s.hubble_ok else -abs(s.v_fermi - s.hubble_term))
        if s.ordering_ok is not None:
            ord_m.append(1.0 if s.ordering_ok else -1.0)
        if s.regime is Regime.INFLATIONARY:
            non_super.append(1.0 - s.v_fermi)
    return [
        _result("velocity_metric_identity", id_m, "-g_tautau = (v_fermi/v_kin)^2", "test_c07_velocity_identity"),
        _result("hubble_decomposition", dec_m, "v_fermi = H rho - correction", "test_c08_hubble_inequalities"),
        _result("hubble_inequality", hub_m, "sign of v_fermi - H rho follows a''", "test_c08_hubble_inequalities"),
        _result("speed_ordering", ord_m + non_super, "v_fermi vs v_kin vs 1", "test_c09_superluminal"),
    ]


def check_jacobian(ctx, cfg):
    margins = []
    for tau in cfg.taus:
        for sigma in (1.01, 1.5, 4.0, 50.0):
            j = jacobian(ctx, tau, sigma)
            end = EndAngle.from_sigma(sigma)
            bdot = float(ctx.model.bdot(ctx.a(tau) * end.sin_theta))
            rho = ch._rho_from_end(ctx, tau, end).value
            if rho >= ch.max_radius(ctx, tau):
                continue
            gs = g_tau_tau(ctx, tau, rho, GttForm.SIGMA)
            alt = -4 * sigma**2 * (sigma - 1) * j * j / bdot**2
            margins += [j, 1e-8 - abs(alt - gs) / abs(gs)]
    return _result("jacobian", margins, "J > 0 and g_tautau = -4 s^2 (s-1) J^2 / b'^2", "test_c11_properties")


def check_properties(ctx, cfg):
    rng = np.random.default_rng(cfg.seed)
    margins = []
    taus = np.sort(rng.uniform(0.2, _tau_cap(ctx, 4.0), cfg.n_random))
    radii = [ch.max_radius(ctx, float(t)) for t in taus]
    margins += list(np.diff(radii))
    t0 = float(taus[0]) * 0.5
    chis = [ch.chi_t0(ctx, t0, float(t)) for t in taus]
    margins += list(np.diff(chis))
    for tau in taus[:4]:
        tau = float(tau)
        ts = [ch.geodesic_point(ctx, tau, s).t for s in (1.0, 1.5, 3.0, 10.0)]
        margins += list(-np.diff(ts))
        for f in (0.2, 0.7):
            rho = f * ch.max_radius(ctx, tau)
            q = ch.from_fermi(ctx, FermiPoint(tau, rho))
            back = ch.to_fermi(ctx, q)
            margins.append(1e-8 - abs(back.tau - tau) / tau - abs(back.rho - rho) / max(rho, 1e-300))
            if q.chi > 0:
                lo, r, hi = distance_sandwich(ctx, q)
                margins += [r - lo, hi - r]
    return _result("properties", [float(m) for m in margins],
                   "monotone radii and chi_t0, t decreasing along geodesics, round trips, sandwich",
                   "test_c11_properties")


CHECKS: tuple[Callable, ...] = (check_radius_formula, check_milne, check_radius_bounds, check_horizon,
                                check_forms, check_velocity, check_jacobian, check_properties)


def run_checks(ctx: ChartContext, cfg: VerifyConfig = VerifyConfig()) -> list[CheckResult]:
    t_hi = ctx.model.t_max
    if math.isfinite(t_hi):
        # keep probes inside a tabulated range
        taus = tuple(t for t in cfg.taus if t < 0.5 * t_hi) or (0.25 * t_hi,)
        cfg = replace(cfg, taus=taus)
    out: list[CheckResult] = []
    for check in CHECKS:
        name = check.__name__.removeprefix("check_")
        try:
            res = check(ctx, cfg)
        except FermiChartError as exc:
            res = CheckResult(name, False, -math.inf, f"{type(exc).__name__}: {exc}")
        out.extend(res if isinstance(res, list) else [res])
    return out

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermichart import (ChartContext, DomainError, FermiPoint, GttForm, OutOfChartError, PowerLaw, SkValue,
                        cartesian_metric, dchi_dtau, g_tau_tau, geodesic_point, hubble, jacobian, lambda_k,
                        lambda_k_limit, line_element, max_radius, milne, sk, to_fermi)
from fermichart.chart import CurvaturePoint, chi_t0
from fermichart.metric import FormDisagreementWarning

from conftest import BUILTINS

FORMS = (GttForm.SIGMA, GttForm.T0_INTEGRAL, GttForm.CHI_DERIVATIVE)


class TestSk:
    def test_values(self):
        assert sk(0, 0.7) == 0.7
        assert sk(-1, 0.7) == math.sinh(0.7)
        assert SkValue.of(-1, 1.0).value == math.sinh(1.0)

    def test_bad_k(self):
        with pytest.raises(DomainError):
            sk(1, 0.3)


class TestGttMilne:
    @pytest.mark.parametrize("form", FORMS)
    @pytest.mark.parametrize("tau,f", [(0.5, 0.1), (2.0, 0.5), (7.0, 0.95)])
    def test_minus_one(self, milne_ctx, form, tau, f):
        rho = f * max_radius(milne_ctx, tau)
        assert abs(g_tau_tau(milne_ctx, tau, rho, form) + 1) < 1e-12

    def test_worldline(self, contexts):
        for ctx in contexts.values():
            assert g_tau_tau(ctx, 1.0, 0.0) == -1.0


class TestGttForms:
    @pytest.mark.parametrize("name", list(BUILTINS))
    def test_agree(self, contexts, name):
        ctx = contexts[name]
        for tau in (0.4, 1.5):
            for f in (1e-4, 0.3, 0.9):
                g = g_tau_tau(ctx, tau, f * max_radius(ctx, tau), GttForm.ALL)
                assert g.spread < 1e-9
                assert g.sigma < 0

    @pytest.mark.parametrize("name", list(BUILTINS))
    def test_small_rho_limit(self, contexts, name):
        ctx = contexts[name]
        assert g_tau_tau(ctx, 1.0, 1e-7 * max_radius(ctx, 1.0)) == pytest.approx(-1.0, abs=1e-9)

    def test_chi_derivative_against_finite_difference(self):
        ctx = ChartContext(PowerLaw(2.0))
        t0, tau, h = 0.5, 1.5, 1e-5
        fd = (chi_t0(ctx, t0, tau + h) - chi_t0(ctx, t0, tau - h)) / (2 * h)
        assert dchi_dtau(ctx, t0, tau) == pytest.approx(fd, rel=1e-7)
        assert dchi_dtau(ctx, t0, tau) > 0

    def test_out_of_chart(self):
        ctx = ChartContext(PowerLaw(2.0))
        with pytest.raises(OutOfChartError):
            g_tau_tau(ctx, 1.0, 2 * max_radius(ctx, 1.0))

    def test_no_warning_when_consistent(self):
        ctx = ChartContext(PowerLaw(3.0))
        with warnings.catch_warnings():
            warnings.simplefilter("error", FormDisagreementWarning)
            g_tau_tau(ctx, 1.0, 0.5 * max_radius(ctx, 1.0), GttForm.ALL)


class TestSignDichotomy:
    def test_slow_expansion_superluminal_coefficient(self):
        ctx = ChartContext(PowerLaw(0.5))
        fp = to_fermi(ctx, CurvaturePoint(0.25, chi_t0(ctx, 0.25, 1.0)))
        assert fp.tau == pytest.approx(1.0, rel=1e-10)
        assert -g_tau_tau(ctx, 1.0, fp.rho) > 1

    @pytest.mark.parametrize("alpha,above", [(0.5, True), (0.8, True), (2.0, False), (3.0, False)])
    def test_sign(self, alpha, above):
        ctx = ChartContext(PowerLaw(alpha))
        for f in (0.2, 0.6, 0.95):
            g = g_tau_tau(ctx, 1.0, f * max_radius(ctx, 1.0))
            assert (-g > 1) == above

    @pytest.mark.parametrize("alpha", [0.5, 0.8])
    def test_boundary_limit(self, alpha):
        ctx = ChartContext(PowerLaw(alpha))
        tau = 1.3
        radius = max_radius(ctx, tau)
        vals = [math.sqrt(-g_tau_tau(ctx, tau, (1 - e) * radius)) for e in (1e-4, 1e-6, 1e-9)]
        target = radius / tau
        errs = [abs(v - target) for v in vals]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-5 * target


class TestJacobian:
    def test_milne(self, milne_ctx):
        assert jacobian(milne_ctx, 2.0, 4.0) == pytest.approx(1 / (8 * math.sqrt(3)), rel=1e-12)

    def test_domain(self, milne_ctx):
        with pytest.raises(DomainError):
            jacobian(milne_ctx, 2.0, 1.0)

    @pytest.mark.parametrize("name", list(BUILTINS))
    def test_against_finite_differences(self, contexts, name):
        ctx = contexts[name]
        tau, sigma = 1.2, 2.5
        h = 1e-5

        def point(ta, s):
            q = geodesic_point(ctx, ta, s)
            return np.array([q.t, q.chi])

        d_tau = (point(tau + h, sigma) - point(tau - h, sigma)) / (2 * h)
        d_sig = (point(tau, sigma + h) - point(tau, sigma - h)) / (2 * h)
        det = d_tau[0] * d_sig[1] - d_tau[1] * d_sig[0]
        j = jacobian(ctx, tau, sigma)
        assert j > 0
        assert j == pytest.approx(abs(det), rel=1e-6)


class TestLambda:
    @pytest.mark.parametrize("tau,rho", [(2.0, 1.0), (1.0, 0.2), (5.0, 4.5)])
    def test_milne_flat_closed_form(self, milne_ctx, tau, rho):
        # Minkowski slice: sinh chi = rho / t0, chi = atanh(rho / tau)
        t0 = math.sqrt(tau * tau - rho * rho)
        chi = math.atanh(rho / tau)
        exact = (chi**2 - math.sinh(chi) ** 2) / (t0**2 * math.sinh(chi) ** 4)
        assert lambda_k(milne_ctx, tau, rho) == pytest.approx(exact, rel=1e-8)

    def test_milne_open_vanishes(self):
        ctx = ChartContext(milne(), k=-1)
        for rho in (0.1, 1.0, 1.9):
            assert abs(lambda_k(ctx, 2.0, rho)) < 1e-12

    @pytest.mark.parametrize("name", list(BUILTINS))
    def test_flat_limit(self, contexts, name):
        # observed limit: -H^2/3
        ctx = contexts[name]
        best, err = lambda_k_limit(ctx, 1.0)
        target = -hubble(ctx.model, 1.0) ** 2 / 3
        assert err < 1e-6 * abs(target)
        assert best == pytest.approx(target, rel=1e-6)
        assert lambda_k(ctx, 1.0, 0.0) == best

    @pytest.mark.parametrize("name", ["power_law_2", "sinh", "log"])
    def test_open_limit(self, name):
        m = BUILTINS[name]
        ctx = ChartContext(m, k=-1)
        a, ad, _ = (float(v) for v in m.derivs(1.0))
        best, _ = lambda_k_limit(ctx, 1.0)
        assert best == pytest.approx(-(hubble(m, 1.0) ** 2 - 1 / a**2) / 3, rel=1e-6, abs=1e-9)

    @given(st.floats(0.05, 0.95))
    def test_smooth_in_rho(self, f):
        ctx = ChartContext(PowerLaw(2.0))
        rho = f * max_radius(ctx, 1.0)
        lam = lambda_k(ctx, 1.0, rho)
        assert math.isfinite(lam) and lam < 0


class TestLineElement:
    def test_worldline_sample(self, milne_ctx):
        s = line_element(milne_ctx, FermiPoint(2.0, 0.0))
        assert s.g_tautau == -1.0 and s.consistent and s.angular_coeff == 0.0

    def test_sample_fields(self):
        ctx = ChartContext(PowerLaw(2.0))
        s = line_element(ctx, FermiPoint(1.0, 0.3))
        assert s.consistent and s.form_spread < 1e-9
        assert s.angular_coeff == pytest.approx(s.rho**2 + s.lambda_k * s.rho**4, rel=1e-12)
        assert s.angular_coeff == pytest.approx((ctx.a(s.t0) * s.chi) ** 2, rel=1e-12)

    def test_cartesian_origin(self, milne_ctx):
        assert np.array_equal(cartesian_metric(milne_ctx, 1.0, 0, 0, 0), np.diag([-1.0, 1, 1, 1]))

    def test_cartesian_axis_block(self):
        ctx = ChartContext(PowerLaw(2.0))
        g = cartesian_metric(ctx, 1.0, 0.3, 0.0, 0.0)
        lam = lambda_k(ctx, 1.0, 0.3)
        assert g[0, 0] == pytest.approx(g_tau_tau(ctx, 1.0, 0.3), rel=1e-12)
        assert g[1, 1] == pytest.approx(1.0)
        assert g[2, 2] == pytest.approx(1 + lam * 0.09, rel=1e-12)
        assert g[3, 3] == g[2, 2]
        assert np.count_nonzero(g - np.diag(np.diag(g))) == 0

    def test_cartesian_rotation(self):
        ctx = ChartContext(PowerLaw(0.5))
        x = np.array([0.2, -0.1, 0.25])
        c, s = math.cos(0.7), math.sin(0.7)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        g = cartesian_metric(ctx, 1.0, *x)
        g_rot = cartesian_metric(ctx, 1.0, *(rot @ x))
        big = np.eye(4)
        big[1:, 1:] = rot
        assert np.allclose(big @ g @ big.T, g_rot, rtol=1e-10, atol=1e-12)
        assert np.allclose(g, g.T)

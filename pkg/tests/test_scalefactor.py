import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermichart import (LambdaFluid, LogModel, PowerLaw, Sinh, Tabulated, builtin_models, deceleration,
                        evaluate, hubble, inverse, load_model, milne, model_from_spec, q_from_densities,
                        regularity_check, sample_model)
from fermichart.errors import DomainError, RangeError

MODELS = builtin_models()


def fd(fun, t, h=1e-6):
    return (fun(t + h) - fun(t - h)) / (2 * h)


class TestEvaluate:
    def test_power_law(self):
        assert evaluate(PowerLaw(2.0), 3.0) == (9.0, 6.0, 2.0)

    def test_sinh(self):
        a, ad, add = evaluate(Sinh(), 0.5)
        assert (a, ad, add) == pytest.approx((math.sinh(0.5), math.cosh(0.5), math.sinh(0.5)), rel=1e-15)
        assert (round(a, 5), round(ad, 5)) == (0.52110, 1.12763)

    def test_lambda_fluid_value(self):
        a, _, _ = evaluate(LambdaFluid(3.0, 1.0, 1.0), 1.0)
        assert a == pytest.approx(math.sinh(1.5) ** (2 / 3), rel=1e-14)
        assert abs(a - 1.65509) < 5e-6

    @pytest.mark.parametrize("lam,gamma,A", [(3.0, 1.0, 1.0), (12.0, 1.0, 2.0), (0.7, 1.6, 0.3), (3.0, 2.0, 1.0)])
    def test_lambda_fluid_chain_rule(self, lam, gamma, A):
        m = LambdaFluid(lam, gamma, A)
        for t in (0.3, 1.0, 2.5):
            _, ad, add = evaluate(m, t)
            assert ad == pytest.approx(fd(lambda x: evaluate(m, x)[0], t), rel=1e-6)
            assert add == pytest.approx(fd(lambda x: evaluate(m, x)[1], t), rel=1e-6)

    def test_log_model_big_bang(self):
        m = LogModel()
        assert m.a_at_zero() == 0.0
        a, ad, add = evaluate(m, 1.0)
        assert a == pytest.approx(2 * math.log(2))
        assert ad == pytest.approx(math.log(2) + 1)
        assert add == pytest.approx(0.5)

    @pytest.mark.parametrize("name", list(MODELS))
    def test_big_bang(self, name):
        assert MODELS[name].a_at_zero() == 0.0

    def test_nonpositive_time(self):
        with pytest.raises(DomainError):
            evaluate(Sinh(), 0.0)
        with pytest.raises(DomainError):
            evaluate(Sinh(), -1.0)

    def test_tabulated_range(self):
        tab = sample_model(PowerLaw(2.0), np.linspace(0, 4, 41))
        with pytest.raises(RangeError):
            evaluate(tab, 5.0)


class TestInverse:
    def test_power_law(self):
        b, bd, bdd = inverse(PowerLaw(2.0), 9.0)
        assert (b, bd) == (3.0, pytest.approx(1 / 6, rel=1e-15))
        assert bdd == pytest.approx(-1 / 108, rel=1e-14)

    @pytest.mark.parametrize("s", [1e-6, 0.3, 7.0, 1e5])
    def test_milne_identity(self, s):
        assert inverse(milne(), s) == (s, 1.0, 0.0)

    def test_sinh(self):
        b, bd, _ = inverse(Sinh(), 1.0)
        assert b == pytest.approx(math.asinh(1.0), rel=1e-15)
        assert abs(b - 0.88137) < 1e-5
        assert bd == pytest.approx(1 / math.sqrt(2), rel=1e-14)
        assert evaluate(Sinh(), b)[0] == pytest.approx(1.0, rel=1e-15)

    def test_nonpositive(self):
        with pytest.raises(DomainError):
            inverse(Sinh(), 0.0)

    def test_beyond_table(self):
        tab = sample_model(PowerLaw(2.0), np.linspace(0, 4, 41))
        with pytest.raises(DomainError):
            inverse(tab, 17.0)

    @pytest.mark.parametrize("name", list(MODELS))
    @given(st.floats(-4, 2.5))
    def test_round_trip(self, name, logt):
        m = MODELS[name]
        t = 10.0**logt
        a = evaluate(m, t)[0]
        b = inverse(m, a)[0]
        assert b == pytest.approx(t, rel=1e-10)
        assert evaluate(m, b)[0] == pytest.approx(a, rel=1e-10)

    @pytest.mark.parametrize("name", list(MODELS))
    def test_derivative_identities(self, name):
        m = MODELS[name]
        for t in (0.05, 0.7, 3.0):
            a, ad, add = evaluate(m, t)
            _, bd, bdd = inverse(m, a)
            assert bd * ad == pytest.approx(1.0, rel=1e-12)
            h = 1e-5 * a
            bdd_fd = (inverse(m, a + h)[1] - inverse(m, a - h)[1]) / (2 * h)
            assert bdd == pytest.approx(bdd_fd, rel=1e-6, abs=1e-12)
            assert bdd == pytest.approx(-add / ad**3, rel=1e-12)


class TestRegularity:
    def test_power_half(self):
        r = regularity_check(PowerLaw(0.5), 10.0, 64)
        assert r.is_regular and r.big_bang_ok and r.monotone_ok
        assert r.max_condition_value == pytest.approx(-1.0, rel=1e-12)
        assert len(r.probe_grid) == 64 and max(r.probe_grid) == pytest.approx(10.0)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 2.0, 3.0, 7.0])
    def test_power_condition_value(self, alpha):
        r = regularity_check(PowerLaw(alpha), 5.0, 16)
        assert r.max_condition_value == pytest.approx((alpha - 1) / alpha, abs=1e-12)
        assert r.is_regular

    def test_sinh(self):
        r = regularity_check(Sinh(), 5.0, 64)
        assert r.is_regular
        assert r.max_condition_value == pytest.approx(math.tanh(5.0) ** 2, rel=1e-12)

    def test_exp_table_not_regular(self):
        tab = Tabulated(tuple((float(t), math.exp(t)) for t in np.linspace(0, 5, 60)))
        r = regularity_check(tab, 5.0, 64)
        assert not r.is_regular
        assert not r.big_bang_ok

    def test_not_monotone_flagged(self):
        r = regularity_check(Sinh(), 2.0, 2)
        assert r.monotone_ok

    @pytest.mark.parametrize("name", list(MODELS))
    def test_builtins_regular_with_nonincreasing_hubble(self, name):
        m = MODELS[name]
        r = regularity_check(m, 50.0, 64)
        assert r.is_regular
        hs = [hubble(m, t) for t in r.probe_grid]
        assert all(h2 <= h1 * (1 + 1e-12) for h1, h2 in zip(hs, hs[1:]))


class TestHubble:
    def test_milne(self):
        assert hubble(milne(), 2.0) == 0.5
        assert deceleration(milne(), 2.0) == 0.0

    def test_pure_lambda(self):
        assert q_from_densities(0.0, 0.0, 1.0) == -1.0

    def test_measured_deceleration(self):
        # a flat matter + Lambda pair reproducing q0 = -0.58
        om = 0.28
        ol = (om / 2 + 0.58)
        assert ol == pytest.approx(0.72)
        assert q_from_densities(om, 0.0, ol) == pytest.approx(-0.58, abs=1e-15)
        assert om + ol == pytest.approx(1.0)

    def test_density_range(self):
        with pytest.raises(DomainError):
            q_from_densities(1.5, 0.0, 0.0)

    @pytest.mark.parametrize("name", list(MODELS))
    def test_deceleration_definition(self, name):
        m = MODELS[name]
        a, ad, add = evaluate(m, 1.3)
        assert deceleration(m, 1.3) == pytest.approx(-a * add / ad**2, rel=1e-14)


class TestSpecs:
    @pytest.mark.parametrize("name", list(MODELS))
    def test_round_trip(self, name, tmp_path):
        m = MODELS[name]
        path = tmp_path / "m.json"
        path.write_text(json.dumps(m.to_spec()))
        assert load_model(path) == m

    def test_examples(self):
        assert model_from_spec({"kind": "power_law", "alpha": 0.5}) == PowerLaw(0.5)
        assert model_from_spec({"kind": "milne"}) == PowerLaw(1.0)
        assert model_from_spec({"kind": "lambda_fluid", "lambda": 3.0, "gamma": 1.0, "A": 1.0}) == LambdaFluid(3.0)
        assert model_from_spec({"kind": "sinh"}) == Sinh()
        assert model_from_spec({"kind": "log"}) == LogModel()
        tab = model_from_spec({"kind": "tabulated", "samples": [[0, 0], [1, 1], [2, 4]]})
        assert isinstance(tab, Tabulated)

    @pytest.mark.parametrize("bad", [
        {"kind": "nope"}, {"kind": "power_law"}, {"kind": "power_law", "alpha": -1},
        {"kind": "lambda_fluid", "lambda": 3.0, "gamma": 2.5}, {"kind": "lambda_fluid", "lambda": 0.0},
        {"kind": "tabulated", "samples": [[0, 0], [1, 1]]},
        {"kind": "tabulated", "samples": [[0, 0], [1, 2], [2, 1]]},
    ])
    def test_invalid(self, bad):
        with pytest.raises(DomainError):
            model_from_spec(bad)


class TestTabulated:
    def test_matches_source(self):
        src = PowerLaw(2.0)
        tab = sample_model(src, np.concatenate([[0.0], np.geomspace(1e-3, 10, 300)]))
        for t in (0.05, 1.0, 7.0):
            assert evaluate(tab, t)[0] == pytest.approx(evaluate(src, t)[0], rel=1e-5)
            assert evaluate(tab, t)[1] == pytest.approx(evaluate(src, t)[1], rel=1e-3)

    def test_inverse_vectorised(self):
        tab = sample_model(Sinh(), np.linspace(0, 3, 31))
        s = np.linspace(0.01, 9.9, 50)
        assert np.allclose(tab.derivs(tab.b(s))[0], s, rtol=1e-13)

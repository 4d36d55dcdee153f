import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import kendalltau, multivariate_normal

from copulacov import (
    Condition,
    CopulaModel,
    DerivativeUndefined,
    DomainError,
    Family,
    MarginKind,
    ParameterOutOfRange,
    check_condition,
    interior_grid,
    make_copula,
)
from copulacov.copulas import condition_violation

unit = st.floats(min_value=1e-3, max_value=1 - 1e-3)


def reference_cdf(family, theta, u, v):
    """Textbook formulas written out independently of the package kernels."""
    if family == "independence":
        return u * v
    if family == "fgm":
        return u * v * (1 + theta * (1 - u) * (1 - v))
    if family == "gumbel-barnett":
        return u * v * math.exp(-theta * math.log(u) * math.log(v))
    if family == "clayton":
        return (u ** -theta + v ** -theta - 1) ** (-1 / theta)
    if family == "gaussian":
        from scipy.stats import norm

        mvn = multivariate_normal(mean=[0, 0], cov=[[1, theta], [theta, 1]])
        return float(mvn.cdf([norm.ppf(u), norm.ppf(v)]))
    raise AssertionError(family)


class TestConstruction:
    def test_examples(self):
        assert float(CopulaModel("fgm", 1.0).cdf(0.5, 0.5)) == 0.3125
        assert float(make_copula("independence").cdf(0.3, 0.4)) == pytest.approx(0.12, abs=1e-15)
        assert make_copula("gb", 0.5).family is Family.GUMBEL_BARNETT
        assert make_copula("normal", 0.1).family is Family.GAUSSIAN

    @pytest.mark.parametrize(
        "family, theta",
        [("fgm", 1.5), ("fgm", -1.01), ("gumbel-barnett", 0.0), ("gumbel-barnett", 1.2),
         ("clayton", 0.0), ("clayton", -1.0), ("gaussian", 1.0), ("gaussian", -1.0),
         ("independence", 0.3), ("fgm", None), ("clayton", math.nan)],
    )
    def test_parameter_out_of_range(self, family, theta):
        with pytest.raises(ParameterOutOfRange):
            make_copula(family, theta)

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            make_copula("frank", 2.0)

    def test_frozen_and_hashable(self):
        C = make_copula("clayton", 2.0)
        with pytest.raises(Exception):
            C.theta = 3.0
        assert C == make_copula("clayton", 2)
        assert len({C, make_copula("clayton", 2.0)}) == 1

    def test_interior_grid(self):
        np.testing.assert_allclose(interior_grid(3), [0.25, 0.5, 0.75])
        with pytest.raises(ValueError):
            interior_grid(0)


class TestDistributionFunction:
    @pytest.mark.parametrize(
        "family, theta",
        [("independence", None), ("fgm", 0.7), ("gumbel-barnett", 1.0), ("clayton", 3.0), ("gaussian", -0.4)],
    )
    def test_matches_reference(self, family, theta):
        C = make_copula(family, theta)
        for u, v in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.3), (0.02, 0.97)]:
            assert float(C.cdf(u, v)) == pytest.approx(reference_cdf(family, theta, u, v), abs=1e-12)

    def test_gaussian_zero_rho_is_independence(self):
        C = make_copula("gaussian", 0.0)
        g = interior_grid(9)
        U, V = np.meshgrid(g, g)
        np.testing.assert_allclose(C.cdf(U, V), U * V, atol=1e-11)

    def test_margins(self, model):
        t = np.linspace(0, 1, 17)
        np.testing.assert_array_equal(model.cdf(t, 1.0), t)
        np.testing.assert_array_equal(model.cdf(1.0, t), t)
        np.testing.assert_array_equal(model.cdf(t, 0.0), 0.0)
        np.testing.assert_array_equal(model.cdf(0.0, t), 0.0)

    def test_frechet_bounds(self, model):
        g = np.linspace(0.01, 0.99, 40)
        U, V = np.meshgrid(g, g)
        c = model.cdf(U, V)
        assert np.all(c >= np.maximum(U + V - 1, 0) - 1e-14)
        assert np.all(c <= np.minimum(U, V) + 1e-14)

    def test_two_increasing(self, model):
        g = np.linspace(0, 1, 41)
        U, V = np.meshgrid(g, g, indexing="ij")
        c = model.cdf(U, V)
        vol = c[1:, 1:] - c[:-1, 1:] - c[1:, :-1] + c[:-1, :-1]
        assert vol.min() >= -1e-13

    def test_exchangeable(self, model):
        g = interior_grid(15)
        U, V = np.meshgrid(g, g)
        np.testing.assert_allclose(model.cdf(U, V), model.cdf(V, U), atol=1e-14)

    def test_domain_errors(self, model):
        with pytest.raises(DomainError):
            model.cdf(1.2, 0.5)
        with pytest.raises(DomainError):
            model.cdf(np.nan, 0.5)

    @given(u=unit, v=unit)
    @settings(max_examples=60, deadline=None)
    def test_fgm_reference_property(self, u, v):
        C = make_copula("fgm", -0.3)
        assert float(C.cdf(u, v)) == pytest.approx(reference_cdf("fgm", -0.3, u, v), abs=1e-15)


class TestDerivatives:
    def test_finite_difference(self, model):
        h = 1e-6
        g = np.linspace(0.05, 0.95, 19)
        U, V = np.meshgrid(g, g)
        fd_u = (model.cdf(U + h, V) - model.cdf(U - h, V)) / (2 * h)
        fd_v = (model.cdf(U, V + h) - model.cdf(U, V - h)) / (2 * h)
        np.testing.assert_allclose(model.partial_u(U, V), fd_u, atol=1e-6)
        np.testing.assert_allclose(model.partial_v(U, V), fd_v, atol=1e-6)

    def test_boundary_values(self, model):
        u = interior_grid(7)
        np.testing.assert_array_equal(model.partial_u(u, 0.0), 0.0)
        np.testing.assert_array_equal(model.partial_u(u, 1.0), 1.0)

    @pytest.mark.parametrize("family, theta", [("clayton", 1.0), ("gaussian", 0.3), ("gumbel-barnett", 0.5)])
    def test_undefined_on_edge(self, family, theta):
        C = make_copula(family, theta)
        with pytest.raises(DerivativeUndefined):
            C.partial_u(0.0, 0.5)
        with pytest.raises(DerivativeUndefined):
            C.partial_v(0.5, 1.0)

    def test_closed_families_defined_on_edge(self):
        C = make_copula("fgm", 0.5)
        # dC/du(0, v) = v (1 + theta (1 - v))
        assert float(C.partial_u(0.0, 0.4)) == pytest.approx(0.4 * 1.3)
        assert float(C.partial_u(1.0, 0.4)) == pytest.approx(0.4 * 0.7)

    def test_conditional_quantile_inverts(self, model):
        g = interior_grid(11)
        U, W = np.meshgrid(g, g)
        Vq = model.conditional_quantile(U, W)
        np.testing.assert_allclose(model.partial_u(U, Vq), W, atol=1e-9)

    def test_conditional_quantile_domain(self, model):
        with pytest.raises(DomainError):
            model.conditional_quantile(0.0, 0.5)


class TestSampling:
    def test_deterministic(self, model):
        a = model.sample(50, 7)
        b = model.sample(50, 7)
        assert a == b
        assert a != model.sample(50, 8)
        assert a.margin_kind is MarginKind.UNIFORM

    def test_open_unit_interval(self, model):
        s = model.sample(2000, 1).pairs
        assert np.all((s > 0) & (s < 1))

    def test_invalid_n(self, model):
        with pytest.raises(ValueError):
            model.sample(0, 1)

    def test_cdf_consistency(self, model):
        n = 20000
        s = model.sample(n, 123).pairs
        for a, b in [(0.3, 0.3), (0.5, 0.8), (0.9, 0.2)]:
            p = float(model.cdf(a, b))
            hat = np.mean((s[:, 0] <= a) & (s[:, 1] <= b))
            se = math.sqrt(p * (1 - p) / n)
            assert abs(hat - p) < 4 * se
        # uniform margins
        for j in range(2):
            assert abs(np.mean(s[:, j] <= 0.5) - 0.5) < 4 * math.sqrt(0.25 / n)

    @pytest.mark.parametrize(
        "family, theta, tau",
        [("clayton", 2.0, 0.5), ("gaussian", 0.5, 2 / math.pi * math.asin(0.5)), ("fgm", 1.0, 2 / 9)],
    )
    def test_kendall_tau(self, family, theta, tau):
        s = make_copula(family, theta).sample(4000, 99).pairs
        est = kendalltau(s[:, 0], s[:, 1]).statistic
        # sd of tau-hat is below 1.2 / sqrt(n) for these families
        assert abs(est - tau) < 4 * 1.2 / math.sqrt(4000)


class TestConditions:
    @pytest.mark.parametrize(
        "family, theta", [("fgm", 0.0), ("fgm", 0.5), ("fgm", 1.0), ("clayton", 0.5), ("clayton", 2.0),
                          ("gaussian", 0.25), ("gaussian", 0.75)],
    )
    def test_ltd_models(self, family, theta):
        C = make_copula(family, theta)
        rep = check_condition(C, "ltd")
        assert rep.holds, rep
        assert check_condition(C, Condition.PQD).holds

    def test_fgm_negative_not_ltd(self):
        rep = check_condition(make_copula("fgm", -0.5), Condition.LTD)
        assert not rep.holds
        assert rep.worst_violation > 1e-3

    def test_gumbel_barnett(self):
        C = make_copula("gumbel-barnett", 1.0)
        assert check_condition(C, Condition.NQD).holds
        assert not check_condition(C, Condition.LTD).holds
        rep = check_condition(C, Condition.CONDITION3)
        assert not rep.holds
        assert set(rep.to_dict()) == {"condition", "holds", "worst_violation", "witness", "grid_resolution"}

    def test_independence_on_every_boundary(self):
        C = make_copula("independence")
        for cond in Condition:
            rep = check_condition(C, cond, 21)
            assert rep.holds
            assert abs(rep.worst_violation) < 1e-15 or rep.worst_violation < 0

    def test_cleared_denominator_form(self):
        C = make_copula("clayton", 2.0)
        u, v = 0.3, 0.6
        expect = max(u * float(C.partial_u(u, v)) - float(C.cdf(u, v)), v * float(C.partial_v(u, v)) - float(C.cdf(u, v)))
        assert float(condition_violation(C, "ltd", u, v)) == pytest.approx(expect, abs=1e-15)

    def test_grid_resolution(self):
        with pytest.raises(ValueError):
            check_condition(make_copula("fgm", 0.5), "ltd", 1)

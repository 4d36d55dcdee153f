import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copulacov import (
    DominanceCertificate,
    DomainError,
    Proposition,
    certify_dominance,
    cov_process_C,
    cov_process_Chat,
    covariance_difference_independence,
    diagonal_counterexample_search,
    interior_grid,
    make_copula,
    multivariate_independence_difference,
)

unit = st.floats(min_value=1e-3, max_value=1 - 1e-3)


def gamma(C, p, q):
    """Covariance of the known-margin limit at points p and q."""
    return C.cdf(min(p[0], q[0]), min(p[1], q[1])) - C.cdf(*p) * C.cdf(*q)


def chat_oracle(C, u, v, s, t, h=1e-6):
    """Nine-term expansion with derivatives from central differences of the CDF."""
    def grad(x, y):
        gx = (C.cdf(min(x + h, 1), y) - C.cdf(max(x - h, 0), y)) / (min(x + h, 1) - max(x - h, 0))
        gy = (C.cdf(x, min(y + h, 1)) - C.cdf(x, max(y - h, 0))) / (min(y + h, 1) - max(y - h, 0))
        return float(gx), float(gy)

    a, b = grad(u, v)
    a2, b2 = grad(s, t)
    left = [((u, v), 1.0), ((u, 1.0), -a), ((1.0, v), -b)]
    right = [((s, t), 1.0), ((s, 1.0), -a2), ((1.0, t), -b2)]
    return sum(wl * wr * float(gamma(C, p, q)) for p, wl in left for q, wr in right)


class TestCovC:
    def test_formula(self, model):
        u, v, s, t = 0.3, 0.7, 0.6, 0.2
        expect = model.cdf(0.3, 0.2) - model.cdf(u, v) * model.cdf(s, t)
        assert cov_process_C(model, u, v, s, t) == pytest.approx(float(expect), abs=1e-15)

    def test_pinned(self, model):
        g = interior_grid(5)
        assert np.all(cov_process_C(model, 1.0, 1.0, g, g) == 0.0)
        assert np.all(cov_process_C(model, 0.0, g, g, g) == 0.0)

    def test_domain(self, model):
        with pytest.raises(DomainError):
            cov_process_C(model, 1.5, 0.5, 0.5, 0.5)


class TestCovChat:
    @pytest.mark.parametrize("point", [(0.5, 0.5, 0.5, 0.5), (0.2, 0.8, 0.6, 0.3), (0.9, 0.1, 0.05, 0.95)])
    def test_against_nine_term_oracle(self, model, point):
        rep = cov_process_Chat(model, *point)
        assert rep.cov_Chat == pytest.approx(chat_oracle(model, *point), abs=5e-7)

    def test_fgm_value(self):
        rep = cov_process_Chat(make_copula("fgm", 1.0), 0.5, 0.5, 0.5, 0.5)
        assert rep.cov_Chat == pytest.approx(15 / 256, abs=1e-15)
        assert rep.cov_C == pytest.approx(0.3125 - 0.3125 ** 2, abs=1e-15)

    @given(u=unit, v=unit, s=unit, t=unit)
    @settings(max_examples=100, deadline=None)
    def test_independence_is_tied_down_sheet(self, u, v, s, t):
        rep = cov_process_Chat(make_copula("independence"), u, v, s, t)
        expect = (min(u, s) - u * s) * (min(v, t) - v * t)
        assert rep.cov_Chat == pytest.approx(expect, abs=1e-15)

    @given(u=unit, v=unit, s=unit, t=unit)
    @settings(max_examples=100, deadline=None)
    def test_independence_difference_closed_form(self, u, v, s, t):
        rep = cov_process_Chat(make_copula("independence"), u, v, s, t)
        assert rep.difference == pytest.approx(covariance_difference_independence(u, v, s, t), abs=1e-15)

    def test_difference_decomposition(self, model):
        rep = cov_process_Chat(model, 0.3, 0.4, 0.7, 0.2)
        assert rep.difference == pytest.approx(sum(rep.a_terms) - sum(rep.b_terms), abs=1e-15)
        assert rep.cov_Chat - rep.cov_C == pytest.approx(rep.difference, abs=1e-15)
        d = rep.to_dict()
        assert set(d) == {"query", "cov_C", "cov_Chat", "a_terms", "b_terms", "difference"}

    def test_symmetry(self, model):
        rng = np.random.default_rng(3)
        u, v, s, t = rng.random((4, 200))
        a = cov_process_Chat(model, u, v, s, t).cov_Chat
        np.testing.assert_allclose(a, cov_process_Chat(model, s, t, u, v).cov_Chat, atol=1e-15)
        np.testing.assert_allclose(a, cov_process_Chat(model, v, u, t, s).cov_Chat, atol=1e-14)

    def test_positive_semidefinite(self, model):
        g = np.array([0.15, 0.4, 0.65, 0.9])
        U, V = np.meshgrid(g, g)
        pts = np.column_stack([U.ravel(), V.ravel()])
        i, j = np.meshgrid(range(len(pts)), range(len(pts)), indexing="ij")
        K = cov_process_Chat(model, pts[i, 0], pts[i, 1], pts[j, 0], pts[j, 1]).cov_Chat
        assert np.linalg.eigvalsh(K).min() > -1e-12

    def test_boundary_vanishes_without_derivative_errors(self, model):
        g = interior_grid(6)
        for u, v in [(0.0, g), (1.0, g), (g, 0.0), (g, 1.0)]:
            u, v = np.broadcast_arrays(u, v)
            rep = cov_process_Chat(model, u, v, 0.4, 0.7)
            np.testing.assert_allclose(rep.cov_Chat, 0.0, atol=1e-15)

    def test_scalar_and_array_shapes(self, model):
        assert isinstance(cov_process_Chat(model, 0.2, 0.3, 0.4, 0.5).cov_Chat, float)
        rep = cov_process_Chat(model, np.full((2, 3), 0.2), 0.3, 0.4, 0.5)
        assert rep.cov_Chat.shape == (2, 3)


class TestMultivariate:
    def test_reduces_to_bivariate(self):
        rng = np.random.default_rng(8)
        u = rng.random((1000, 2))
        v = rng.random((1000, 2))
        expect = covariance_difference_independence(u[:, 0], u[:, 1], v[:, 0], v[:, 1])
        np.testing.assert_allclose(multivariate_independence_difference(u, v), expect, atol=1e-15)

    def test_zero_coordinate(self):
        assert multivariate_independence_difference([0.0, 0.5, 0.5], [0.3, 0.3, 0.3]) == 0.0

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_nonpositive(self, d):
        rng = np.random.default_rng(d)
        assert multivariate_independence_difference(rng.random((5000, d)), rng.random((5000, d))).max() <= 0.0


class TestCertification:
    @pytest.mark.parametrize(
        "family, theta", [("fgm", 0.25), ("fgm", 1.0), ("clayton", 2.0), ("gaussian", 0.25), ("independence", None)]
    )
    def test_full_covariance_certified(self, family, theta):
        cert = certify_dominance(make_copula(family, theta), 1, grid_resolution=9)
        assert cert.certified
        assert cert.max_difference <= 1e-9
        assert cert.premise_warning is None

    def test_negative_dependence_warns(self):
        cert = certify_dominance(make_copula("fgm", -0.5), "P1", grid_resolution=7)
        assert cert.premise_warning and "LTD" in cert.premise_warning

    def test_gumbel_barnett_counterexample(self):
        cert = certify_dominance(make_copula("gumbel-barnett", 1.0), Proposition.P2, grid_resolution=41)
        assert not cert.certified
        assert cert.max_difference > 0
        assert cert.premise_warning is not None
        u, d = diagonal_counterexample_search(make_copula("gumbel-barnett", 1.0))
        assert d.max() > 0
        assert u[np.argmax(d)] < 0.25

    def test_variance_only_certified_for_fgm(self):
        assert certify_dominance(make_copula("fgm", 0.5), 2, grid_resolution=31).certified

    @pytest.mark.parametrize("dim", [2, 3])
    def test_multivariate(self, dim):
        cert = certify_dominance(make_copula("independence"), 4, grid_resolution=5, dim=dim, keep_points=True)
        assert cert.certified and cert.dim == dim
        assert len(cert.points["diff"]) == 5 ** (2 * dim)

    def test_multivariate_requires_independence(self):
        with pytest.raises(ValueError):
            certify_dominance(make_copula("fgm", 0.5), 4, dim=2)
        with pytest.raises(ValueError):
            certify_dominance(make_copula("independence"), 4, dim=1)

    def test_csv(self):
        cert = certify_dominance(make_copula("fgm", 0.5), 1, grid_resolution=3, keep_points=True)
        text = cert.to_csv(header_lines=["schema_version=1"])
        lines = text.strip().split("\n")
        assert lines[0] == "# schema_version=1"
        assert lines[1] == "u,v,s,t,cov_C,cov_Chat,diff"
        assert len(lines) == 2 + 3 ** 4
        vals = np.array([list(map(float, ln.split(","))) for ln in lines[2:]])
        assert vals[:, 6].max() == pytest.approx(cert.max_difference, abs=0)
        with pytest.raises(ValueError):
            certify_dominance(make_copula("fgm", 0.5), 1, grid_resolution=3).to_csv()

    def test_certificate_dict(self):
        cert = certify_dominance(make_copula("fgm", 0.5), 2, grid_resolution=5)
        assert isinstance(cert, DominanceCertificate)
        d = cert.to_dict()
        assert d["proposition"] == "P2_variance_only"
        assert d["certified"] is True

    @pytest.mark.parametrize("text, prop", [("1", Proposition.P1), ("p2", Proposition.P2), ("P4_multivariate", Proposition.P4)])
    def test_parse(self, text, prop):
        assert Proposition.parse(text) is prop

    def test_parse_invalid(self):
        with pytest.raises(ValueError):
            Proposition.parse("3")

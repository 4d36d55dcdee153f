import math

import numpy as np
import pytest

from copulacov.quadrature import gauss_legendre, hypercube_rule, square_rule_cross, square_rule_diag, tanh_sinh


class TestRules:
    @pytest.mark.parametrize("n", [1, 4, 10])
    def test_gauss_legendre_exact_for_polynomials(self, n):
        x, w = gauss_legendre(n)
        for k in range(2 * n):
            assert np.sum(w * x ** k) == pytest.approx(1 / (k + 1), abs=1e-14)

    def test_square_cross_exact_on_creased_integrand(self):
        s, t, w = square_rule_cross(6)
        assert w.sum() == pytest.approx(1.0, abs=1e-14)
        # min(s, t) and max(s + t - 1, 0) are polynomial on each of the four triangles
        assert np.sum(w * np.minimum(s, t)) == pytest.approx(1 / 3, abs=1e-14)
        assert np.sum(w * np.maximum(s + t - 1, 0)) == pytest.approx(1 / 6, abs=1e-14)

    def test_square_diag(self):
        a, b, w = square_rule_diag(5)
        assert np.sum(w * np.minimum(a, b) * a * b) == pytest.approx(2 / 15, abs=1e-14)

    def test_hypercube(self):
        total = 0.0
        count = 0
        m = 0.0
        for u, v, s, t, w in hypercube_rule(4):
            total += w.sum()
            count += w.size
            m += np.sum(w * np.minimum(u, s) * np.minimum(v, t))
        assert count == 4 * 4 ** 4
        assert total == pytest.approx(1.0, abs=1e-13)
        assert m == pytest.approx(1 / 9, abs=1e-14)

    def test_tanh_sinh_endpoint_singularity(self):
        x, w = tanh_sinh(1 / 16)
        assert np.all((x > 0) & (x < 1))
        assert math.fsum(w / np.sqrt(x)) == pytest.approx(2.0, abs=1e-10)
        assert math.fsum(w * np.log(x)) == pytest.approx(-1.0, abs=1e-12)

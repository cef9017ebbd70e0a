import math

import numpy as np
import pytest

from boht.errors import ConvergenceError, DomainError
from boht.gaussian import (
    GaussMap,
    below_ks_search,
    fixed_point,
    g_r_d_lambda,
    gaussian_g,
    ks_scan,
    s_poly,
    write_scan_csv,
)


class TestSPoly:
    def test_r7(self):
        assert s_poly(7, 0.8) == pytest.approx(2.834347, abs=1e-6)

    def test_linear_term(self):
        # s_r(x) = x + O(x^3)
        for r in (3, 5, 9):
            assert s_poly(r, 1e-6) == pytest.approx(1e-6, rel=1e-6)

    def test_r3_exact(self):
        np.testing.assert_allclose(s_poly(3, np.linspace(0, 1, 5)), np.linspace(0, 1, 5))

    def test_domain(self):
        with pytest.raises(DomainError):
            s_poly(1, 0.5)


class TestGaussianG:
    def test_endpoints(self):
        assert gaussian_g(0.0) == 0.0
        assert gaussian_g(50.0) > 0.999

    def test_monotone(self):
        v = gaussian_g(np.linspace(0, 30, 301))
        assert np.all(np.diff(v) > 0)

    def test_small_s(self):
        # g(s) = s - s^2 + O(s^3)
        s = 1e-4
        assert gaussian_g(s) == pytest.approx(s - s**2, abs=1e-10)

    @pytest.mark.parametrize("s", [0.01, 0.5, 2.83, 10.0, 40.0])
    def test_self_convergence(self, s):
        assert abs(gaussian_g(s, 96) - gaussian_g(s, 192)) < 1e-10

    @pytest.mark.parametrize("s", [0.5, 2.83, 10.0])
    def test_monte_carlo(self, s):
        z = np.random.default_rng(int(s * 100)).standard_normal(10**7)
        v = np.tanh(s + math.sqrt(s) * z)
        se = v.std() / math.sqrt(v.size)
        assert abs(gaussian_g(s) - v.mean()) < 5 * se

    def test_nishimori_identity(self):
        # symmetry of the Gaussian tilt: E tanh(Y) = E tanh(Y)^2 for Y ~ N(s, s)
        z, w = np.polynomial.hermite_e.hermegauss(200)
        w = w / w.sum()
        s = 1.7
        t = np.tanh(s + math.sqrt(s) * z)
        assert gaussian_g(s) == pytest.approx(np.dot(w, t**2), abs=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            gaussian_g(-1.0)
        with pytest.raises(DomainError):
            gaussian_g(1.0, n_q=16)


class TestGaussMap:
    def test_g7(self):
        lam = math.sqrt(1.0 / (6 * 1e5))
        assert g_r_d_lambda(7, 1e5, lam, 0.8) > 0.8

    def test_r_monotone(self):
        g7 = g_r_d_lambda(7, 1e5, math.sqrt(1 / (6 * 1e5)), 0.8)
        for r in range(8, 11):
            lam = math.sqrt(1.0 / ((r - 1) * 1e5))
            assert g_r_d_lambda(r, 1e5, lam, 0.8) >= g7

    def test_ks_ratio(self):
        m = GaussMap(4, 10.0, 0.1)
        assert m.ks_ratio == pytest.approx(0.3)
        assert m.s(1.0) == pytest.approx(0.3 * s_poly(4, 1.0))

    def test_domain(self):
        with pytest.raises(DomainError):
            GaussMap(3, 1.0, 1.5)
        with pytest.raises(DomainError):
            GaussMap(3, 1.0, 0.5)(1.2)


class TestFixedPoints:
    def test_zero_below_ks_r3(self):
        lam = math.sqrt(0.8 / (2 * 1e5))
        assert fixed_point(3, 1e5, lam, max_iter=10**5) == pytest.approx(0.0, abs=1e-6)

    def test_above_ks(self):
        lam = math.sqrt(2.0 / (2 * 1e5))
        x = fixed_point(3, 1e5, lam)
        assert x > 0.1
        assert g_r_d_lambda(3, 1e5, lam, x) == pytest.approx(x, abs=1e-9)

    def test_trivial_map(self):
        assert fixed_point(5, 1.0, 0.0) == 0.0

    def test_convergence_error(self):
        with pytest.raises(ConvergenceError):
            fixed_point(3, 1e5, math.sqrt(0.99 / 2e5), max_iter=5)

    def test_scan(self):
        rows = ks_scan(7, 1e4, [0.95, 1.5])
        assert [r[3] for r in rows] == [0.95, 1.5]
        assert rows[0][4] > 0.8 and rows[1][4] > rows[0][4]

    def test_below_ks_r7(self):
        res, rows = below_ks_search(7, 1e5)
        assert res is not None
        assert res.ks_ratio < 1.0 and res.fixed_point >= 0.8
        assert (7 - 1) * 1e5 * res.lam**2 == pytest.approx(res.ks_ratio)
        assert len(rows) == 100

    def test_below_ks_r3_none(self):
        res, rows = below_ks_search(3, 1e5)
        assert res is None
        assert all(r[4] <= 1e-6 for r in rows)

    def test_csv(self, tmp_path):
        rows = ks_scan(5, 100.0, [1.2])
        write_scan_csv(rows, tmp_path / "s.csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "r,d,lambda,ks_ratio,fixed_point"
        assert float(lines[1].split(",")[4]) == rows[0][4]

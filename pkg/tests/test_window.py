import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bnv import window
from bnv.radial_ode import linear_eigen_oracle
from bnv.specfun import Dimension, legendre_value
from bnv.window import (CapGeometry, ZeroNotFoundError, degree_from_lambda,
                        dirichlet_eigenfunction, dirichlet_lambda1, first_degree_zero,
                        lambda_from_degree, lambda_window)


def closed_forms(theta1):
    return ((math.pi ** 2 - 4 * theta1 ** 2) / (4 * theta1 ** 2),
            (math.pi ** 2 - theta1 ** 2) / theta1 ** 2)


class TestCapGeometry:
    def test_radius(self):
        cap = CapGeometry(1.0)
        assert cap.R == pytest.approx(math.tan(0.5))
        assert cap.q(0.0) == 2.0

    @pytest.mark.parametrize("t", [0.0, 0.04, 1.6, -1.0])
    def test_rejects(self, t):
        with pytest.raises(ValueError):
            CapGeometry(t)

    def test_hemisphere_allowed(self):
        assert CapGeometry(math.pi / 2).R == pytest.approx(1.0)


class TestFirstZero:
    def test_hemisphere_minus_half(self):
        assert first_degree_zero(-0.5, CapGeometry(math.pi / 2)) == pytest.approx(1.5, abs=1e-10)

    def test_hemisphere_plus_half(self):
        assert first_degree_zero(0.5, CapGeometry(math.pi / 2)) == pytest.approx(0.5, abs=1e-10)

    def test_golden(self, golden):
        ell = first_degree_zero(-0.25, CapGeometry(math.pi / 3))
        assert abs(ell - golden["first_zero_m0.25_pi3"]) < 1e-8

    def test_brackets_sign_change(self):
        cap = CapGeometry(0.9)
        ell = first_degree_zero(0.3, cap)
        a = legendre_value(ell - 1e-8, 0.3, cap.theta1)
        b = legendre_value(ell + 1e-8, 0.3, cap.theta1)
        assert a * b < 0

    def test_rejects_order(self):
        with pytest.raises(ValueError):
            first_degree_zero(1.0, CapGeometry(1.0))

    def test_not_found(self, monkeypatch):
        monkeypatch.setattr(window, "MAX_DEGREE", 0.5)
        with pytest.raises(ZeroNotFoundError):
            first_degree_zero(-0.5, CapGeometry(1.0))


class TestWindow:
    @pytest.mark.parametrize("t,expected", [(math.pi / 2, (0.0, 3.0)), (math.pi / 4, (3.0, 15.0))])
    def test_three_dimensional_examples(self, t, expected):
        w = lambda_window(Dimension(3.0), CapGeometry(t))
        assert w.lambda_low == pytest.approx(expected[0], abs=1e-10)
        assert w.lambda_high == pytest.approx(expected[1], abs=1e-10)

    def test_golden(self, golden):
        g = golden["window_3.5_pi3"]
        w = lambda_window(Dimension(3.5), CapGeometry(math.pi / 3))
        for key in ("ell1", "ell2", "lambda_low", "lambda_high"):
            assert getattr(w, key) == pytest.approx(g[key], abs=1e-9)
        assert w.lambda_low < w.lambda_high

    def test_golden_windows(self, golden):
        for g in golden["windows"]:
            w = lambda_window(Dimension(g["n"]), CapGeometry(g["theta1"]))
            assert w.lambda_low == pytest.approx(g["lambda_low"], abs=1e-9)
            assert w.lambda_high == pytest.approx(g["lambda_high"], abs=1e-9)

    def test_closed_forms_twenty_caps(self):
        for t in np.linspace(0.1, math.pi / 2, 20):
            w = lambda_window(Dimension(3.0), CapGeometry(float(t)))
            lo, hi = closed_forms(float(t))
            assert abs(w.lambda_low - lo) < 1e-8
            assert abs(w.lambda_high - hi) < 1e-8

    def test_contains(self):
        w = lambda_window(Dimension(3.0), CapGeometry(math.pi / 2))
        assert w.contains(1.5)
        assert not w.contains(-0.5)
        assert not w.contains(3.5)

    @given(st.floats(2.01, 3.99), st.floats(0.05, math.pi / 2 - 0.05))
    def test_ordering(self, n, t):
        w = lambda_window(Dimension(n), CapGeometry(t))
        assert w.ell2 < w.ell1
        assert w.lambda_low < w.lambda_high

    @pytest.mark.parametrize("nu", [-0.8, -0.25, 0.4, 0.9])
    def test_decreasing_in_radius(self, nu):
        ells = [first_degree_zero(nu, CapGeometry(float(t))) for t in np.linspace(0.2, 1.5, 12)]
        assert all(b < a for a, b in zip(ells, ells[1:]))


class TestDegreeMap:
    def test_example(self):
        assert degree_from_lambda(Dimension(3.0), 3.0) == pytest.approx(1.5, abs=1e-15)

    @pytest.mark.parametrize("n", [2.2, 3.0, 3.7])
    def test_zero_lambda(self, n):
        assert degree_from_lambda(Dimension(n), 0.0) == pytest.approx((n - 2) / 2, abs=1e-15)

    def test_round_trip_example(self):
        d = Dimension(3.2)
        assert lambda_from_degree(d, degree_from_lambda(d, 2.0)) == pytest.approx(2.0, abs=1e-14)

    @given(st.floats(2.01, 3.99), st.floats(0.0, 50.0))
    def test_round_trip(self, n, ell):
        d = Dimension(n)
        lam = lambda_from_degree(d, ell)
        assert degree_from_lambda(d, lam) == pytest.approx(ell, abs=1e-12)

    def test_negative_radicand(self):
        with pytest.raises(ValueError):
            degree_from_lambda(Dimension(3.0), -2.0)


class TestDirichlet:
    def test_hemisphere(self):
        assert dirichlet_lambda1(Dimension(3.0), CapGeometry(math.pi / 2)) == pytest.approx(3.0, abs=1e-10)

    def test_third_of_pi(self):
        assert dirichlet_lambda1(Dimension(3.0), CapGeometry(math.pi / 3)) == pytest.approx(8.0, abs=1e-10)

    def test_against_oracle(self):
        dim, cap = Dimension(3.7), CapGeometry(1.0)
        exact = dirichlet_lambda1(dim, cap)
        assert abs(linear_eigen_oracle(dim, cap) - exact) / exact < 1e-4
        assert exact == lambda_window(dim, cap).lambda_high

    @pytest.mark.parametrize("n,t", [(2.3, 0.5), (3.0, 1.2), (3.8, 1.5)])
    def test_eigenfunction_positive(self, n, t):
        dim, cap = Dimension(n), CapGeometry(t)
        ell1 = lambda_window(dim, cap).ell1
        vals = [dirichlet_eigenfunction(dim, ell1, float(x))
                for x in np.linspace(1e-3, t - 1e-3, 300)]
        assert min(vals) > 0

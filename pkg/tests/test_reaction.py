import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specrd.reaction import Polynomial, YosidaApprox
from specrd.rng import make_rng


def naive_eval(coeffs, r):
    return sum(a * r**j for j, a in enumerate(coeffs))


class TestPolynomial:
    def test_cubic_values(self, cubic):
        assert cubic(0.0) == 0.0
        assert cubic(2.0) == -8.0

    def test_against_power_sum_oracle(self):
        rng = make_rng(11, 0)
        for _ in range(20):
            coeffs = rng.normal(size=5).tolist() + [-abs(rng.normal()) - 0.1]
            coeffs[1] = -abs(coeffs[1]) - 30.0  # steep linear part keeps p' <= 0
            coeffs[3] = 0.0
            coeffs[4] = 0.0
            p = Polynomial(coeffs)
            for r in rng.normal(scale=3.0, size=10):
                assert p(r) == pytest.approx(naive_eval(coeffs, r), rel=1e-14, abs=1e-12)

    def test_even_degree_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            Polynomial([0.0, -1.0, -1.0])

    def test_nonnegative_leading_rejected(self):
        with pytest.raises(ValueError, match="leading"):
            Polynomial([0.0, 0.0, 0.0, 1.0])

    def test_increasing_reaction_rejected(self):
        # p = 3r - r^3 has p'(0) = 3 > 0
        with pytest.raises(ValueError, match="nonincreasing"):
            Polynomial([0.0, 3.0, 0.0, -1.0])

    def test_degree_one_admitted(self):
        p = Polynomial([0.0, -1.0])
        assert p(2.0) == -2.0

    def test_scaled(self, cubic):
        assert cubic.scaled(2.0)(1.0) == -2.0


class TestResolvent:
    def test_fixed_point_at_zero(self, cubic):
        y = YosidaApprox(cubic, alpha=0.7)
        assert y.resolvent(0.0) == pytest.approx(0.0, abs=1e-12)

    def test_cubic_closed_form(self, cubic):
        # J + J^3 = 2 has the root J = 1
        y = YosidaApprox(cubic, alpha=1.0)
        assert y.resolvent(2.0) == pytest.approx(1.0, rel=1e-10)

    @pytest.mark.parametrize("alpha", [0.1, 1.0, 10.0])
    def test_linear_reaction(self, alpha):
        y = YosidaApprox(Polynomial([0.0, -1.0]), alpha=alpha)
        for r in (-3.0, 0.5, 7.0):
            assert y.resolvent(r) == pytest.approx(r / (1.0 + alpha), rel=1e-12)

    def test_identity_on_arrays(self, cubic):
        y = YosidaApprox(cubic, alpha=0.25)
        r = make_rng(12, 0).normal(scale=5.0, size=200)
        J = y.resolvent(r)
        np.testing.assert_allclose(J - 0.25 * cubic(J), r, rtol=1e-10, atol=1e-10)

    def test_contraction(self, cubic):
        y = YosidaApprox(cubic, alpha=0.5)
        rng = make_rng(12, 1)
        r, s = rng.normal(scale=4.0, size=(2, 500))
        assert np.all(np.abs(y.resolvent(r) - y.resolvent(s)) <= np.abs(r - s) + 1e-10)

    @settings(max_examples=60, deadline=None)
    @given(r=st.floats(-50, 50), alpha=st.floats(1e-3, 10))
    def test_identity_property(self, r, alpha):
        p = Polynomial([0.1, -0.5, 0.0, -1.0])
        y = YosidaApprox(p, alpha=alpha)
        J = y.resolvent(r)
        assert J - alpha * p(J) == pytest.approx(r, rel=1e-9, abs=1e-9)


class TestYosida:
    def test_cubic_closed_form(self, cubic):
        y = YosidaApprox(cubic, alpha=0.5)
        # J = 1 solves J + 0.5 J^3 = 1.5, so p_a(1.5) = p(1) = -1 = (J - r)/alpha
        assert y.value(1.5) == pytest.approx(-1.0, rel=1e-10)

    @pytest.mark.parametrize("alpha", [0.2, 2.0])
    def test_linear_reaction(self, alpha):
        y = YosidaApprox(Polynomial([0.0, -1.0]), alpha=alpha)
        r = np.array([-2.0, 0.3, 5.0])
        np.testing.assert_allclose(y.value(r), -r / (1.0 + alpha), rtol=1e-12)

    def test_converges_to_reaction(self, cubic):
        y = YosidaApprox(cubic, alpha=1e-6)
        assert abs(y.value(1.0) - (-1.0)) < 1e-5

    def test_dominated_by_reaction(self, cubic):
        y = YosidaApprox(cubic, alpha=0.3)
        r = make_rng(13, 0).normal(scale=3.0, size=300)
        assert np.all(np.abs(y.value(r)) <= np.abs(cubic(r)) + 1e-12)

    def test_monotone_in_alpha(self, cubic):
        rs = np.array([-2.5, -1.0, 0.7, 1.3, 3.0])
        gaps = []
        for alpha in (1.0, 0.1, 0.01, 0.001):
            y = YosidaApprox(cubic, alpha=alpha)
            gaps.append(np.abs(y.value(rs) - cubic(rs)))
        for a, b in zip(gaps, gaps[1:]):
            assert np.all(b <= a + 1e-12)

    def test_monotone_lipschitz(self, cubic):
        y = YosidaApprox(cubic, alpha=0.4)
        rng = make_rng(13, 1)
        r, s = np.sort(rng.normal(scale=4.0, size=(2, 10000)), axis=0)
        dv = y.value(s) - y.value(r)
        assert np.all(dv <= 1e-10)
        assert np.all(dv >= -(s - r) / 0.4 - 1e-10)

    def test_consistency_with_resolvent(self, cubic):
        y = YosidaApprox(cubic, alpha=0.15)
        r = make_rng(13, 2).normal(scale=5.0, size=200)
        np.testing.assert_allclose(y.value(r), cubic(y.resolvent(r)), rtol=1e-10, atol=1e-12)

    def test_non_finite_rejected(self, cubic):
        y = YosidaApprox(cubic, alpha=0.5)
        with pytest.raises(ValueError):
            y.value(np.array([1.0, np.inf]))


class TestYosidaDerivative:
    def test_cubic_closed_form(self, cubic):
        y = YosidaApprox(cubic, alpha=0.5)
        # J = 1, p'(1) = -3, so p'_a = -3/(1 + 0.5*3) = -1.2
        assert y.deriv(1.5) == pytest.approx(-1.2, rel=1e-10)

    def test_matches_finite_difference(self, cubic):
        y = YosidaApprox(cubic, alpha=0.5)
        h = 1e-6
        fd = (y.value(1.5 + h) - y.value(1.5 - h)) / (2 * h)
        assert y.deriv(1.5) == pytest.approx(fd, rel=1e-6)

    def test_zero_slope_maps_to_zero(self):
        # p = -1 - r^3 has p'(0) = 0, and J_a(r) = 0 exactly at r = -a*p(0) = a
        p = Polynomial([-1.0, 0.0, 0.0, -1.0])
        y = YosidaApprox(p, alpha=0.3)
        assert y.deriv(0.3) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("alpha", [0.1, 1.0])
    def test_linear_reaction(self, alpha):
        y = YosidaApprox(Polynomial([0.0, -1.0]), alpha=alpha)
        assert y.deriv(3.0) == pytest.approx(-1.0 / (1.0 + alpha), rel=1e-12)

    def test_range(self, cubic):
        y = YosidaApprox(cubic, alpha=0.2)
        d = y.deriv(make_rng(14, 0).normal(scale=10.0, size=1000))
        assert np.all(d <= 0.0)
        assert np.all(d >= -1.0 / 0.2 - 1e-9)

    def test_pair_consistent(self, cubic):
        y = YosidaApprox(cubic, alpha=0.35)
        r = make_rng(14, 1).normal(scale=3.0, size=50)
        pa, dpa = y.value_and_deriv(r)
        np.testing.assert_allclose(pa, y.value(r), rtol=1e-12)
        np.testing.assert_allclose(dpa, y.deriv(r), rtol=1e-12)


def test_invalid_yosida_settings(cubic):
    with pytest.raises(ValueError):
        YosidaApprox(cubic, alpha=0.0)
    with pytest.raises(ValueError):
        YosidaApprox(cubic, alpha=0.1, newton_tol=-1.0)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specrd.basis import (
    BasisError,
    SpectralBasis,
    SpectralField,
    apply_fractional,
    from_grid,
    heat_semigroup,
    lp_norm,
    random_field,
    to_grid,
)
from specrd.rng import make_rng

from oracles import direct_sine_values, sine_matrix

PI2 = math.pi**2


class TestEigenvalues:
    def test_mode_one(self):
        assert SpectralBasis(1, 4).eigenvalue(1) == pytest.approx(PI2)

    def test_two_dimensional_diagonal(self):
        assert SpectralBasis(2, 4).eigenvalue((1, 1)) == pytest.approx(2 * PI2)

    def test_scaling(self):
        assert SpectralBasis(1, 4).eigenvalue(3) == pytest.approx(9 * PI2)

    @pytest.mark.parametrize("bad", [0, 5, -1])
    def test_out_of_range(self, bad):
        with pytest.raises(BasisError):
            SpectralBasis(1, 4).eigenvalue(bad)

    def test_wrong_arity(self):
        with pytest.raises(BasisError):
            SpectralBasis(2, 4).eigenvalue(1)

    def test_monotone_under_componentwise_increase(self):
        b = SpectralBasis(2, 6)
        rng = make_rng(3, 0)
        for _ in range(50):
            k = rng.integers(1, 6, size=2)
            step = rng.integers(0, 2, size=2)
            if not step.any():
                step[0] = 1
            assert b.eigenvalue(k) < b.eigenvalue(k + step)


class TestFractionalPowers:
    def test_zero_exponent_is_identity(self):
        b = SpectralBasis(1, 6)
        f = random_field(b, make_rng(0, 1))
        assert np.array_equal(apply_fractional(0.0, f).coeffs, f.coeffs)

    def test_full_power_on_mode(self):
        b = SpectralBasis(1, 6)
        f = apply_fractional(1.0, SpectralField.mode(b, 1))
        assert f.coeffs[0] == pytest.approx(PI2)

    def test_half_power_composes(self):
        b = SpectralBasis(1, 8)
        f = random_field(b, make_rng(0, 2))
        twice = apply_fractional(0.5, apply_fractional(0.5, f))
        once = apply_fractional(1.0, f)
        np.testing.assert_allclose(twice.coeffs, once.coeffs, rtol=1e-12)

    def test_inverse_composes_to_identity(self):
        b = SpectralBasis(1, 8)
        f = random_field(b, make_rng(0, 3))
        back = apply_fractional(-0.7, apply_fractional(0.7, f))
        np.testing.assert_allclose(back.coeffs, f.coeffs, rtol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(s1=st.floats(-1, 1), s2=st.floats(-1, 1))
    def test_exponent_additivity(self, s1, s2):
        b = SpectralBasis(1, 4)
        f = random_field(b, make_rng(7, 0))
        lhs = apply_fractional(s1, apply_fractional(s2, f))
        rhs = apply_fractional(s1 + s2, f)
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-10, atol=0)


class TestHeatSemigroup:
    def test_zero_time_identity(self):
        b = SpectralBasis(1, 6)
        f = random_field(b, make_rng(1, 0))
        assert np.array_equal(heat_semigroup(0.0, f).coeffs, f.coeffs)

    def test_scalar_exponential_on_mode(self):
        b = SpectralBasis(1, 6)
        f = heat_semigroup(1.0 / PI2, SpectralField.mode(b, 1))
        assert f.coeffs[0] == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_semigroup_law(self):
        b = SpectralBasis(1, 8)
        f = random_field(b, make_rng(1, 1))
        lhs = heat_semigroup(0.3, heat_semigroup(0.2, f))
        rhs = heat_semigroup(0.5, f)
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-12)

    def test_strict_contraction(self):
        b = SpectralBasis(1, 8)
        f = random_field(b, make_rng(1, 2))
        assert heat_semigroup(0.01, f).norm() < f.norm()

    def test_negative_time_rejected(self):
        b = SpectralBasis(1, 4)
        with pytest.raises(ValueError):
            heat_semigroup(-0.1, SpectralField.mode(b, 1))


class TestGridTransforms:
    def test_zero_field(self):
        b = SpectralBasis(1, 4)
        assert np.all(to_grid(SpectralField.zero(b)) == 0.0)

    def test_single_mode_midpoint(self):
        # e_1(1/2) = sqrt(2) sin(pi/2) = sqrt(2); the default grid contains 1/2
        b = SpectralBasis(1, 8)
        vals = to_grid(SpectralField.mode(b, 1))
        mid = (b.grid_size + 1) // 2 - 1
        assert b.axis_points[mid] == pytest.approx(0.5)
        assert vals[mid] == pytest.approx(math.sqrt(2.0), rel=1e-12)

    @pytest.mark.parametrize("n,kmax", [(1, 8), (2, 5), (3, 3)])
    def test_synthesis_matches_direct_summation(self, n, kmax):
        b = SpectralBasis(n, kmax)
        f = random_field(b, make_rng(2, n))
        expected = direct_sine_values(f.coeffs, b.grid_size)
        np.testing.assert_allclose(to_grid(f), expected, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("n,kmax", [(1, 8), (2, 5)])
    def test_roundtrip_on_band_limited_fields(self, n, kmax):
        b = SpectralBasis(n, kmax)
        f = random_field(b, make_rng(2, 10 + n))
        g = from_grid(b, to_grid(f))
        np.testing.assert_allclose(g.coeffs, f.coeffs, rtol=1e-12, atol=1e-14)

    def test_parseval_on_grid(self):
        b = SpectralBasis(1, 16)
        f = random_field(b, make_rng(2, 20))
        vals = to_grid(f)
        grid_sq = b.cell_volume * np.sum(vals**2)
        assert grid_sq == pytest.approx(np.sum(f.coeffs**2), rel=1e-10)

    def test_shape_mismatch(self):
        b = SpectralBasis(1, 4)
        with pytest.raises(BasisError):
            b.analyze(np.zeros(b.grid_size + 1))


class TestLpNorm:
    def test_zero_field(self):
        b = SpectralBasis(1, 4)
        assert lp_norm(SpectralField.zero(b), 4) == 0.0

    def test_p2_equals_parseval(self):
        b = SpectralBasis(1, 16)
        f = random_field(b, make_rng(4, 0))
        assert lp_norm(f, 2) == pytest.approx(f.norm(), rel=1e-10)

    @pytest.mark.parametrize("p", [4, 6])
    def test_against_refined_grid_oracle(self, p):
        # quadrature grid sized for degree-p products: ceil((p+1)/2)*kmax + 1
        kmax = 8
        b = SpectralBasis(1, kmax, grid_size=(p + 2) // 2 * kmax + 1)
        f = random_field(b, make_rng(4, p))
        fine = 4 * (b.grid_size + 1) - 1  # 4x resolution
        vals = direct_sine_values(f.coeffs, fine)
        oracle = (np.sum(vals**p) / (fine + 1.0)) ** (1.0 / p)
        assert lp_norm(f, p) == pytest.approx(oracle, rel=1e-6)

    @pytest.mark.parametrize("p", [3, 1, 0])
    def test_odd_or_small_p_rejected(self, p):
        b = SpectralBasis(1, 4)
        with pytest.raises(ValueError):
            lp_norm(SpectralField.zero(b), p)


class TestSpectralField:
    def test_rejects_non_finite(self):
        b = SpectralBasis(1, 4)
        coeffs = np.zeros(4)
        coeffs[1] = np.nan
        with pytest.raises(BasisError):
            SpectralField(b, coeffs)

    def test_immutable(self):
        b = SpectralBasis(1, 4)
        f = SpectralField.mode(b, 2)
        with pytest.raises(AttributeError):
            f.coeffs = np.zeros(4)
        with pytest.raises(ValueError):
            f.coeffs[0] = 1.0

    def test_arithmetic(self):
        b = SpectralBasis(1, 4)
        f = SpectralField.mode(b, 1)
        g = SpectralField.mode(b, 2)
        h = 2.0 * f + g - f
        np.testing.assert_allclose(h.coeffs, [1.0, 1.0, 0.0, 0.0])
        assert f.inner(g) == 0.0

    def test_basis_mismatch(self):
        f = SpectralField.mode(SpectralBasis(1, 4), 1)
        g = SpectralField.mode(SpectralBasis(1, 5), 1)
        with pytest.raises(BasisError):
            f + g

    def test_grid_size_validation(self):
        with pytest.raises(BasisError):
            SpectralBasis(1, 8, grid_size=8)
        with pytest.raises(BasisError):
            SpectralBasis(4, 4)


def test_sine_matrix_discrete_orthogonality():
    # the analysis quadrature is exact because the DST grid diagonalises
    # the discrete inner product
    m, kmax = 17, 8
    mat = sine_matrix(kmax, m)
    gram = mat.T @ mat / (m + 1.0)
    np.testing.assert_allclose(gram, np.eye(kmax), atol=1e-13)

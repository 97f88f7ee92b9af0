"""Decreasing polynomial reaction terms and their Yosida regularisation.

The reaction p is a polynomial of odd degree with negative leading
coefficient and p' <= 0 everywhere.  Its resolvent J_a = (I - a*p)^{-1} is a
contraction for every a > 0, and the regularised reaction

    p_a(r) = p(J_a(r)) = (J_a(r) - r)/a

is globally Lipschitz with constant 1/a, nonincreasing, and converges to p
pointwise as a -> 0.  The elementwise solves live in `specrd.kernels`.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import kernels


class Polynomial:
    """p(r) = sum_j coeffs[j] * r^j, ascending order (highest degree last)."""

    def __init__(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.ndim != 1 or coeffs.size < 2:
            raise ValueError("need at least the degree-0 and degree-1 coefficients")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("polynomial coefficients must be finite")
        self.degree = coeffs.size - 1
        if self.degree % 2 == 0:
            raise ValueError(f"reaction degree must be odd, got {self.degree}")
        if coeffs[-1] >= 0:
            raise ValueError(
                f"leading coefficient must be negative, got {coeffs[-1]} at degree {self.degree}"
            )
        self.coeffs = coeffs.copy()
        self.deriv_coeffs = coeffs[1:] * np.arange(1, coeffs.size)
        self._check_nonincreasing()

    def _check_nonincreasing(self):
        # p' has even degree and negative leading coefficient, so it is
        # negative outside the Cauchy root bound; a dense sample inside
        # catches any interior sign change.
        dc = self.deriv_coeffs
        lead = dc[-1]
        if self.degree == 1:
            return  # p' is the (negative) leading coefficient
        bound = 1.0 + np.max(np.abs(dc[:-1])) / abs(lead)
        grid = np.linspace(-bound, bound, 8193)
        vals = npoly.polyval(grid, dc)
        scale = max(1.0, float(np.max(np.abs(dc))))
        if np.max(vals) > 1e-12 * scale:
            r_bad = grid[int(np.argmax(vals))]
            raise ValueError(f"reaction must be nonincreasing; p'({r_bad:.4g}) > 0")

    def __call__(self, r):
        return npoly.polyval(r, self.coeffs)

    def deriv(self, r):
        return npoly.polyval(r, self.deriv_coeffs)

    def scaled(self, factor: float) -> "Polynomial":
        if factor <= 0:
            raise ValueError("scaling factor must be positive")
        return Polynomial(self.coeffs * factor)

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


def _elementwise(fn, r):
    arr = np.asarray(r, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite input to reaction evaluation")
    out = fn(arr.ravel()).reshape(arr.shape)
    if arr.ndim == 0:
        return float(out)
    return out


class YosidaApprox:
    """Resolvent and regularised reaction for one (polynomial, alpha) pair."""

    def __init__(self, poly: Polynomial, alpha: float,
                 newton_tol: float = 1e-12, newton_max_iter: int = 100):
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        if newton_tol <= 0 or newton_max_iter < 1:
            raise ValueError("invalid Newton settings")
        self.poly = poly
        self.alpha = float(alpha)
        self.newton_tol = float(newton_tol)
        self.newton_max_iter = int(newton_max_iter)

    @property
    def lipschitz_bound(self) -> float:
        return 1.0 / self.alpha

    def resolvent(self, r):
        """J_a(r): the unique J with J - alpha*p(J) = r."""
        return _elementwise(
            lambda x: kernels.resolvent(
                x, self.poly.coeffs, self.poly.deriv_coeffs,
                self.alpha, self.newton_tol, self.newton_max_iter,
            ),
            r,
        )

    def value(self, r):
        """p_a(r) = p(J_a(r))."""
        return _elementwise(
            lambda x: kernels.yosida_values(
                x, self.poly.coeffs, self.poly.deriv_coeffs,
                self.alpha, self.newton_tol, self.newton_max_iter,
            )[0],
            r,
        )

    def deriv(self, r):
        """p'_a(r) = p'(J)/(1 - alpha*p'(J)); always in [-1/alpha, 0]."""
        return _elementwise(
            lambda x: kernels.yosida_values(
                x, self.poly.coeffs, self.poly.deriv_coeffs,
                self.alpha, self.newton_tol, self.newton_max_iter,
                want_deriv=True,
            )[1],
            r,
        )

    def value_and_deriv(self, r):
        """(p_a(r), p'_a(r)) from a single resolvent solve."""
        arr = np.asarray(r, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite input to reaction evaluation")
        pa, dpa = kernels.yosida_values(
            arr.ravel(), self.poly.coeffs, self.poly.deriv_coeffs,
            self.alpha, self.newton_tol, self.newton_max_iter, want_deriv=True,
        )
        if arr.ndim == 0:
            return float(pa.reshape(())), float(dpa.reshape(()))
        return pa.reshape(arr.shape), dpa.reshape(arr.shape)

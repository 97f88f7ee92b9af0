import numpy as np
import pytest

from specrd import kernels
from specrd._kernels_np import resolvent as np_resolvent
from specrd._kernels_np import yosida_values as np_yosida
from specrd.rng import make_rng

COEFFS = np.array([0.3, -0.8, 0.0, -1.0])
DCOEFFS = COEFFS[1:] * np.arange(1, 4)


def bisect_resolvent(r, alpha, iters=200):
    """Scalar bisection-only oracle for J - alpha*p(J) = r."""

    def g(s):
        p = COEFFS[0] + COEFFS[1] * s + COEFFS[3] * s**3
        return s - alpha * p

    lo, hi, step = r, r, 1.0 + abs(r)
    while g(lo) > r:
        lo -= step
        step *= 2
    step = 1.0 + abs(r)
    while g(hi) < r:
        hi += step
        step *= 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g(mid) < r:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.fixture
def inputs():
    rng = make_rng(21, 0)
    r = np.concatenate([rng.normal(scale=2.0, size=200),
                        rng.normal(scale=50.0, size=20), [0.0, 1e6, -1e6]])
    return r


def test_numpy_matches_bisection_oracle(inputs):
    J = np_resolvent(inputs, COEFFS, DCOEFFS, 0.3, 1e-13, 100)
    oracle = np.array([bisect_resolvent(r, 0.3) for r in inputs])
    np.testing.assert_allclose(J, oracle, rtol=1e-9, atol=1e-9)


def test_numpy_derivative_in_range(inputs):
    _, dpa = np_yosida(inputs, COEFFS, DCOEFFS, 0.3, 1e-13, 100, want_deriv=True)
    assert np.all(dpa <= 0.0)
    assert np.all(dpa >= -1.0 / 0.3 - 1e-9)


@pytest.mark.skipif("cython" not in kernels.available_backends(),
                    reason="compiled kernels not built")
class TestBackendParity:
    def test_resolvent(self, inputs):
        from specrd import _kernels as cy

        a = cy.resolvent(inputs, COEFFS, DCOEFFS, 0.2, 1e-13, 100)
        b = np_resolvent(inputs, COEFFS, DCOEFFS, 0.2, 1e-13, 100)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_yosida_values(self, inputs):
        from specrd import _kernels as cy

        pa_c, dpa_c = cy.yosida_values(inputs, COEFFS, DCOEFFS, 0.2, 1e-13, 100, True)
        pa_n, dpa_n = np_yosida(inputs, COEFFS, DCOEFFS, 0.2, 1e-13, 100, True)
        np.testing.assert_allclose(pa_c, pa_n, rtol=1e-11, atol=1e-12)
        np.testing.assert_allclose(dpa_c, dpa_n, rtol=1e-11, atol=1e-12)


def test_backend_switching(inputs):
    previous = kernels.BACKEND
    try:
        kernels.use_backend("numpy")
        a = kernels.resolvent(inputs, COEFFS, DCOEFFS, 0.4, 1e-12, 100)
        assert kernels.BACKEND == "numpy"
        if "cython" in kernels.available_backends():
            kernels.use_backend("cython")
            b = kernels.resolvent(inputs, COEFFS, DCOEFFS, 0.4, 1e-12, 100)
            np.testing.assert_allclose(a, b, rtol=1e-12)
    finally:
        kernels.use_backend(previous)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_iteration_cap_raises(inputs):
    with pytest.raises(RuntimeError):
        np_resolvent(inputs, COEFFS, DCOEFFS, 0.3, 1e-13, 2)

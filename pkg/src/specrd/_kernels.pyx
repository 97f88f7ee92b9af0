# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pointwise Yosida kernels (bracketed Newton per grid point).

Same contract as `_kernels_np`; selected automatically by `specrd.kernels`
when the extension built.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport fabs, isfinite

cnp.import_array()


cdef inline double _poly(const double* c, Py_ssize_t nc, double x) noexcept nogil:
    cdef double y = c[nc - 1]
    cdef Py_ssize_t i
    for i in range(nc - 2, -1, -1):
        y = y * x + c[i]
    return y


cdef int _solve_one(const double* c, Py_ssize_t nc,
                    const double* dc, Py_ssize_t ndc,
                    double alpha, double tol, int maxit,
                    double r, double* out) noexcept nogil:
    cdef double lo = r, hi = r, glo, ghi, step, s, err, gp, cand
    cdef int i

    glo = lo - alpha * _poly(c, nc, lo)
    step = 1.0 + fabs(r)
    i = 0
    while glo > r:
        lo -= step
        step *= 2.0
        glo = lo - alpha * _poly(c, nc, lo)
        i += 1
        if i > 200:
            return 1

    ghi = hi - alpha * _poly(c, nc, hi)
    step = 1.0 + fabs(r)
    i = 0
    while ghi < r:
        hi += step
        step *= 2.0
        ghi = hi - alpha * _poly(c, nc, hi)
        i += 1
        if i > 200:
            return 1

    s = r
    if s < lo:
        s = lo
    if s > hi:
        s = hi
    for i in range(maxit):
        err = s - alpha * _poly(c, nc, s) - r
        if fabs(err) <= tol * (1.0 + fabs(r)):
            out[0] = s
            return 0
        if err < 0.0:
            lo = s
        else:
            hi = s
        gp = 1.0 - alpha * _poly(dc, ndc, s)
        cand = s - err / gp
        if cand <= lo or cand >= hi or not isfinite(cand):
            cand = 0.5 * (lo + hi)
        s = cand
    return 1


def resolvent(r, coeffs, dcoeffs, double alpha, double tol, int maxit):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rr = \
        np.ascontiguousarray(r, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cc = \
        np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dd = \
        np.ascontiguousarray(dcoeffs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(rr)
    cdef Py_ssize_t m = rr.shape[0], nc = cc.shape[0], ndc = dd.shape[0]
    cdef const double* cptr = &cc[0]
    cdef const double* dptr = &dd[0]
    cdef int fail = 0
    cdef Py_ssize_t j
    with nogil:
        for j in range(m):
            if _solve_one(cptr, nc, dptr, ndc, alpha, tol, maxit, rr[j], &out[j]):
                fail = 1
                break
    if fail:
        raise RuntimeError("resolvent Newton iteration cap exceeded")
    return out


def yosida_values(r, coeffs, dcoeffs, double alpha, double tol, int maxit,
                  bint want_deriv=False):
    shape = np.shape(r)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] J = \
        resolvent(r, coeffs, dcoeffs, alpha, tol, maxit)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cc = \
        np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dd = \
        np.ascontiguousarray(dcoeffs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pa = np.empty_like(J)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dpa
    cdef Py_ssize_t m = J.shape[0], nc = cc.shape[0], ndc = dd.shape[0]
    cdef const double* cptr = &cc[0]
    cdef const double* dptr = &dd[0]
    cdef Py_ssize_t j
    cdef double dp
    if want_deriv:
        dpa = np.empty_like(J)
        with nogil:
            for j in range(m):
                pa[j] = _poly(cptr, nc, J[j])
                dp = _poly(dptr, ndc, J[j])
                dpa[j] = dp / (1.0 - alpha * dp)
        return pa.reshape(shape), dpa.reshape(shape)
    with nogil:
        for j in range(m):
            pa[j] = _poly(cptr, nc, J[j])
    return pa.reshape(shape), None

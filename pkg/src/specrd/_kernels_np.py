"""Vectorised numpy fallback for the pointwise Yosida kernels.

These routines are the hot inner loop of the time stepper: for every grid
point they solve the scalar resolvent equation J - alpha*p(J) = r with a
bracketed Newton iteration.  The compiled extension in `_kernels.pyx`
implements the same contract; `specrd.kernels` picks whichever is available.
"""

from __future__ import annotations

import numpy as np


def _horner(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = np.full_like(x, coeffs[-1])
    for a in coeffs[-2::-1]:
        y = y * x + a
    return y


def resolvent(r, coeffs, dcoeffs, alpha, tol, maxit):
    """Solve J - alpha*p(J) = r elementwise (p given by ascending `coeffs`).

    g(s) = s - alpha*p(s) is strictly increasing because p' <= 0, so the root
    is unique; Newton steps are kept inside a sign-change bracket and replaced
    by bisection whenever they leave it.
    """
    r = np.ascontiguousarray(r, dtype=np.float64).ravel()
    lo = r.copy()
    hi = r.copy()
    glo = lo - alpha * _horner(coeffs, lo)
    ghi = glo.copy()

    step = 1.0 + np.abs(r)
    for _ in range(200):
        need = glo > r
        if not need.any():
            break
        lo[need] -= step[need]
        step[need] *= 2.0
        glo[need] = lo[need] - alpha * _horner(coeffs, lo[need])
    else:
        raise RuntimeError("resolvent bracketing failed (lower bound)")

    step = 1.0 + np.abs(r)
    for _ in range(200):
        need = ghi < r
        if not need.any():
            break
        hi[need] += step[need]
        step[need] *= 2.0
        ghi[need] = hi[need] - alpha * _horner(coeffs, hi[need])
    else:
        raise RuntimeError("resolvent bracketing failed (upper bound)")

    s = np.clip(r, lo, hi)
    active = np.ones(r.shape, dtype=bool)
    for _ in range(maxit):
        err = s - alpha * _horner(coeffs, s) - r
        active &= np.abs(err) > tol * (1.0 + np.abs(r))
        if not active.any():
            return s
        below = active & (err < 0.0)
        above = active & (err > 0.0)
        lo[below] = s[below]
        hi[above] = s[above]
        gp = 1.0 - alpha * _horner(dcoeffs, s)
        cand = s - err / gp
        bad = (cand <= lo) | (cand >= hi) | ~np.isfinite(cand)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        s = np.where(active, cand, s)
    raise RuntimeError("resolvent Newton iteration cap exceeded")


def yosida_values(r, coeffs, dcoeffs, alpha, tol, maxit, want_deriv=False):
    """p_alpha(r) = p(J_alpha(r)) and optionally p'_alpha(r), elementwise."""
    shape = np.shape(r)
    J = resolvent(r, coeffs, dcoeffs, alpha, tol, maxit)
    pa = _horner(coeffs, J).reshape(shape)
    if not want_deriv:
        return pa, None
    dp = _horner(dcoeffs, J)
    dpa = (dp / (1.0 - alpha * dp)).reshape(shape)
    return pa, dpa

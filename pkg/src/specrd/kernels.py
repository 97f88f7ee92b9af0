"""Kernel backend selection.

The pointwise Yosida kernels exist twice: a Cython extension (`_kernels`)
built at install time and a pure-numpy fallback (`_kernels_np`).  The
compiled backend is preferred when present; set SPECRD_KERNELS=numpy (or
=cython) to force one.  `use_backend` switches at runtime, which the
benchmark uses to compare the two on identical inputs.
"""

from __future__ import annotations

import os

from . import _kernels_np

_BACKENDS = {"numpy": _kernels_np}
try:
    from . import _kernels as _kernels_cy

    _BACKENDS["cython"] = _kernels_cy
except ImportError:
    _kernels_cy = None

_active = None
BACKEND = ""


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def use_backend(name: str) -> str:
    """Select the active kernel backend; returns the previous name."""
    global _active, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; built: {available_backends()}")
    previous = BACKEND
    _active = _BACKENDS[name]
    BACKEND = name
    return previous


def resolvent(r, coeffs, dcoeffs, alpha, tol, maxit):
    return _active.resolvent(r, coeffs, dcoeffs, alpha, tol, maxit)


def yosida_values(r, coeffs, dcoeffs, alpha, tol, maxit, want_deriv=False):
    return _active.yosida_values(r, coeffs, dcoeffs, alpha, tol, maxit, want_deriv)


_requested = os.environ.get("SPECRD_KERNELS", "").strip().lower()
if _requested:
    use_backend(_requested)
else:
    use_backend("cython" if "cython" in _BACKENDS else "numpy")

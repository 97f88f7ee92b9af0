"""Dirichlet sine basis on the unit cube.

The state space is L2([0,1]^n) expanded in the orthonormal eigenfunctions of
the Dirichlet Laplacian,

    e_k(xi) = 2^{n/2} prod_i sin(k_i pi xi_i),      lam_k = pi^2 |k|^2,

for multi-indices k in {1..kmax}^n.  Grid transforms use the type-I discrete
sine transform on the uniform interior grid xi_j = j/(m+1); with that grid the
DST is unitary, so the discrete Parseval identity is exact for band-limited
fields and even-power integrals are free of aliasing whenever the grid is
fine enough (see `SpectralBasis` grid sizing).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.fft import dstn


class BasisError(ValueError):
    pass


class SpectralBasis:
    """Truncated sine basis with kmax modes per axis on an m-point grid.

    The default grid, m = 2*kmax + 1, represents cubic pointwise products of
    band-limited fields without spectral folding; pass a larger `grid_size`
    for higher-degree reaction terms (ceil((N+1)/2)*kmax + 1 for degree N).
    """

    def __init__(self, n: int, kmax: int, grid_size: int | None = None):
        if n not in (1, 2, 3):
            raise BasisError(f"spatial dimension must be 1, 2 or 3, got {n}")
        if kmax < 1:
            raise BasisError(f"kmax must be a positive integer, got {kmax}")
        if grid_size is None:
            grid_size = 2 * kmax + 1
        if grid_size <= kmax:
            raise BasisError(
                f"grid_size must exceed kmax={kmax} to resolve all modes, got {grid_size}"
            )
        self.n = int(n)
        self.kmax = int(kmax)
        self.grid_size = int(grid_size)
        self.shape = (self.kmax,) * self.n
        self.grid_shape = (self.grid_size,) * self.n
        self.size = self.kmax**self.n
        self.grid_points = self.grid_size**self.n

        k = np.arange(1, self.kmax + 1, dtype=np.float64)
        mesh = np.meshgrid(*([k] * self.n), indexing="ij")
        self.ksq = sum(a * a for a in mesh)
        self.lam = math.pi**2 * self.ksq  # eigenvalues of -A, shape self.shape
        self.lam_flat = np.ascontiguousarray(self.lam.reshape(-1))
        self.axis_points = np.arange(1, self.grid_size + 1) / (self.grid_size + 1.0)
        self.cell_volume = (self.grid_size + 1.0) ** (-self.n)
        # converts orthonormal-basis coefficients to the unitary-DST convention
        self._dst_scale = (self.grid_size + 1.0) ** (self.n / 2.0)

    def __eq__(self, other):
        return (
            isinstance(other, SpectralBasis)
            and (self.n, self.kmax, self.grid_size) == (other.n, other.kmax, other.grid_size)
        )

    def __hash__(self):
        return hash((self.n, self.kmax, self.grid_size))

    def __repr__(self):
        return f"SpectralBasis(n={self.n}, kmax={self.kmax}, grid_size={self.grid_size})"

    def eigenvalue(self, k) -> float:
        """pi^2 |k|^2 for a multi-index k with 1 <= k_i <= kmax."""
        arr = np.atleast_1d(np.asarray(k, dtype=np.int64))
        if arr.shape != (self.n,):
            raise BasisError(f"multi-index must have {self.n} components, got {k!r}")
        if np.any(arr < 1) or np.any(arr > self.kmax):
            raise BasisError(f"multi-index {k!r} outside 1..{self.kmax} per axis")
        return math.pi**2 * float(np.sum(arr * arr))

    def mode_flat_index(self, k) -> int:
        arr = np.atleast_1d(np.asarray(k, dtype=np.int64))
        self.eigenvalue(arr)  # range check
        return int(np.ravel_multi_index(tuple(arr - 1), self.shape))

    # -- transforms -------------------------------------------------------
    # Leading axes of the input are treated as batch dimensions.

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficients (..., kmax^n axes) -> grid values (..., m^n axes)."""
        coeffs = np.asarray(coeffs, dtype=np.float64)
        batch = coeffs.shape[: coeffs.ndim - self.n]
        if coeffs.shape[coeffs.ndim - self.n :] != self.shape:
            raise BasisError(f"coefficient block must end with shape {self.shape}")
        buf = np.zeros(batch + self.grid_shape)
        buf[(Ellipsis,) + tuple(slice(0, self.kmax) for _ in range(self.n))] = coeffs
        axes = tuple(range(len(batch), len(batch) + self.n))
        return dstn(buf * self._dst_scale, type=1, norm="ortho", axes=axes)

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Grid values -> coefficients of the discrete L2 projection."""
        values = np.asarray(values, dtype=np.float64)
        batch = values.shape[: values.ndim - self.n]
        if values.shape[values.ndim - self.n :] != self.grid_shape:
            raise BasisError(f"grid block must end with shape {self.grid_shape}")
        axes = tuple(range(len(batch), len(batch) + self.n))
        out = dstn(values, type=1, norm="ortho", axes=axes)
        sel = (Ellipsis,) + tuple(slice(0, self.kmax) for _ in range(self.n))
        return np.ascontiguousarray(out[sel]) / self._dst_scale

    def synthesize_flat(self, flat: np.ndarray) -> np.ndarray:
        """(..., size) coefficient rows -> (..., grid_points) value rows."""
        flat = np.asarray(flat, dtype=np.float64)
        batch = flat.shape[:-1]
        vals = self.synthesize(flat.reshape(batch + self.shape))
        return vals.reshape(batch + (self.grid_points,))

    def analyze_flat(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        batch = values.shape[:-1]
        coeffs = self.analyze(values.reshape(batch + self.grid_shape))
        return coeffs.reshape(batch + (self.size,))


class SpectralField:
    """Element of L2([0,1]^n) given by its (finite) sine coefficients."""

    __slots__ = ("basis", "coeffs")

    def __init__(self, basis: SpectralBasis, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != basis.shape:
            raise BasisError(f"coefficients must have shape {basis.shape}, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise BasisError("field has non-finite coefficients")
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    @classmethod
    def zero(cls, basis: SpectralBasis) -> "SpectralField":
        return cls(basis, np.zeros(basis.shape))

    @classmethod
    def mode(cls, basis: SpectralBasis, k, amplitude: float = 1.0) -> "SpectralField":
        """Single eigenmode e_k scaled by `amplitude`."""
        arr = np.atleast_1d(np.asarray(k, dtype=np.int64))
        basis.eigenvalue(arr)
        coeffs = np.zeros(basis.shape)
        coeffs[tuple(arr - 1)] = amplitude
        return cls(basis, coeffs)

    @property
    def flat(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    def norm(self) -> float:
        """L2(O) norm; Parseval, so just the euclidean coefficient norm."""
        return float(np.sqrt(np.sum(self.coeffs**2)))

    def inner(self, other: "SpectralField") -> float:
        self._check_same_basis(other)
        return float(np.sum(self.coeffs * other.coeffs))

    def _check_same_basis(self, other):
        if self.basis != other.basis:
            raise BasisError("fields live on different bases")

    def __add__(self, other):
        self._check_same_basis(other)
        return SpectralField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_same_basis(other)
        return SpectralField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.basis, -self.coeffs)

    def __repr__(self):
        return f"SpectralField({self.basis!r}, |f|={self.norm():.6g})"


def apply_fractional(s: float, f: SpectralField) -> SpectralField:
    """(-A)^s f: multiply the coefficient at k by (pi^2 |k|^2)^s."""
    return SpectralField(f.basis, f.coeffs * f.basis.lam**float(s))


def heat_semigroup(t: float, f: SpectralField) -> SpectralField:
    """e^{tA} f: multiply the coefficient at k by exp(-pi^2 |k|^2 t)."""
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    return SpectralField(f.basis, f.coeffs * np.exp(-f.basis.lam * float(t)))


def to_grid(f: SpectralField) -> np.ndarray:
    """Evaluate f on the interior collocation grid."""
    return f.basis.synthesize(f.coeffs)


def from_grid(basis: SpectralBasis, values: np.ndarray) -> SpectralField:
    """Discrete L2 projection of grid values onto the first kmax modes."""
    return SpectralField(basis, basis.analyze(values))


def lp_norm(f: SpectralField, p: int) -> float:
    """Quadrature approximation of the L^p(O) norm for even p >= 2."""
    if p < 2 or p % 2 != 0:
        raise ValueError(f"only even p >= 2 are supported, got {p}")
    vals = to_grid(f)
    return float((f.basis.cell_volume * np.sum(vals**p)) ** (1.0 / p))


def random_field(
    basis: SpectralBasis, rng: np.random.Generator, smoothness: float = 0.0
) -> SpectralField:
    """Gaussian field with coefficient std lam_k^{-smoothness}."""
    coeffs = rng.standard_normal(basis.shape) * basis.lam ** (-float(smoothness))
    return SpectralField(basis, coeffs)

"""Exponential-Euler time integration of the regularised dynamics.

The state satisfies dX = [AX + p_a(X)]dt + (-A)^{-gamma/2} dW on the
truncated sine basis.  Each mode is advanced with the exact linear
propagator, an explicit treatment of the regularised reaction, and the exact
Ornstein-Uhlenbeck noise increment:

    X'_k = e^{-lam_k dt} X_k + (1 - e^{-lam_k dt})/lam_k * [p_a(X)]_k
           + lam_k^{-gamma/2} * sig_k * zeta_k,
    sig_k^2 = (1 - e^{-2 lam_k dt}) / (2 lam_k),

where [p_a(X)]_k is the sine projection of the grid-evaluated reaction and
zeta are unit normals.  The same unit normals define the cylindrical Wiener
increments dW_k = sqrt(dt) * zeta_k stored with a path, so stochastic
integrals against dW are computable without inverting the noise colouring.

The derivative flow eta (the directional derivative of the solution map) is
advanced with the same scheme, with the reaction replaced by the pointwise
multiplier p'_a(X) frozen over the step.  That update is the exact
linearisation of the discrete state update, so eta matches coupled finite
differences of the discrete flow to O(eps^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .basis import SpectralBasis, SpectralField
from .reaction import Polynomial, YosidaApprox
from .rng import make_rng


class ConfigError(ValueError):
    pass


class BlowUpError(RuntimeError):
    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


STABILITY_CAP = 0.5  # dt * Lipschitz(p_a) = dt/alpha must stay below this


def _dealias_grid_size(kmax: int, degree: int) -> int:
    return math.ceil((degree + 1) / 2) * kmax + 1


@dataclass(frozen=True)
class SimConfig:
    """Validated simulation parameters.

    `poly=None` means no reaction (the exactly Gaussian baseline).  The noise
    exponent must satisfy n/2 - 1 < gamma < 1, which also forces n < 4.
    """

    n: int = 1
    kmax: int = 32
    gamma: float = 0.0
    alpha: float = 0.1
    dt: float = 0.01
    horizon: float = 1.0
    seed: int = 0
    poly: Optional[Polynomial] = None
    grid_size: Optional[int] = None
    newton_tol: float = 1e-12
    newton_max_iter: int = 100

    def __post_init__(self):
        lo = self.n / 2.0 - 1.0
        if not (lo < self.gamma < 1.0):
            raise ConfigError(
                f"gamma must lie in (n/2-1, 1) = ({lo}, 1) for n={self.n}; got {self.gamma}"
            )
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.horizon < self.dt:
            raise ConfigError(f"horizon {self.horizon} shorter than one step dt={self.dt}")
        if self.poly is not None and self.dt / self.alpha > STABILITY_CAP + 1e-12:
            raise ConfigError(
                f"dt/alpha = {self.dt / self.alpha:.4g} exceeds the stability cap "
                f"{STABILITY_CAP}; shrink dt or raise alpha"
            )
        if self.grid_size is None:
            degree = 3 if self.poly is None else self.poly.degree
            object.__setattr__(self, "grid_size", _dealias_grid_size(self.kmax, degree))

    @property
    def basis(self) -> SpectralBasis:
        cached = getattr(self, "_basis_cache", None)
        if cached is None:
            cached = SpectralBasis(self.n, self.kmax, self.grid_size)
            object.__setattr__(self, "_basis_cache", cached)
        return cached

    @property
    def n_steps(self) -> int:
        steps = int(round(self.horizon / self.dt))
        if abs(steps * self.dt - self.horizon) > 1e-9 * max(1.0, self.horizon):
            raise ConfigError(
                f"horizon {self.horizon} is not an integer number of steps of dt={self.dt}"
            )
        return steps

    def replace(self, **kwargs) -> "SimConfig":
        """Copy with changed fields; re-runs validation."""
        if ("kmax" in kwargs or "poly" in kwargs or "n" in kwargs) and "grid_size" not in kwargs:
            kwargs["grid_size"] = None  # recompute the dealiased grid
        if (
            "alpha" in kwargs
            and "dt" not in kwargs
            and kwargs.get("poly", self.poly) is not None
        ):
            # keep the explicit reaction stable when only alpha shrinks
            kwargs.setdefault("dt", min(self.dt, STABILITY_CAP * kwargs["alpha"] * 0.5))
        return replace(self, **kwargs)

    def describe(self) -> dict:
        return {
            "n": self.n,
            "kmax": self.kmax,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "dt": self.dt,
            "horizon": self.horizon,
            "seed": self.seed,
            "reaction": None if self.poly is None else self.poly.coeffs.tolist(),
            "grid_size": self.grid_size,
            "newton_tol": self.newton_tol,
        }


def steps_for(duration: float, dt: float) -> tuple[int, float]:
    """Integer step count covering `duration` with step <= dt."""
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    n = max(1, math.ceil(duration / dt - 1e-9))
    return n, duration / n


@dataclass
class EngineResult:
    x: np.ndarray                       # (M, K) final coefficients
    eta: Optional[np.ndarray] = None    # (M, K) final derivative flow
    bel: Optional[np.ndarray] = None    # (M,) accumulated BEL integrals
    energy: Optional[np.ndarray] = None  # (M, W) accumulated weighted eta energies
    states: Optional[np.ndarray] = None  # (steps+1, M, K) if recorded
    etas: Optional[np.ndarray] = None
    noise: Optional[np.ndarray] = None  # (steps, M, K) Wiener increments


class Engine:
    """Batched stepper for one SimConfig (and per-call step size)."""

    def __init__(self, cfg: SimConfig, dt: Optional[float] = None):
        self.cfg = cfg
        self.basis = cfg.basis
        self.dt = cfg.dt if dt is None else float(dt)
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if cfg.poly is not None and self.dt / cfg.alpha > STABILITY_CAP + 1e-12:
            raise ConfigError("engine dt violates the stability cap")
        lam = self.basis.lam_flat
        decay2 = np.exp(-2.0 * lam * self.dt)
        self.decay = np.exp(-lam * self.dt)
        self.drive = (1.0 - self.decay) / lam
        sig = np.sqrt((1.0 - decay2) / (2.0 * lam))  # exact OU increment std
        # coloured noise gain, scaled so it multiplies dW ~ N(0, dt)
        self.noise_gain = lam ** (-cfg.gamma / 2.0) * sig / math.sqrt(self.dt)
        # weight of <(-A)^{gamma/2} eta_m, dW_m> in the discrete BEL integral:
        # the conditional expectation of the step's Wiener integral given the
        # OU increment is (e^{-lam dt} dt / sig^2) * increment, which makes the
        # discrete integral exactly unbiased whenever eta evolves linearly
        # over the step; the plain sqrt(dt) pairing carries an O(lam dt) bias.
        self.bel_weight = (
            lam ** (cfg.gamma / 2.0) * self.decay * math.sqrt(self.dt) / sig
        )
        self.yos = (
            None
            if cfg.poly is None
            else YosidaApprox(cfg.poly, cfg.alpha, cfg.newton_tol, cfg.newton_max_iter)
        )

    def energy_weights(self, betas) -> np.ndarray:
        """Per-mode weights turning left-endpoint eta samples into the exact
        time integral of |(-A)^beta e^{sA} eta|^2 over one step."""
        lam = self.basis.lam_flat
        rows = [
            lam ** (2.0 * b - 1.0) * (1.0 - np.exp(-2.0 * lam * self.dt)) / 2.0
            for b in betas
        ]
        return np.stack(rows)

    def run(
        self,
        x0: np.ndarray,
        steps: int,
        rng: Optional[np.random.Generator] = None,
        *,
        noise: Optional[np.ndarray] = None,
        eta0: Optional[np.ndarray] = None,
        collect_bel: bool = False,
        energy_weights: Optional[np.ndarray] = None,
        record: bool = False,
    ) -> EngineResult:
        """Advance a batch of paths `steps` steps.

        x0: (M, K) or (K,) coefficient rows.  `noise`, if given, holds the
        cylindrical Wiener increments dW (variance dt per mode) with shape
        (steps, M, K) and overrides `rng`.  eta0 switches on the derivative
        flow; collect_bel accumulates sum_m <(-A)^{gamma/2} eta_m, dW_m> per
        path (left endpoint).
        """
        basis = self.basis
        x = np.atleast_2d(np.asarray(x0, dtype=np.float64)).copy()
        if x.shape[1] != basis.size:
            raise ConfigError(f"state rows must have {basis.size} coefficients")
        if collect_bel and eta0 is None:
            raise ValueError("BEL accumulation needs the derivative flow")
        eta = None
        if eta0 is not None:
            eta = np.atleast_2d(np.asarray(eta0, dtype=np.float64)).copy()
        m_paths = max(x.shape[0], eta.shape[0] if eta is not None else 1)
        if x.shape[0] == 1 and m_paths > 1:
            x = np.repeat(x, m_paths, axis=0)
        if eta is not None and eta.shape[0] == 1 and m_paths > 1:
            eta = np.repeat(eta, m_paths, axis=0)
        if x.shape[0] != m_paths or (eta is not None and eta.shape[0] != m_paths):
            raise ConfigError("state and derivative-flow batches differ in size")
        if noise is None and steps > 0 and rng is None:
            raise ValueError("either rng or an explicit noise array is required")
        if noise is not None:
            noise = np.asarray(noise, dtype=np.float64)
            if noise.shape != (steps, m_paths, basis.size):
                raise ConfigError(
                    f"noise must have shape {(steps, m_paths, basis.size)}, got {noise.shape}"
                )

        bel = np.zeros(m_paths) if collect_bel else None
        energy = (
            np.zeros((m_paths, energy_weights.shape[0]))
            if energy_weights is not None
            else None
        )
        states = etas = noises = None
        if record:
            states = np.empty((steps + 1, m_paths, basis.size))
            states[0] = x
            if eta is not None:
                etas = np.empty((steps + 1, m_paths, basis.size))
                etas[0] = eta
            noises = np.empty((steps, m_paths, basis.size))

        sqrt_dt = math.sqrt(self.dt)
        for m in range(steps):
            dw = noise[m] if noise is not None else sqrt_dt * rng.standard_normal(
                (m_paths, basis.size)
            )
            fx = 0.0
            dpa_grid = None
            if self.yos is not None:
                grid_x = basis.synthesize_flat(x)
                if eta is not None:
                    pa, dpa_grid = self.yos.value_and_deriv(grid_x)
                else:
                    pa = self.yos.value(grid_x)
                fx = basis.analyze_flat(pa)
            if energy is not None:
                energy += (eta[:, None, :] ** 2 * energy_weights[None, :, :]).sum(axis=2)
            if bel is not None:
                bel += ((eta * self.bel_weight) * dw).sum(axis=1)
            if eta is not None:
                if dpa_grid is not None:
                    reta = basis.analyze_flat(dpa_grid * basis.synthesize_flat(eta))
                    eta = self.decay * eta + self.drive * reta
                else:
                    eta = self.decay * eta
            x = self.decay * x + self.drive * fx + self.noise_gain * dw
            if not np.all(np.isfinite(x)):
                raise BlowUpError(m + 1)
            if record:
                states[m + 1] = x
                noises[m] = dw
                if etas is not None:
                    etas[m + 1] = eta
        return EngineResult(x=x, eta=eta, bel=bel, energy=energy,
                            states=states, etas=etas, noise=noises)


@dataclass
class PathSample:
    """One trajectory: time grid, states, and Wiener increments.

    `noise[m]` holds the cylindrical increments dW over [times[m],
    times[m+1]) with per-mode variance dt, before noise colouring; they are
    the integrator increments for stochastic integrals along the path.
    """

    times: np.ndarray
    states: list
    noise: np.ndarray

    def __post_init__(self):
        if len(self.states) != self.times.size or self.noise.shape[0] != self.times.size - 1:
            raise ValueError("inconsistent trajectory lengths")
        if not np.all(np.isfinite(self.noise)):
            raise ValueError("non-finite noise increments")

    @property
    def basis(self) -> SpectralBasis:
        return self.states[0].basis


@dataclass
class VariationalPath:
    """Derivative flow along a path: eta[0] = h."""

    times: np.ndarray
    etas: list
    direction: SpectralField
    max_growth: float = field(init=False)

    def __post_init__(self):
        h_norm = self.direction.norm()
        norms = [e.norm() for e in self.etas]
        self.max_growth = max(norms) / h_norm if h_norm > 0 else 0.0
        if self.max_growth > 1.1:
            raise ValueError(
                f"derivative flow grew by factor {self.max_growth:.3g}; "
                "the dissipative update is broken"
            )


def simulate_path(
    cfg: SimConfig,
    x0: SpectralField,
    stream: int = 0,
    noise: Optional[np.ndarray] = None,
) -> PathSample:
    """Integrate one trajectory over cfg.horizon; deterministic per (seed, stream).

    `noise`, if given, must hold the Wiener increments with shape
    (n_steps, size) and replaces the stream draws (used for coupled runs and
    frozen-noise tests).
    """
    basis = cfg.basis
    if x0.basis != basis:
        raise ConfigError("initial condition lives on a different basis")
    steps = cfg.n_steps
    engine = Engine(cfg)
    if noise is not None:
        noise = np.asarray(noise, dtype=np.float64).reshape(steps, 1, basis.size)
    rng = make_rng(cfg.seed, stream)
    res = engine.run(x0.flat, steps, rng, noise=noise, record=True)
    times = cfg.dt * np.arange(steps + 1)
    states = [SpectralField(basis, res.states[m, 0].reshape(basis.shape))
              for m in range(steps + 1)]
    return PathSample(times=times, states=states, noise=res.noise[:, 0, :])


def simulate_variational(cfg: SimConfig, path: PathSample, h: SpectralField) -> VariationalPath:
    """Derivative flow along a stored path, direction h.

    Exponential-Euler with the grid-pointwise multiplier p'_a(X(t_m)) frozen
    over each step; the exact linearisation of the discrete state update.
    """
    basis = cfg.basis
    if h.basis != basis or path.basis != basis:
        raise ConfigError("path and direction must live on the config basis")
    engine = Engine(cfg)
    eta = h.flat.copy()
    etas = [h]
    for m in range(len(path.states) - 1):
        if engine.yos is not None:
            grid_x = basis.synthesize_flat(path.states[m].flat)
            dpa = engine.yos.deriv(grid_x)
            reta = basis.analyze_flat(dpa * basis.synthesize_flat(eta))
            eta = engine.decay * eta + engine.drive * reta
        else:
            eta = engine.decay * eta
        etas.append(SpectralField(basis, eta.reshape(basis.shape)))
    return VariationalPath(times=path.times.copy(), etas=etas, direction=h)


def sample_stochastic_convolution(cfg: SimConfig, t: float, stream: int = 0) -> SpectralField:
    """Exact draw of the stochastic convolution at time t (zero initial data)."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    basis = cfg.basis
    rng = make_rng(cfg.seed, stream)
    std = convolution_std(cfg, t)
    return SpectralField(basis, std.reshape(basis.shape) * rng.standard_normal(basis.shape))


def convolution_std(cfg: SimConfig, t: float) -> np.ndarray:
    """Per-mode std of the stochastic convolution at time t (flat layout)."""
    lam = cfg.basis.lam_flat
    return lam ** (-cfg.gamma / 2.0) * np.sqrt(-np.expm1(-2.0 * lam * t) / (2.0 * lam))


def _mode_amplitudes_sq(basis: SpectralBasis, xi) -> np.ndarray:
    """e_k(xi)^2 for all modes, flat layout."""
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    if xi.shape != (basis.n,):
        raise ValueError(f"grid point needs {basis.n} coordinates")
    if np.any(xi <= 0) or np.any(xi >= 1):
        raise ValueError(f"grid point must be interior to (0,1)^n, got {xi}")
    k = np.arange(1, basis.kmax + 1)
    per_axis = [2.0 * np.sin(k * math.pi * c) ** 2 for c in xi]
    out = per_axis[0]
    for a in per_axis[1:]:
        out = np.multiply.outer(out, a)
    return out.reshape(-1)


def series_tail_bound(n: int, gamma: float, kmax: int) -> float:
    """Upper bound on sum over k outside {1..kmax}^n of (pi^2 |k|^2)^{-1-gamma}.

    Integral comparison: every omitted lattice point has |k| > kmax, and the
    orthant integral of |y|^{-2-2gamma} beyond radius R converges because
    gamma > n/2 - 1.  Conservative, reported alongside truncated series.
    """
    s = 2.0 + 2.0 * gamma
    if s <= n:
        raise ValueError("series diverges: need gamma > n/2 - 1")
    if n == 1:
        return math.pi ** (-s) * kmax ** (1.0 - s) / (s - 1.0)
    # lattice points outside the box have |k| > kmax; shift by the cell
    # diagonal to dominate the sum by an orthant integral
    radius = max(1.0, kmax - math.sqrt(n))
    surface = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    return (
        math.pi ** (-s)
        * (surface / 2.0**n)
        * radius ** (n - s)
        / (s - n)
    )


def covariance_q(cfg: SimConfig, t: float, xi) -> tuple[float, float]:
    """Pointwise noise variance q(t, xi) of the stochastic convolution.

    Returns (truncated series value, bound on the omitted tail).  Per mode the
    contribution is (1 - e^{-2 lam t}) lam^{-1-gamma} / 2 * e_k(xi)^2.
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    basis = cfg.basis
    lam = basis.lam_flat
    esq = _mode_amplitudes_sq(basis, xi)
    value = float(np.sum(-np.expm1(-2.0 * lam * t) * lam ** (-1.0 - cfg.gamma) / 2.0 * esq))
    tail = 2.0**basis.n / 2.0 * series_tail_bound(basis.n, cfg.gamma, basis.kmax)
    return value, tail


def covariance_sup_bound(cfg: SimConfig) -> float:
    """Uniform-in-(t, xi) bound on q: 2^n/2 * sum over all k of lam_k^{-1-gamma}."""
    basis = cfg.basis
    lam = basis.lam_flat
    boxed = float(np.sum(lam ** (-1.0 - cfg.gamma)))
    return 2.0**basis.n / 2.0 * boxed + 2.0**basis.n / 2.0 * series_tail_bound(
        basis.n, cfg.gamma, basis.kmax
    )

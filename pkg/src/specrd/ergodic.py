"""Invariant-measure sampling, moments, and integration-by-parts checks.

One long trajectory from x0 = 0 (the dynamics is uniquely ergodic), burn-in
discarded, snapshots thinned at roughly one relaxation time 1/lam_1 of the
slowest mode.  Ensemble statistics therefore carry residual autocorrelation;
standard errors of chain averages use block means.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .basis import SpectralField
from .gradients import CylindricalFunctional, MeanEstimate
from .rng import make_rng
from .sde import ConfigError, Engine, SimConfig, steps_for

ENSEMBLE_FORMAT_VERSION = 1


def block_stderr(values: np.ndarray, nblocks: int = 32) -> float:
    """Stderr of the mean from block means (robust to autocorrelation)."""
    values = np.asarray(values, dtype=np.float64)
    nblocks = max(2, min(nblocks, values.size // 4))
    usable = (values.size // nblocks) * nblocks
    blocks = values[:usable].reshape(nblocks, -1).mean(axis=1)
    return float(blocks.std(ddof=1) / math.sqrt(nblocks))


def chain_stats(values: np.ndarray) -> tuple[float, float]:
    return float(np.mean(values)), block_stderr(values)


@dataclass(frozen=True)
class StationarityDiagnostic:
    first_half_mean: float
    second_half_mean: float
    stderr: float
    ok: bool


@dataclass
class InvariantEnsemble:
    """Thinned post-burn-in snapshots approximating the invariant law."""

    cfg: SimConfig
    snapshots: np.ndarray        # (S, K) coefficient rows
    burn_in: float               # time discarded
    thinning: int                # steps between snapshots
    stream: int
    stationarity: StationarityDiagnostic

    def __post_init__(self):
        if self.snapshots.ndim != 2 or self.snapshots.shape[0] < 100:
            raise ValueError("need at least 100 snapshots")
        if not np.all(np.isfinite(self.snapshots)):
            raise ValueError("non-finite snapshots")

    @property
    def alpha(self) -> float:
        return self.cfg.alpha

    @property
    def size(self) -> int:
        return self.snapshots.shape[0]

    def field(self, i: int) -> SpectralField:
        basis = self.cfg.basis
        return SpectralField(basis, self.snapshots[i].reshape(basis.shape))

    def save(self, path) -> None:
        """Columnar ensemble cache; see README for the schema."""
        cfg_json = json.dumps(self.cfg.describe(), sort_keys=True)
        np.savez_compressed(
            path,
            format_version=ENSEMBLE_FORMAT_VERSION,
            cfg_json=cfg_json,
            cfg_hash=_cfg_hash(self.cfg),
            n=self.cfg.n,
            kmax=self.cfg.kmax,
            burn_in=self.burn_in,
            thinning=self.thinning,
            stream=self.stream,
            stationarity=np.array(
                [
                    self.stationarity.first_half_mean,
                    self.stationarity.second_half_mean,
                    self.stationarity.stderr,
                    float(self.stationarity.ok),
                ]
            ),
            snapshots=self.snapshots,
        )

    @classmethod
    def load(cls, path, cfg: Optional[SimConfig] = None) -> "InvariantEnsemble":
        with np.load(path, allow_pickle=False) as data:
            if int(data["format_version"]) != ENSEMBLE_FORMAT_VERSION:
                raise ValueError("unsupported ensemble file version")
            stored = json.loads(str(data["cfg_json"]))
            if cfg is None:
                from .suite import sim_config_from_dict  # deferred: avoids cycle

                cfg = sim_config_from_dict(stored)
            elif _cfg_hash(cfg) != str(data["cfg_hash"]):
                raise ValueError("ensemble cache was produced by a different config")
            st = data["stationarity"]
            return cls(
                cfg=cfg,
                snapshots=np.array(data["snapshots"]),
                burn_in=float(data["burn_in"]),
                thinning=int(data["thinning"]),
                stream=int(data["stream"]),
                stationarity=StationarityDiagnostic(
                    first_half_mean=float(st[0]),
                    second_half_mean=float(st[1]),
                    stderr=float(st[2]),
                    ok=bool(st[3]),
                ),
            )


def _cfg_hash(cfg: SimConfig) -> str:
    blob = json.dumps(cfg.describe(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def sample_invariant(
    cfg: SimConfig,
    burn_in: Optional[float] = None,
    n_snapshots: int = 1000,
    thinning: Optional[int] = None,
    stream: int = 0,
) -> InvariantEnsemble:
    """Single-chain ergodic sampler started from 0.

    Defaults: burn_in = 20/lam_1, snapshot spacing one relaxation time of the
    slowest mode.  A failed half-chain stationarity diagnostic sets a warning
    flag but does not abort.
    """
    basis = cfg.basis
    lam1 = float(basis.lam_flat[0])
    if burn_in is None:
        burn_in = 20.0 / lam1
    if burn_in < 10.0 / lam1:
        raise ValueError(f"burn-in must cover at least 10/lam_1 = {10.0 / lam1:.4g} time units")
    if thinning is None:
        thinning = max(1, math.ceil(1.0 / (lam1 * cfg.dt)))
    if thinning * cfg.dt < 1.0 / lam1 - 1e-12:
        raise ValueError(
            f"thinning*dt = {thinning * cfg.dt:.4g} is below one relaxation time "
            f"1/lam_1 = {1.0 / lam1:.4g}"
        )
    if n_snapshots < 100:
        raise ValueError("need at least 100 snapshots")

    engine = Engine(cfg)
    rng = make_rng(cfg.seed, stream)
    x = np.zeros((1, basis.size))
    burn_steps = math.ceil(burn_in / cfg.dt)
    x = engine.run(x, burn_steps, rng).x

    snaps = np.empty((n_snapshots, basis.size))
    for s in range(n_snapshots):
        x = engine.run(x, thinning, rng).x
        snaps[s] = x[0]

    sq = np.sum(snaps**2, axis=1)
    half = n_snapshots // 2
    m1, se1 = chain_stats(sq[:half])
    m2, se2 = chain_stats(sq[half:])
    se = math.sqrt(se1**2 + se2**2)
    diag = StationarityDiagnostic(
        first_half_mean=m1, second_half_mean=m2, stderr=se, ok=abs(m1 - m2) <= 3.0 * se
    )
    return InvariantEnsemble(
        cfg=cfg, snapshots=snaps, burn_in=burn_in, thinning=thinning,
        stream=stream, stationarity=diag,
    )


def moment_l2N(ens: InvariantEnsemble, N: int) -> MeanEstimate:
    """Ensemble estimate of the L^{2N}(O)-norm moment E |x|_{L^{2N}}^{2N}."""
    if N < 1:
        raise ValueError("N must be >= 1")
    basis = ens.cfg.basis
    vals = basis.synthesize_flat(ens.snapshots)
    integrals = basis.cell_volume * np.sum(vals ** (2 * N), axis=1)
    mean, se = chain_stats(integrals)
    return MeanEstimate(mean=mean, stderr=se, samples=ens.size)


Functional = tuple[str, Callable[[np.ndarray], np.ndarray]]


def default_battery(cfg: SimConfig) -> list[Functional]:
    """Fixed test functionals used by the measure-comparison diagnostics."""
    basis = cfg.basis
    e1 = SpectralField.mode(basis, [1] * basis.n)
    battery: list[Functional] = []
    for kind in ("cos", "sin"):
        f = CylindricalFunctional(kind, [e1])
        battery.append((f"{kind}<x,e1>", f.value_batch))
    if basis.kmax >= 2:
        e2 = SpectralField.mode(basis, [2] + [1] * (basis.n - 1))
        f12 = CylindricalFunctional("cos", [e1, e2])
        battery.append(("cos<x,e1+e2>", f12.value_batch))
    battery.append(("proj1_sq", lambda flat: (flat @ e1.flat) ** 2))
    battery.append(("energy", lambda flat: np.sum(np.atleast_2d(flat) ** 2, axis=1)))
    return battery


@dataclass(frozen=True)
class MeasureDistance:
    name: str
    mean_a: float
    mean_b: float
    distance: float
    stderr: float


def compare_measures(
    ens_a: InvariantEnsemble,
    ens_b: InvariantEnsemble,
    battery: Optional[Sequence[Functional]] = None,
) -> list[MeasureDistance]:
    """Moment distances |E_a phi - E_b phi| with combined stderr."""
    ca, cb = ens_a.cfg, ens_b.cfg
    if (ca.n, ca.kmax, ca.gamma, ca.dt) != (cb.n, cb.kmax, cb.gamma, cb.dt) or (
        (ca.poly is None) != (cb.poly is None)
    ):
        raise ConfigError("ensembles must share every parameter except alpha")
    if battery is None:
        battery = default_battery(ca)
    rows = []
    for name, fn in battery:
        va = np.asarray(fn(ens_a.snapshots), dtype=np.float64)
        vb = np.asarray(fn(ens_b.snapshots), dtype=np.float64)
        ma, sa = chain_stats(va)
        mb, sb = chain_stats(vb)
        rows.append(
            MeasureDistance(
                name=name, mean_a=ma, mean_b=mb,
                distance=abs(ma - mb), stderr=math.sqrt(sa**2 + sb**2),
            )
        )
    return rows


@dataclass(frozen=True)
class GaussianIbp:
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float


@dataclass(frozen=True)
class IbpReport:
    """Directional integration-by-parts data over an ensemble.

    lhs = E <D phi(x), h>; the bound side is ||phi|| * (|Ah| + ||p'_a h||).
    For the reaction-free baseline the exact Gaussian pairing
    E <(-A)^{-1} D phi, h> = E [phi * 2 <(-A)^{gamma} x, h>] is also computed.
    """

    lhs: float
    lhs_stderr: float
    phi_norm: float
    ah_norm: float
    pprime_h_norm: float
    rhs_bound: float
    ratio: float
    gaussian: Optional[GaussianIbp]

    def __post_init__(self):
        for v in (self.lhs, self.phi_norm, self.ah_norm, self.rhs_bound):
            if not np.isfinite(v):
                raise ValueError("non-finite entry in IBP report")
        # stderr is exactly zero when phi's directions are orthogonal to h
        if not (self.lhs_stderr >= 0.0):
            raise ValueError("stderr must be nonnegative")


def ibp_check(cfg: SimConfig, ens: InvariantEnsemble, phi: CylindricalFunctional,
              h: SpectralField) -> IbpReport:
    if ens.cfg.basis != cfg.basis:
        raise ConfigError("ensemble basis differs from config basis")
    if h.basis != cfg.basis or phi.basis != cfg.basis:
        raise ConfigError("direction/functional basis differs from config basis")
    basis = cfg.basis
    lam = basis.lam_flat
    snaps = ens.snapshots

    lhs_vals = phi.grad_inner_batch(snaps, h.flat)
    lhs, lhs_se = chain_stats(lhs_vals)
    phi_vals = phi.value_batch(snaps)
    phi_norm = float(np.sqrt(np.mean(phi_vals**2)))
    ah_norm = float(np.sqrt(np.sum((lam * h.flat) ** 2)))

    if cfg.poly is not None:
        engine = Engine(cfg)
        grid_h = basis.synthesize_flat(h.flat)
        dpa = engine.yos.deriv(basis.synthesize_flat(snaps))
        sq = basis.cell_volume * np.sum((dpa * grid_h[None, :]) ** 2, axis=1)
        pprime_h_norm = float(np.sqrt(np.mean(sq)))
    else:
        pprime_h_norm = 0.0
    rhs_bound = phi_norm * (ah_norm + pprime_h_norm)
    ratio = abs(lhs) / (phi_norm * ah_norm) if phi_norm * ah_norm > 0 else math.inf

    gaussian = None
    if cfg.poly is None:
        lhs_g_vals = phi.grad_inner_batch(snaps, h.flat / lam)
        vh_vals = 2.0 * (snaps @ (lam**cfg.gamma * h.flat))
        rhs_g_vals = phi_vals * vh_vals
        lg, lg_se = chain_stats(lhs_g_vals)
        rg, rg_se = chain_stats(rhs_g_vals)
        gaussian = GaussianIbp(lhs=lg, lhs_stderr=lg_se, rhs=rg, rhs_stderr=rg_se)

    return IbpReport(
        lhs=lhs, lhs_stderr=lhs_se, phi_norm=phi_norm, ah_norm=ah_norm,
        pprime_h_norm=pprime_h_norm, rhs_bound=rhs_bound, ratio=ratio,
        gaussian=gaussian,
    )


@dataclass(frozen=True)
class InvarianceRow:
    name: str
    mean_shift: float
    stderr: float
    ok: bool


def invariance_check(
    ens: InvariantEnsemble,
    tau: float = 0.5,
    battery: Optional[Sequence[Functional]] = None,
    stream: int = 0,
) -> list[InvarianceRow]:
    """Evolve every snapshot by tau with fresh noise; ensemble averages of the
    battery must be reproduced (paired differences, 3 stderr)."""
    cfg = ens.cfg
    if battery is None:
        battery = default_battery(cfg)
    steps, dt = steps_for(tau, cfg.dt)
    engine = Engine(cfg, dt)
    rng = make_rng(cfg.seed, stream)
    evolved = engine.run(ens.snapshots, steps, rng).x
    rows = []
    for name, fn in battery:
        diff = np.asarray(fn(evolved), dtype=np.float64) - np.asarray(
            fn(ens.snapshots), dtype=np.float64
        )
        mean, se = chain_stats(diff)
        rows.append(InvarianceRow(name=name, mean_shift=mean, stderr=se,
                                  ok=abs(mean) <= 3.0 * se))
    return rows


def gaussian_stationary_variances(cfg: SimConfig) -> np.ndarray:
    """Per-mode stationary variance lam^{-1-gamma}/2 of the reaction-free law."""
    lam = cfg.basis.lam_flat
    return lam ** (-1.0 - cfg.gamma) / 2.0


def gauss_hermite_expectation(cov: np.ndarray, fn, nodes: int = 64) -> float:
    """E[fn(z)] for z ~ N(0, cov) by tensor Gauss-Hermite quadrature.

    Independent oracle for cylindrical expectations under the reaction-free
    invariant law; `fn` maps (M, d) points to (M,) values.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    d = cov.shape[0]
    if d > 3:
        raise ValueError("tensor quadrature supported up to 3 dimensions")
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / math.sqrt(2.0 * math.pi)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    wgrids = np.meshgrid(*([w] * d), indexing="ij")
    weights = np.prod(np.stack([g.reshape(-1) for g in wgrids], axis=1), axis=1)
    chol = np.linalg.cholesky(cov + 1e-300 * np.eye(d))
    vals = np.asarray(fn(pts @ chol.T), dtype=np.float64)
    return float(np.sum(weights * vals))

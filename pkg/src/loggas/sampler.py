"""Samplers for the log-gas particle density and empirical statistics.

Two routes: a Metropolis chain with single-particle Gaussian moves for any
polynomial potential, and the exact tridiagonal construction for the
Gaussian potential (chi-distributed off-diagonals), which produces
independent draws at any beta.  Both are deterministic under a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .errors import InsufficientDataError
from .potentials import Potential


# ---------------------------------------------------------------------------
# Configuration and containers

@dataclass(frozen=True)
class ChainConfig:
    n: int
    beta: float
    potential: Potential
    steps: int = 4000            # total sweeps per chain
    burn_in: int = 1000
    proposal_scale: float = 0.5
    seed: int = 0
    chains: int = 4
    thin: int | None = None      # sweeps between retained configurations
    init: tuple | None = None    # starting configuration (default: spread grid)

    def __post_init__(self):
        if not (0 < self.burn_in < self.steps):
            raise ValueError("burn_in must be positive and smaller than steps")
        if self.proposal_scale <= 0:
            raise ValueError("proposal_scale must be positive")
        if self.init is not None:
            if len(self.init) != self.n:
                raise ValueError("init must have one position per particle")
            object.__setattr__(self, "init", tuple(float(x) for x in self.init))

    @property
    def thin_every(self) -> int:
        return self.n if self.thin is None else self.thin


@dataclass
class SampleBatch:
    """Retained configurations, chain-major, with acceptance provenance."""

    configs: np.ndarray          # (kept, n)
    acceptance_rate: float
    seed: int
    chains: int
    kind: str                    # "mcmc" or "tridiag"
    rejected_coincident: int = 0

    @property
    def n(self) -> int:
        return self.configs.shape[1]

    @property
    def kept(self) -> int:
        return self.configs.shape[0]


@dataclass
class EmpiricalStats:
    mean: float
    var: float
    se_mean: float
    se_var: float
    ess: float
    t_grid: np.ndarray
    z_hat: np.ndarray
    values: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        return {
            "mean": self.mean, "var": self.var,
            "se_mean": self.se_mean, "se_var": self.se_var, "ess": self.ess,
            "t_grid": [float(t) for t in self.t_grid],
            "z_hat": [float(z) for z in self.z_hat],
        }


# ---------------------------------------------------------------------------
# Metropolis log-gas

def _sweep(lam, logpair, Vvals, cfg, scale, rng, stats):
    """One Metropolis sweep of single-particle moves; updates in place.

    `logpair[i]` caches sum over j != i of log|lam_i - lam_j|; the total
    pair term counts ordered pairs, so a move of particle i changes it by
    twice the change of logpair[i].
    """
    n = cfg.n
    beta, pot = cfg.beta, cfg.potential
    props = rng.standard_normal(n) * scale
    us = np.log(rng.random(n))
    for i in range(n):
        new = lam[i] + props[i]
        diff = np.abs(new - lam)
        diff[i] = 1.0
        if np.any(diff == 0.0):
            stats["coincident"] += 1
            continue
        new_logpair = float(np.sum(np.log(diff)))
        newV = float(pot(new))
        dlog = beta * (-(cfg.n) * (newV - Vvals[i]) / 2.0
                       + (new_logpair - logpair[i]))
        if us[i] < dlog:
            # update caches of the other particles
            old = np.abs(lam[i] - lam)
            old[i] = 1.0
            logpair += np.log(diff) - np.log(old)
            lam[i] = new
            Vvals[i] = newV
            logpair[i] = new_logpair
            stats["accepted"] += 1
        stats["proposed"] += 1


def _init_logpair(lam):
    diff = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(diff, 1.0)
    return np.sum(np.log(diff), axis=1)


def mcmc_sample(cfg: ChainConfig) -> SampleBatch:
    """Metropolis sampling of the particle density.

    The proposal scale adapts toward 30-50% acceptance during burn-in and
    is frozen afterwards, so retained samples target the exact density.
    """
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
    kept = []
    acc_tot = 0
    prop_tot = 0
    coincident = 0
    for c in range(cfg.chains):
        rng = np.random.default_rng(seeds[c])
        if cfg.init is not None:
            lam = np.array(cfg.init, dtype=float)
        else:
            lam = np.linspace(-2.0, 2.0, cfg.n) + 0.01 * rng.standard_normal(cfg.n)
        logpair = _init_logpair(lam)
        Vvals = np.asarray(cfg.potential(lam), dtype=float)
        scale = cfg.proposal_scale
        stats = {"accepted": 0, "proposed": 0, "coincident": 0}
        window = {"accepted": 0, "proposed": 0, "coincident": 0}
        for sweep in range(cfg.steps):
            adapting = sweep < cfg.burn_in
            target = window if adapting else stats
            _sweep(lam, logpair, Vvals, cfg, scale, rng, target)
            if adapting and (sweep + 1) % 25 == 0:
                rate = window["accepted"] / max(window["proposed"], 1)
                if rate < 0.30:
                    scale *= 0.85
                elif rate > 0.50:
                    scale *= 1.18
                window = {"accepted": 0, "proposed": 0, "coincident": 0}
            if sweep >= cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin_every == 0:
                kept.append(np.sort(lam.copy()))
        acc_tot += stats["accepted"]
        prop_tot += stats["proposed"]
        coincident += stats["coincident"]
    return SampleBatch(
        configs=np.array(kept), acceptance_rate=acc_tot / max(prop_tot, 1),
        seed=cfg.seed, chains=cfg.chains, kind="mcmc",
        rejected_coincident=coincident)


# ---------------------------------------------------------------------------
# Exact Gaussian sampler

def gbe_tridiag(n: int, beta: float, rng) -> np.ndarray:
    """One spectrum of the Gaussian ensemble with weight exp(-n beta V/2),
    V = lambda^2/2: symmetric tridiagonal matrix with Gaussian diagonal and
    chi off-diagonals of parameter beta*(n-1), ..., beta, scaled so the
    limiting density is the semicircle on [-2, 2].  Sorted ascending."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    diag = rng.standard_normal(n) * np.sqrt(2.0 / (n * beta))
    k = np.arange(n - 1, 0, -1, dtype=float)
    off = np.sqrt(rng.chisquare(beta * k)) / np.sqrt(n * beta)
    return eigvalsh_tridiagonal(diag, off)


def gbe_batch(n: int, beta: float, draws: int, seed: int = 0) -> SampleBatch:
    """Independent tridiagonal draws packaged like a chain batch."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    configs = np.empty((draws, n))
    for i in range(draws):
        configs[i] = gbe_tridiag(n, beta, rng)
    return SampleBatch(configs=configs, acceptance_rate=1.0, seed=seed,
                       chains=1, kind="tridiag")


# ---------------------------------------------------------------------------
# Statistics of linear eigenvalue statistics

def _ess(series: np.ndarray) -> float:
    """Effective sample size by the initial-positive-sequence estimator."""
    x = series - series.mean()
    m = len(x)
    if m < 8 or np.allclose(x, 0.0):
        return float(m)
    acf = np.correlate(x, x, mode="full")[m - 1:] / (np.arange(m, 0, -1) * x.var() + 1e-300)
    iact = 1.0
    for k in range(1, min(m // 2, 512)):
        if acf[k] <= 0:
            break
        iact += 2.0 * acf[k]
    return float(m / max(iact, 1.0))


def empirical_stats(batch: SampleBatch, h, beta: float,
                    t_grid: np.ndarray | None = None,
                    min_ess: int = 100) -> EmpiricalStats:
    """Mean/variance of N[h] = sum h(lambda_i) with batch-means errors and
    the empirical characteristic functional on |t| <= 1."""
    vals = np.array([float(np.sum(h(c))) for c in batch.configs])
    ess = _ess(vals) if batch.kind == "mcmc" else float(len(vals))
    if ess < min_ess:
        raise InsufficientDataError(
            f"effective sample size {ess:.0f} below {min_ess}")
    mean = float(vals.mean())
    var = float(vals.var(ddof=1))
    nb = max(4, min(32, len(vals) // 8))
    splits = np.array_split(vals, nb)
    bm = np.array([s.mean() for s in splits])
    bv = np.array([s.var(ddof=1) for s in splits])
    se_mean = float(bm.std(ddof=1) / np.sqrt(nb))
    se_var = float(bv.std(ddof=1) / np.sqrt(nb))
    if t_grid is None:
        t_grid = np.linspace(-1.0, 1.0, 21)
    centered = vals - mean
    z_hat = np.array([float(np.mean(np.exp(t * beta * centered / 2.0)))
                      for t in t_grid])
    return EmpiricalStats(mean=mean, var=var, se_mean=se_mean, se_var=se_var,
                          ess=ess, t_grid=np.asarray(t_grid), z_hat=z_hat,
                          values=vals)

"""Samplers for the three source distributions.

* Haar-unitary spectra (the circular unitary ensemble): complex Ginibre
  matrix, column orthonormalisation, phase correction by the sign of the
  triangular factor's diagonal, then eigenvalue arguments.  Exact Haar law.
* Circular beta ensemble (density proportional to
  prod_{k<j} |exp(i t_k) - exp(i t_j)|^beta): single-coordinate Metropolis
  on the ordered fundamental domain 0 <= t_1 < ... < t_n < 2pi, working in
  log-density via log|2 sin((t_k - t_j)/2)| to avoid underflow.
* Uniform measure on the radius-sqrt(n) sphere: rescaled Gaussian vector.

Samplers are pure functions of (configuration, random stream); batch variants
consume the stream in a fixed block order so results never depend on how the
work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

__all__ = [
    "SpectrumSample",
    "SpherePoint",
    "EnsembleConfig",
    "sample_cue",
    "sample_cue_many",
    "cue_trace_powers",
    "sample_sphere",
    "sample_sphere_many",
    "sample_circular_beta",
    "sample_circular_beta_many",
]

TWO_PI = 2.0 * math.pi
MCMC_CHAINS_DEFAULT = 16  # fixed lockstep width; part of the deterministic contract


@dataclass(frozen=True)
class SpectrumSample:
    """Ordered angle configuration t_1 < ... < t_n in [0, 2pi).

    ``beta`` is a provenance label of the generating ensemble (0 when
    unspecified); samples from continuous ensembles are collision-free.
    """

    angles: np.ndarray
    n: int
    beta: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        object.__setattr__(self, "angles", a)
        if a.ndim != 1 or a.size != self.n or self.n < 1:
            raise ValueError("angles must be a 1-d array of length n >= 1")
        if a[0] < 0.0 or a[-1] >= TWO_PI:
            raise ValueError("angles must lie in [0, 2pi)")
        if self.n > 1 and np.any(np.diff(a) <= 0.0):
            raise ValueError("angles must be strictly increasing")


@dataclass(frozen=True)
class SpherePoint:
    """Point on the radius-``radius`` sphere in n-dimensional space."""

    coords: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "coords", c)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        nrm = float(np.linalg.norm(c))
        if abs(nrm - self.radius) > 1e-12 * self.radius:
            raise ValueError(f"norm {nrm!r} differs from radius {self.radius!r}")

    @property
    def n(self) -> int:
        return self.coords.size


@dataclass
class EnsembleConfig:
    """Sampling configuration; Metropolis fields default to burn-in 10 n^2,
    thinning n, proposal scale 2pi/n when left unset."""

    n: int
    beta: float
    seed: int = 0
    mcmc_burn_in: int | None = None
    mcmc_thin: int | None = None
    mcmc_step: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def burn_in(self) -> int:
        return 10 * self.n * self.n if self.mcmc_burn_in is None else self.mcmc_burn_in

    @property
    def thin(self) -> int:
        return self.n if self.mcmc_thin is None else self.mcmc_thin

    @property
    def step(self) -> float:
        return TWO_PI / self.n if self.mcmc_step is None else self.mcmc_step


def _haar_unitaries(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    q, r = np.linalg.qr(z / math.sqrt(2.0))
    d = np.einsum("...ii->...i", r)
    return q * (d / np.abs(d))[:, None, :]


def sample_cue_many(
    n: int, count: int, rng: np.random.Generator, batch: int = 2048
) -> np.ndarray:
    """Eigenangle rows (count, n), each row sorted ascending in [0, 2pi)."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    out = np.empty((count, n))
    done = 0
    while done < count:
        m = min(batch, count - done)
        q = _haar_unitaries(n, m, rng)
        lam = np.linalg.eigvals(q)
        ang = np.mod(np.angle(lam), TWO_PI)
        ang.sort(axis=1)
        out[done : done + m] = ang
        done += m
    return out


def sample_cue(n: int, rng: np.random.Generator) -> SpectrumSample:
    """Sorted eigenangles of one Haar-distributed n x n unitary matrix."""
    return SpectrumSample(angles=sample_cue_many(n, 1, rng)[0], n=n, beta=2.0)


def cue_trace_powers(
    n: int, count: int, rng: np.random.Generator, kmax: int, batch: int = 256
) -> np.ndarray:
    """Traces of U, U^2, ..., U^kmax for Haar unitaries, shape (count, kmax).

    Identical in law to power sums of sample_cue_many output but skips the
    eigendecomposition, which dominates at large n; used by the distance
    pipelines where only low trace powers are needed.
    """
    if kmax < 1:
        raise ValueError("kmax must be a positive integer")
    out = np.empty((count, kmax), dtype=complex)
    half = (kmax + 1) // 2
    done = 0
    while done < count:
        m = min(batch, count - done)
        q = _haar_unitaries(n, m, rng)
        powers = [q]  # powers[j-1] = U^j, built only up to U^half
        for _ in range(2, half + 1):
            powers.append(powers[-1] @ q)
        for k in range(1, kmax + 1):
            if k <= half:
                out[done : done + m, k - 1] = np.einsum("bii->b", powers[k - 1])
            else:
                out[done : done + m, k - 1] = np.einsum(
                    "bij,bji->b", powers[half - 1], powers[k - half - 1]
                )
        done += m
    return out


def sample_sphere_many(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Rows uniform on the radius-sqrt(n) sphere in R^n."""
    if n < 2:
        raise ValueError("n must be at least 2")
    g = rng.standard_normal((count, n))
    g *= math.sqrt(n) / np.linalg.norm(g, axis=1)[:, None]
    return g


def sample_sphere(n: int, rng: np.random.Generator) -> SpherePoint:
    return SpherePoint(coords=sample_sphere_many(n, 1, rng)[0], radius=math.sqrt(n))


def _mcmc_init(n: int, chains: int) -> np.ndarray:
    base = (np.arange(n) + 0.5) * (TWO_PI / n)
    return np.tile(base, (chains, 1))


def _mcmc_advance(
    thetas: np.ndarray,
    beta: float,
    sigma: float,
    attempts: int,
    start: int,
    rng: np.random.Generator,
    block: int = 4096,
) -> int:
    """Run ``attempts`` lockstep Metropolis attempts, drawing noise in fixed blocks."""
    done = 0
    while done < attempts:
        m = min(block, attempts - done)
        noise = rng.standard_normal((m, thetas.shape[0]))
        unif = rng.random((m, thetas.shape[0]))
        kernels.mh_sweep(thetas, beta, sigma, start, noise, unif)
        start = (start + m) % thetas.shape[1]
        done += m
    return start


def sample_circular_beta_many(
    cfg: EnsembleConfig,
    count: int,
    rng: np.random.Generator,
    chains: int = MCMC_CHAINS_DEFAULT,
) -> np.ndarray:
    """Metropolis samples of the circular beta ensemble, shape (count, n).

    ``chains`` lockstep chains are burnt in together and then harvested in
    rotation every ``cfg.thin`` attempts; the draw order is fixed, so the
    output depends only on (cfg, count, chains, stream state).
    """
    n = cfg.n
    if n == 1:
        return rng.random((count, 1)) * TWO_PI  # no interaction: uniform phase
    chains = min(chains, count) if count else chains
    thetas = _mcmc_init(n, chains)
    start = _mcmc_advance(thetas, cfg.beta, cfg.step, cfg.burn_in, 0, rng)
    out = np.empty((count, n))
    got = 0
    while got < count:
        start = _mcmc_advance(thetas, cfg.beta, cfg.step, cfg.thin, start, rng)
        take = min(chains, count - got)
        out[got : got + take] = thetas[:take]
        got += take
    return out


def sample_circular_beta(cfg: EnsembleConfig, rng: np.random.Generator) -> SpectrumSample:
    """One circular-beta-ensemble sample (single chain)."""
    angles = sample_circular_beta_many(cfg, 1, rng, chains=1)[0]
    return SpectrumSample(angles=np.sort(angles), n=cfg.n, beta=cfg.beta)

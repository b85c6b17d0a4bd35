"""Time-t diffusion perturbations generating continuous exchangeable pairs.

Two diffusions are implemented, each reversible for its source law:

* circular Dyson Brownian motion on the ordered-angle simplex,
  dX_j = sqrt(2) dB_j + (beta/2) sum_{k != j} cot((X_j - X_k)/2) dt,
  integrated by Euler-Maruyama with retry-on-collision (halved step, fresh
  noise) so the singular drift is never tamed silently;
* Brownian motion on the radius-sqrt(n) sphere, realised as a geodesic random
  walk whose tangent Gaussian has covariance 2 dt (generator = Laplacian,
  matching the sqrt(2) noise convention above, not Laplacian/2).

Starting the diffusion from a stationary sample X and running for time t
yields a pair (W(X), W(X_t)) that is exchangeable for every t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .ensembles import EnsembleConfig, SpectrumSample, SpherePoint, TWO_PI
from .ensembles import sample_cue_many, sample_circular_beta_many, sample_sphere_many
from .errors import StepFailureError

__all__ = [
    "CdbmParams",
    "PairSample",
    "StepResult",
    "cdbm_step",
    "cdbm_run",
    "cdbm_evolve_many",
    "sphere_bm_step",
    "sphere_bm_step_many",
    "CueSource",
    "CbeSource",
    "SphereSource",
    "perturb_pair",
    "perturb_pairs_grid",
]


@dataclass(frozen=True)
class CdbmParams:
    """Euler-Maruyama parameters; beta >= 1 is the well-posedness regime."""

    beta: float
    dt: float
    T: float
    max_halvings: int = 40
    collision_guard: float = 1e-8

    def __post_init__(self):
        if self.beta < 1:
            raise ValueError("beta must be >= 1 for the Dyson diffusion")
        if self.dt <= 0 or self.T <= 0:
            raise ValueError("dt and T must be positive")
        if self.max_halvings < 1:
            raise ValueError("max_halvings must be a positive integer")
        if self.collision_guard <= 0:
            raise ValueError("collision_guard must be positive")


@dataclass
class PairSample:
    """Matched statistic values before/after a time-t perturbation.

    ``x0`` optionally carries the starting configuration so per-sample models
    (which need more than w0) can be evaluated afterwards.
    """

    w0: float
    wt: float
    t: float
    x0: np.ndarray | None = None

    def __post_init__(self):
        if not (self.t > 0):
            raise ValueError("perturbation time must be positive")
        if not (math.isfinite(self.w0) and math.isfinite(self.wt)):
            raise ValueError("pair values must be finite")


class StepResult(NamedTuple):
    sample: SpectrumSample
    dt: float  # time actually advanced (halved on collision retries)


def _wrap_sorted(row: np.ndarray) -> np.ndarray:
    # wrapping preserves cyclic order; sorting restores the linear representative
    return np.sort(np.mod(row, TWO_PI))


def _evolve(
    thetas: np.ndarray,
    beta: float,
    dt_base: float,
    T: float,
    rng: np.random.Generator,
    guard: float,
    max_halvings: int,
) -> np.ndarray:
    """Advance every row to time T (in place); rows are unwrapped angle chains."""
    R, n = thetas.shape
    t_acc = np.zeros(R)
    eps = 1e-9 * dt_base
    active = np.arange(R)
    while active.size:
        dts = np.minimum(dt_base, T - t_acc[active])
        todo = np.arange(active.size)
        cur = thetas[active]
        halvings = 0
        while todo.size:
            noise = rng.standard_normal((todo.size, n))
            prop, ok = kernels.cdbm_propose(cur[todo], dts[todo], noise, beta, guard)
            good = todo[ok]
            cur[good] = prop[ok]
            t_acc[active[good]] += dts[good]
            todo = todo[~ok]
            if todo.size:
                halvings += 1
                if halvings > max_halvings:
                    raise StepFailureError(
                        f"{todo.size} replica(s) still colliding after "
                        f"{max_halvings} step halvings (dt down to {dts[todo].min():.3e})"
                    )
                dts[todo] /= 2.0
        thetas[active] = cur
        active = active[t_acc[active] < T - eps]
    return thetas


def cdbm_step(x: SpectrumSample, params: CdbmParams, rng: np.random.Generator) -> StepResult:
    """One Euler-Maruyama step from ``x``; retries with halved dt on collision."""
    th = np.asarray(x.angles, dtype=float)[None, :].copy()
    dt = params.dt
    for _ in range(params.max_halvings + 1):
        noise = rng.standard_normal((1, x.n))
        prop, ok = kernels.cdbm_propose(
            th, np.array([dt]), noise, params.beta, params.collision_guard
        )
        if ok[0]:
            return StepResult(
                SpectrumSample(angles=_wrap_sorted(prop[0]), n=x.n, beta=x.beta), dt
            )
        dt /= 2.0
    raise StepFailureError(
        f"step from n={x.n} configuration failed after {params.max_halvings} halvings"
    )


def cdbm_run(x0: SpectrumSample, params: CdbmParams, rng: np.random.Generator) -> SpectrumSample:
    """Iterate steps until accumulated time reaches T (last step shortened)."""
    th = np.asarray(x0.angles, dtype=float)[None, :].copy()
    _evolve(th, params.beta, params.dt, params.T, rng,
            params.collision_guard, params.max_halvings)
    return SpectrumSample(angles=_wrap_sorted(th[0]), n=x0.n, beta=x0.beta)


def cdbm_evolve_many(
    thetas: np.ndarray,
    params: CdbmParams,
    rng: np.random.Generator,
    checkpoints: Sequence[float],
) -> dict[float, np.ndarray]:
    """Evolve a stack of configurations, snapshotting at increasing times.

    Returns wrapped, sorted snapshot copies keyed by checkpoint time; the
    input stack is advanced in place (unwrapped).
    """
    checkpoints = sorted(float(t) for t in checkpoints)
    if checkpoints and checkpoints[0] <= 0:
        raise ValueError("checkpoint times must be positive")
    out: dict[float, np.ndarray] = {}
    now = 0.0
    for t in checkpoints:
        _evolve(thetas, params.beta, params.dt, t - now, rng,
                params.collision_guard, params.max_halvings)
        now = t
        out[t] = np.sort(np.mod(thetas, TWO_PI), axis=1)
    return out


def sphere_bm_step_many(coords: np.ndarray, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Geodesic random-walk step for a stack of sphere points (rows).

    Tangent Gaussian with covariance 2 dt I (generator = full Laplacian),
    geodesic move by the tangent vector's length, then renormalisation.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    coords = np.asarray(coords, dtype=float)
    r = math.sqrt(coords.shape[1])
    g = rng.standard_normal(coords.shape) * math.sqrt(2.0 * dt)
    radial = (g * coords).sum(axis=1) / (r * r)
    zeta = g - radial[:, None] * coords
    nrm = np.linalg.norm(zeta, axis=1)
    safe = nrm > 0
    out = coords.copy()
    s = nrm[safe] / r
    out[safe] = (
        np.cos(s)[:, None] * coords[safe]
        + (np.sin(s) * r / nrm[safe])[:, None] * zeta[safe]
    )
    out *= r / np.linalg.norm(out, axis=1)[:, None]
    return out


def sphere_bm_step(x: SpherePoint, dt: float, rng: np.random.Generator) -> SpherePoint:
    new = sphere_bm_step_many(x.coords[None, :], dt, rng)[0]
    return SpherePoint(coords=new, radius=x.radius)


@dataclass(frozen=True)
class CueSource:
    """Haar-unitary spectra; perturbed by the beta=2 Dyson diffusion."""

    n: int

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return sample_cue_many(self.n, count, rng)

    beta = 2.0


@dataclass(frozen=True)
class CbeSource:
    """Circular beta ensemble; perturbed by the matching Dyson diffusion."""

    cfg: EnsembleConfig

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return sample_circular_beta_many(self.cfg, count, rng)

    @property
    def n(self) -> int:
        return self.cfg.n

    @property
    def beta(self) -> float:
        return self.cfg.beta


@dataclass(frozen=True)
class SphereSource:
    """Uniform law on the radius-sqrt(n) sphere; perturbed by sphere Brownian motion."""

    n: int

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return sample_sphere_many(self.n, count, rng)


def perturb_pairs_grid(
    source,
    statistic: Callable[[np.ndarray], np.ndarray],
    t_grid: Sequence[float],
    reps: int,
    rng: np.random.Generator,
    substeps: int = 8,
    keep_configs: bool = False,
) -> dict[float, list[PairSample]]:
    """Exchangeable pairs (W(X), W(X_t)) for every t in the grid.

    All t values share the same stationary starting sample (common random
    numbers); the diffusion noise is drawn independently per t.  For the
    Dyson diffusions each horizon t is integrated with ``substeps`` steps of
    size t/substeps, keeping the discretisation bias proportional to t so
    that a linear-in-t extrapolation removes it together with the intrinsic
    O(t) term.  The sphere walk uses a single geodesic step per horizon.
    """
    t_grid = [float(t) for t in t_grid]
    if any(t <= 0 for t in t_grid):
        raise ValueError("perturbation times must be positive")
    if reps < 1:
        raise ValueError("reps must be a positive integer")
    x0 = source.sample(reps, rng)
    w0 = np.asarray(statistic(x0), dtype=float)
    out: dict[float, list[PairSample]] = {}
    for t in t_grid:
        if isinstance(source, SphereSource):
            xt = sphere_bm_step_many(x0, t, rng)
        else:
            params = CdbmParams(beta=source.beta, dt=t / substeps, T=t)
            th = x0.copy()
            xt = cdbm_evolve_many(th, params, rng, [t])[t]
        wt = np.asarray(statistic(xt), dtype=float)
        out[t] = [
            PairSample(
                w0=float(a), wt=float(b), t=t,
                x0=(x0[i].copy() if keep_configs else None),
            )
            for i, (a, b) in enumerate(zip(w0, wt))
        ]
    return out


def perturb_pair(
    source,
    statistic: Callable[[np.ndarray], np.ndarray],
    t: float,
    reps: int,
    rng: np.random.Generator,
    substeps: int = 8,
    keep_configs: bool = False,
) -> list[PairSample]:
    """Independent exchangeable pairs at a single perturbation time."""
    return perturb_pairs_grid(
        source, statistic, [t], reps, rng, substeps=substeps, keep_configs=keep_configs
    )[float(t)]

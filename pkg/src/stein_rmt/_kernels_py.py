"""NumPy implementations of the hot kernels (fallback backend).

The two inner loops that dominate runtime are the single-coordinate
Metropolis sweep for the circular beta ensemble and the Euler-Maruyama
proposal for the circular Dyson diffusion.  Both are implemented here with
vectorisation across chains/replicas, and again in ``_kernels_cy.pyx`` as a
compiled extension; the drivers feed both backends noise in an identical
order, so the backends are interchangeable.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

TWO_PI = 2.0 * np.pi


def mh_sweep(
    thetas: np.ndarray,
    beta: float,
    sigma: float,
    start: int,
    noise: np.ndarray,
    unif: np.ndarray,
) -> int:
    """Run ``noise.shape[0]`` lockstep Metropolis attempts on ``thetas`` in place.

    thetas: (chains, n) ordered angles in [0, 2pi); attempt s updates
    coordinate (start + s) % n in every chain with a Gaussian proposal of
    scale ``sigma``.  Proposals that violate the ordering (or leave [0, 2pi))
    are rejected; otherwise the standard Metropolis rule applies to the
    log-density beta * sum log|2 sin((t_j - t_k)/2)|.  Returns the number of
    accepted moves.
    """
    chains, n = thetas.shape
    attempts = noise.shape[0]
    accepted = 0
    zeros = np.zeros(chains)
    full = np.full(chains, TWO_PI)
    for s in range(attempts):
        j = (start + s) % n
        prop = thetas[:, j] + sigma * noise[s]
        lo = thetas[:, j - 1] if j > 0 else zeros
        hi = thetas[:, j + 1] if j < n - 1 else full
        ok = (prop > lo) & (prop < hi)
        d_new = prop[:, None] - thetas
        d_old = thetas[:, j][:, None] - thetas
        with np.errstate(divide="ignore"):
            ln_new = np.log(np.abs(2.0 * np.sin(d_new / 2.0)))
            ln_old = np.log(np.abs(2.0 * np.sin(d_old / 2.0)))
        ln_new[:, j] = 0.0
        ln_old[:, j] = 0.0
        dlog = beta * (ln_new.sum(axis=1) - ln_old.sum(axis=1))
        with np.errstate(divide="ignore"):
            accept = ok & (np.log(unif[s]) < dlog)
        thetas[accept, j] = prop[accept]
        accepted += int(accept.sum())
    return accepted


def cot_drift_sum(thetas: np.ndarray) -> np.ndarray:
    """sum_{k != j} cot((t_j - t_k)/2) for every row configuration."""
    thetas = np.asarray(thetas, dtype=float)
    d = thetas[:, :, None] - thetas[:, None, :]
    with np.errstate(divide="ignore"):
        c = 1.0 / np.tan(d / 2.0)
    idx = np.arange(thetas.shape[1])
    c[:, idx, idx] = 0.0
    return c.sum(axis=2)


def cdbm_propose(
    cur: np.ndarray,
    dts: np.ndarray,
    noise: np.ndarray,
    beta: float,
    guard: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One Euler-Maruyama proposal per replica.

    cur: (R, n) strictly increasing angle rows (unwrapped); dts: (R,) step
    sizes; noise: (R, n) standard normals.  Returns (proposal, ok) where ok
    flags rows whose neighbour gaps (including the wrap-around gap) all
    exceed ``guard``.
    """
    drift = (beta / 2.0) * cot_drift_sum(cur)
    prop = cur + np.sqrt(2.0 * dts)[:, None] * noise + dts[:, None] * drift
    gaps = np.diff(prop, axis=1)
    wrap = TWO_PI - (prop[:, -1] - prop[:, 0])
    if prop.shape[1] == 1:
        ok = np.ones(prop.shape[0], dtype=bool)
    else:
        ok = (gaps > guard).all(axis=1) & (wrap > guard)
    return prop, ok

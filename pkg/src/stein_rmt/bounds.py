"""Closed-form distance bounds and the constants entering them.

All evaluators are deterministic pure functions of their arguments, written
out with explicit constants (1 + 8*sqrt(2), 1 + 2/e) in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import OutOfRegimeError

__all__ = [
    "CbeConstants",
    "BoundResult",
    "ExponentialPairsBound",
    "bound_sphere",
    "bound_cue",
    "cbe_constants",
    "bound_cbe",
    "bound_exponential_pairs",
    "bound_normal_pairs",
    "residual_E_term_bounds",
    "residual_Eprime_term_bounds",
    "cbe_moment_bound_E_sq",
    "cbe_moment_bound_Eprime_sq",
]

ONE_PLUS_2_OVER_E = 1.0 + 2.0 / math.e
ONE_PLUS_8_SQRT2 = 1.0 + 8.0 * math.sqrt(2.0)


def bound_sphere(n: int) -> float:
    """Total-variation bound 2*sqrt(2)/sqrt((n-1)(n+2)) for the coordinate
    statistic of a uniform point on the radius-sqrt(n) sphere."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return 2.0 * math.sqrt(2.0) / math.sqrt((n - 1) * (n + 2))


def bound_cue(n: int, k: int) -> float:
    """Kolmogorov bound sqrt((1 + 8*sqrt(2)) * sqrt(k) / n) for |Tr(U^k)|^2/k
    against the mean-one exponential, U Haar unitary."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive integers")
    return math.sqrt(ONE_PLUS_8_SQRT2 * math.sqrt(k) / n)


@dataclass(frozen=True)
class CbeConstants:
    """Constants controlling the residual moments for the circular beta ensemble.

    alpha = 2/beta;
    A  = (1 - |alpha-1|/(n-2k+alpha))^(2k),  B  = (1 + ...)^(2k),
    A' = (1 - |alpha-1|/(n-4k+alpha))^(4k),  B' = (1 + ...)^(4k),
    C_E = max(|A-1|, |B-1|),  C_E' = max(|A'-1|, |B'-1|).

    ``in_regime`` is true when both shrinking bases are strictly positive
    (n large enough relative to k), which the residual moment bounds need.
    """

    alpha: float
    A: float
    B: float
    A_prime: float
    B_prime: float
    C_E: float
    C_E_prime: float
    n: int
    k: int
    in_regime: bool


def cbe_constants(n: int, k: int, beta: float) -> CbeConstants:
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive integers")
    if beta < 1:
        raise ValueError("beta must be >= 1")
    alpha = 2.0 / beta
    d1 = n - 2 * k + alpha
    d2 = n - 4 * k + alpha
    if d1 <= 0 or d2 <= 0:
        raise OutOfRegimeError(
            f"constants need n - 2k + alpha > 0 and n - 4k + alpha > 0 "
            f"(got {d1:.3g}, {d2:.3g})"
        )
    r1 = abs(alpha - 1.0) / d1
    r2 = abs(alpha - 1.0) / d2
    A = (1.0 - r1) ** (2 * k)
    B = (1.0 + r1) ** (2 * k)
    A_prime = (1.0 - r2) ** (4 * k)
    B_prime = (1.0 + r2) ** (4 * k)
    return CbeConstants(
        alpha=alpha,
        A=A,
        B=B,
        A_prime=A_prime,
        B_prime=B_prime,
        C_E=max(abs(A - 1.0), abs(B - 1.0)),
        C_E_prime=max(abs(A_prime - 1.0), abs(B_prime - 1.0)),
        n=n,
        k=k,
        in_regime=(1.0 - r1 > 0.0) and (1.0 - r2 > 0.0),
    )


class BoundResult(NamedTuple):
    value: float
    degenerate: bool  # true when C_E' = 0, so the printed bound collapses to 0
    constants: CbeConstants


def bound_cbe(n: int, k: int, beta: float) -> BoundResult:
    """Kolmogorov bound for W = (beta/2k) |p_k|^2 under the circular beta ensemble.

    2 * sqrt( sqrt(80 C_E' k) / (sqrt(beta) n)
              + (1 + 2/e) sqrt(2 C_E' k^3) / (beta n) )

    evaluated exactly as printed (both radicand terms carry C_E').  At beta=2
    every constant vanishes and the bound degenerates to zero; the result is
    flagged so reports can distinguish "bound is zero as printed" from
    "distance is zero".
    """
    c = cbe_constants(n, k, beta)
    term1 = math.sqrt(80.0 * c.C_E_prime * k) / (math.sqrt(beta) * n)
    term2 = ONE_PLUS_2_OVER_E * math.sqrt(2.0 * c.C_E_prime * k**3) / (beta * n)
    return BoundResult(2.0 * math.sqrt(term1 + term2), c.C_E_prime == 0.0, c)


class ExponentialPairsBound(NamedTuple):
    delta_used: float
    bound: float


def bound_exponential_pairs(
    lam: float,
    mean_abs_E: float,
    mean_abs_Eprime: float,
    delta: float | None = None,
) -> ExponentialPairsBound:
    """Exponential-approximation bound (2 E|E'| + (1+2/e) E|E|)/(lam*delta) + delta/2.

    With ``delta`` omitted the analytic minimiser delta* = sqrt(2a) is used,
    where a = (2 E|E'| + (1+2/e) E|E|)/lam, giving the value sqrt(2a).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if mean_abs_E < 0 or mean_abs_Eprime < 0:
        raise ValueError("moment arguments must be nonnegative")
    a = (2.0 * mean_abs_Eprime + ONE_PLUS_2_OVER_E * mean_abs_E) / lam
    if delta is not None:
        if delta <= 0:
            raise ValueError("delta must be positive")
        return ExponentialPairsBound(delta, a / delta + delta / 2.0)
    if a == 0.0:
        return ExponentialPairsBound(0.0, 0.0)
    d = math.sqrt(2.0 * a)
    return ExponentialPairsBound(d, d)


def bound_normal_pairs(
    lambda_inv_op: float,
    sigma_inv_op: float,
    mean_E_abs: float,
    mean_Eprime_hs: float,
) -> float:
    """Wasserstein bound |Lambda^-1|_op (|Sigma^-1/2|_op E|E'|_HS / 2 + E|E|)."""
    if min(lambda_inv_op, sigma_inv_op, mean_E_abs, mean_Eprime_hs) < 0:
        raise ValueError("all inputs must be nonnegative")
    return lambda_inv_op * (0.5 * sigma_inv_op * mean_Eprime_hs + mean_E_abs)


def residual_E_term_bounds(k: int, beta: float, C_E: float) -> tuple[float, float, float, float]:
    """Per-term moment bounds entering the E-residual estimate:

    8 C_E k^2 / beta^2,   8 sqrt(3) C_E k^3 / beta^3,
    (2/beta)^(5/2) C_E k^2 sqrt(k),   4 C_E k^3 / beta^3.
    """
    if C_E < 0:
        raise ValueError("C_E must be nonnegative")
    return (
        8.0 * C_E * k**2 / beta**2,
        8.0 * math.sqrt(3.0) * C_E * k**3 / beta**3,
        (2.0 / beta) ** 2.5 * C_E * k**2 * math.sqrt(k),
        4.0 * C_E * k**3 / beta**3,
    )


def residual_Eprime_term_bounds(k: int, beta: float, C_E_prime: float) -> tuple[float, float]:
    """Per-term moment bounds entering the E'-residual estimate:

    64 sqrt(3) C_E' k^3 / beta^3,   32 C_E' k^3 / beta^3.
    """
    if C_E_prime < 0:
        raise ValueError("C_E_prime must be nonnegative")
    return (
        64.0 * math.sqrt(3.0) * C_E_prime * k**3 / beta**3,
        32.0 * C_E_prime * k**3 / beta**3,
    )


def cbe_moment_bound_E_sq(k: int, beta: float, C_E: float) -> float:
    """Aggregate bound E[E^2] <= 8 beta^2 C_E k^5."""
    return 8.0 * beta**2 * C_E * k**5


def cbe_moment_bound_Eprime_sq(k: int, beta: float, C_E_prime: float) -> float:
    """Aggregate bound E[E'^2] <= 80 beta C_E' k^3."""
    return 80.0 * beta * C_E_prime * k**3

"""Power sums of angle configurations and the operator identities built on them.

For an angle configuration ``x = (theta_1 .. theta_n)`` the k-th power sum is
``p_k(x) = sum_j exp(i k theta_j)``; at unitary eigenangles this is the trace
of the k-th matrix power.  The module provides

* pointwise evaluation of the Dyson generator ``D = Laplacian + repulsive
  cotangent drift`` acting on ``p_j`` and on ``p_j * conj(p_j)``, both directly
  from the definition and through the closed polynomial formulas, so the two
  routes can be checked against each other;
* the exact joint moments of traces of Haar unitary matrices (an integer
  formula, used as the Monte Carlo oracle);
* the residual statistics ``E`` and ``E'`` appearing in the drift and
  quadratic-variation expansions of the rescaled trace-power statistic
  ``W = (beta / 2k) |p_k|^2``, together with closed forms for their second
  moments in the unitary (beta = 2) case.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import ConsistencyError, OutOfRegimeError, SingularConfigurationError

__all__ = [
    "PartitionExponents",
    "PowerSumValue",
    "power_sum",
    "power_sums_batch",
    "w_statistic",
    "w_statistic_batch",
    "haar_joint_moment",
    "dyson_apply_direct",
    "dyson_apply_formula",
    "dyson_apply_w_formula",
    "grad_pairing",
    "residual_E",
    "residual_E_batch",
    "residual_Eprime",
    "residual_Eprime_batch",
    "moment_E_sq",
    "moment_Eprime_sq",
    "moment_E_sq_exact",
    "moment_Eprime_sq_exact",
]

COLLISION_THRESHOLD = 1e-10  # radians; below this a cotangent is numerically meaningless


def _angles(x) -> np.ndarray:
    """Accept a SpectrumSample-like object or a bare array of angles."""
    a = getattr(x, "angles", x)
    return np.asarray(a, dtype=float)


def power_sum(x, k: int) -> complex:
    """p_k(x) = sum_j exp(i k theta_j); p_0 = n exactly."""
    a = _angles(x)
    if k == 0:
        return complex(a.size)
    return complex(np.exp(1j * k * a).sum())


@dataclass(frozen=True)
class PowerSumValue:
    """An indexed power-sum value; |value| <= n and p_{-k} = conj(p_k)."""

    k: int
    value: complex

    @classmethod
    def of(cls, x, k: int) -> "PowerSumValue":
        return cls(k=int(k), value=power_sum(x, k))

    def conjugate(self) -> "PowerSumValue":
        return PowerSumValue(k=-self.k, value=self.value.conjugate())

    def check(self, n: int, slack: float = 1e-9) -> bool:
        return abs(self.value) <= n * (1.0 + slack)


def power_sums_batch(angles: np.ndarray, ks) -> dict[int, np.ndarray]:
    """p_k for each k over a stack of configurations (rows of ``angles``)."""
    angles = np.asarray(angles, dtype=float)
    out: dict[int, np.ndarray] = {}
    for k in ks:
        k = int(k)
        if k == 0:
            out[k] = np.full(angles.shape[0], angles.shape[1], dtype=complex)
        elif -k in out:
            out[k] = np.conj(out[-k])
        else:
            out[k] = np.exp(1j * k * angles).sum(axis=1)
    return out


def w_statistic(x, k: int, beta: float) -> float:
    """Rescaled trace-power statistic (beta / 2k) * |p_k(x)|^2."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if beta <= 0:
        raise ValueError("beta must be positive")
    return (beta / (2 * k)) * abs(power_sum(x, k)) ** 2


def w_statistic_batch(angles: np.ndarray, k: int, beta: float) -> np.ndarray:
    pk = np.exp(1j * k * np.asarray(angles, dtype=float)).sum(axis=1)
    return (beta / (2 * k)) * np.abs(pk) ** 2


@dataclass(frozen=True)
class PartitionExponents:
    """Multiplicity vectors (a_j), (b_j): a_j = number of parts equal to j.

    Trailing zeros are immaterial; ``a=(1, 2)`` means one part 1 and two
    parts 2, i.e. the partition (2, 2, 1).
    """

    a: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        for vec in (self.a, self.b):
            if any(int(m) != m or m < 0 for m in vec):
                raise ValueError("multiplicities must be nonnegative integers")
        object.__setattr__(self, "a", tuple(int(m) for m in self.a))
        object.__setattr__(self, "b", tuple(int(m) for m in self.b))

    @property
    def total_count(self) -> int:
        """Total number of parts on both sides, sum_j (a_j + b_j)."""
        return sum(self.a) + sum(self.b)

    @property
    def degree(self) -> int:
        """Total degree sum_j j * (a_j + b_j)."""
        da = sum((j + 1) * m for j, m in enumerate(self.a))
        db = sum((j + 1) * m for j, m in enumerate(self.b))
        return da + db


def _strip(vec: tuple[int, ...]) -> tuple[int, ...]:
    out = list(vec)
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def haar_joint_moment(p: PartitionExponents, n: int) -> int:
    """Exact E[ prod_j Tr(U^j)^{a_j} * conj(Tr(U^j))^{b_j} ] for Haar-unitary U.

    Valid for n >= sum_j (a_j + b_j); equals delta_{a,b} * prod_j j^{a_j} a_j!
    in exact integer arithmetic.  Raises OutOfRegimeError when the validity
    condition fails, since the formula makes no claim there.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n < p.total_count:
        raise OutOfRegimeError(
            f"joint moment formula requires n >= total part count "
            f"({n} < {p.total_count})"
        )
    if _strip(p.a) != _strip(p.b):
        return 0
    out = 1
    for j, m in enumerate(p.a, start=1):
        out *= j**m * factorial(m)
    return out


def _check_collision_free(a: np.ndarray) -> None:
    gaps = np.diff(a)
    wrap = a[0] + 2 * np.pi - a[-1] if a.size > 1 else np.inf
    min_gap = min(gaps.min(), wrap) if a.size > 1 else np.inf
    if a.size > 1 and min_gap < COLLISION_THRESHOLD:
        raise SingularConfigurationError(
            f"minimum angle gap {min_gap:.3e} below collision threshold "
            f"{COLLISION_THRESHOLD:.0e}"
        )


def dyson_apply_direct(x, j: int, beta: float) -> complex:
    """D p_j evaluated from the generator definition.

    D p_j(x) = sum_a (-j^2 e^{i j t_a})
             + (beta/2) * sum_{a != b} cot((t_a - t_b)/2) * i j e^{i j t_a}.

    Requires a collision-free configuration (pairwise gaps above
    COLLISION_THRESHOLD); otherwise the cotangents overwhelm the result.
    """
    a = _angles(x)
    _check_collision_free(np.sort(a))
    e = np.exp(1j * j * a)
    diff = a[:, None] - a[None, :]
    with np.errstate(divide="ignore"):
        cot = 1.0 / np.tan(diff / 2)
    np.fill_diagonal(cot, 0.0)
    inter = (beta / 2) * 1j * j * (cot.sum(axis=1) * e).sum()
    return complex(-(j**2) * e.sum() + inter)


def dyson_apply_formula(x, j: int, n: int | None = None, beta: float = 2.0) -> complex:
    """D p_j via the closed polynomial identity.

    D p_j = -(j beta / 2) sum_{l=1}^{j-1} p_l p_{j-l}
            + (j^2 beta / 2 - n j beta / 2 - j^2) p_j.
    """
    a = _angles(x)
    if n is None:
        n = a.size
    ps = {l: complex(np.exp(1j * l * a).sum()) for l in range(1, j + 1)}
    cross = sum(ps[l] * ps[j - l] for l in range(1, j))
    return -(j * beta / 2) * cross + (j**2 * beta / 2 - n * j * beta / 2 - j**2) * ps[j]


def dyson_apply_w_formula(x, j: int, n: int | None = None, beta: float = 2.0) -> complex:
    """D (p_j * conj(p_j)) via the closed identity.

    D(p_j pbar_j) = -n beta j p_j pbar_j - (2 - beta) j^2 p_j pbar_j + 2 j^2 n
                    - (beta/2) j sum_{l=1}^{j-1} p_{-l} p_{l-j} p_j
                    - (beta/2) j sum_{l=1}^{j-1} p_l  p_{j-l} pbar_j.

    The first interaction sum runs over l (the summation index), making the
    expression the exact product-rule expansion of the D p_j identity; its
    value is real up to rounding.
    """
    a = _angles(x)
    if n is None:
        n = a.size
    ps = {l: complex(np.exp(1j * l * a).sum()) for l in range(1, j + 1)}
    pj = ps[j]
    pjbar = pj.conjugate()
    s_plus = sum(ps[l] * ps[j - l] for l in range(1, j))
    s_minus = s_plus.conjugate() if j > 1 else 0.0
    return (
        -n * beta * j * pj * pjbar
        - (2 - beta) * j**2 * pj * pjbar
        + 2 * j**2 * n
        - (beta / 2) * j * s_minus * pj
        - (beta / 2) * j * s_plus * pjbar
    )


def grad_pairing(x, k: int, l: int) -> complex:
    """Gradient pairing sum_j (i k e^{i k t_j}) (i l e^{i l t_j}) = -k l p_{k+l}."""
    return -k * l * power_sum(x, k + l)


def _real_with_guard(z: complex, tol: float, what: str) -> float:
    if abs(z.imag) > tol:
        raise ConsistencyError(
            f"{what}: imaginary part {z.imag:.3e} exceeds tolerance {tol:.3e}"
        )
    return z.real


def _residual_E_complex(ps: dict[int, np.ndarray | complex], k: int, beta: float):
    first = -(beta * (2 - beta) / 2) * k * ps[k] * ps[-k]
    s1 = sum(ps[l] * ps[k - l] for l in range(1, k)) if k > 1 else 0.0
    s2 = sum(ps[-l] * ps[l - k] for l in range(1, k)) if k > 1 else 0.0
    return first - (beta**2 / 4) * (s1 * ps[-k] + s2 * ps[k])


def residual_E(x, k: int, beta: float) -> float:
    """Drift residual E of W = (beta/2k) |p_k|^2 under the Dyson generator.

    E = -(beta (2 - beta) / 2) k p_k pbar_k
        - (beta^2 / 4) sum_{l=1}^{k-1} p_l p_{k-l} pbar_k
        - (beta^2 / 4) sum_{l=1}^{k-1} p_{-l} p_{l-k} p_k

    The expression is conjugation-symmetric; the imaginary part is asserted
    below 1e-10 * n^2 * k before being discarded.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    a = _angles(x)
    ps = {l: complex(np.exp(1j * l * a).sum()) for l in range(-k, k + 1) if l != 0}
    val = _residual_E_complex(ps, k, beta)
    return _real_with_guard(val, 1e-10 * a.size**2 * k, "residual_E")


def residual_E_batch(angles: np.ndarray, k: int, beta: float) -> np.ndarray:
    ps = power_sums_batch(angles, range(-k, k + 1))
    val = _residual_E_complex(ps, k, beta)
    val = np.asarray(val)
    tol = 1e-10 * angles.shape[1] ** 2 * k
    bad = np.abs(val.imag).max(initial=0.0)
    if bad > tol:
        raise ConsistencyError(f"residual_E_batch: imaginary part {bad:.3e} > {tol:.3e}")
    return val.real


def _residual_Eprime_complex(ps, k: int, beta: float):
    return -(beta**2 / 2) * (ps[2 * k] * ps[-k] ** 2 + ps[-2 * k] * ps[k] ** 2)


def residual_Eprime(x, k: int, beta: float) -> float:
    """Quadratic-variation residual E' = -(beta^2/2)(p_{2k} p_{-k}^2 + p_{-2k} p_k^2)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    a = _angles(x)
    ps = {l: complex(np.exp(1j * l * a).sum()) for l in (k, -k, 2 * k, -2 * k)}
    val = _residual_Eprime_complex(ps, k, beta)
    return _real_with_guard(val, 1e-10 * a.size**2 * k, "residual_Eprime")


def residual_Eprime_batch(angles: np.ndarray, k: int, beta: float) -> np.ndarray:
    ps = power_sums_batch(angles, (k, -k, 2 * k, -2 * k))
    val = np.asarray(_residual_Eprime_complex(ps, k, beta))
    tol = 1e-10 * angles.shape[1] ** 2 * k
    bad = np.abs(val.imag).max(initial=0.0)
    if bad > tol:
        raise ConsistencyError(f"residual_Eprime_batch: imaginary part {bad:.3e} > {tol:.3e}")
    return val.real


def moment_E_sq(k: int) -> Fraction:
    """Closed-form reference value for E[E^2] in the unitary (beta = 2) regime:
    (k^3 - k)/6 for odd k, (2k^3 + 3k^2 - 2k)/12 for even k.

    Known inconsistency: for k >= 2 this reference value disagrees with the
    exact expansion of E[residual_E^2] computable from haar_joint_moment
    (moment_E_sq_exact gives 8 at k=2 and 48 at k=3).  The value here is the
    constant consumed by the closed-form distance-bound chain; the exact
    expansion is what Monte Carlo reproduces.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k % 2:
        return Fraction(k**3 - k, 6)
    return Fraction(2 * k**3 + 3 * k**2 - 2 * k, 12)


def moment_Eprime_sq(k: int) -> int:
    """E[E'^2] = 32 k^3 in the unitary (beta = 2) regime (matches the exact
    expansion, see moment_Eprime_sq_exact)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return 32 * k**3


def _counter_to_exponents(parts: dict[int, int]) -> tuple[int, ...]:
    top = max(parts)
    return tuple(parts.get(j, 0) for j in range(1, top + 1))


def moment_E_sq_exact(k: int) -> int:
    """Exact E[residual_E^2] at beta = 2 via the joint-moment oracle.

    residual_E = -(A + conj(A)) with A = pbar_k sum_{l<k} p_l p_{k-l}; the
    square expands into Haar moments of balanced part multisets, each given
    exactly by haar_joint_moment.  Valid whenever n >= 6k.
    """
    from collections import Counter

    if k < 1:
        raise ValueError("k must be a positive integer")
    total = 0
    for l in range(1, k):
        for j in range(1, k):
            left = Counter([l, k - l, k])
            if left != Counter([j, k - j, k]):
                continue
            exps = _counter_to_exponents(left)
            total += haar_joint_moment(PartitionExponents(exps, exps), 6 * k)
    return 2 * total


def moment_Eprime_sq_exact(k: int) -> int:
    """Exact E[residual_Eprime^2] at beta = 2 via the joint-moment oracle."""
    from collections import Counter

    if k < 1:
        raise ValueError("k must be a positive integer")
    parts = Counter([2 * k, k, k])
    exps = _counter_to_exponents(parts)
    return 8 * haar_joint_moment(PartitionExponents(exps, exps), 8 * k)

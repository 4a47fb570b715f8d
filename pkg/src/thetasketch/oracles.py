"""Exact oracles for the level-counter sampler and prior-art variance formulas.

The level reached by the level-counter sampler after consuming u = n - k
distinct items past its prefix is a random variable with an exactly
computable distribution:

    Pr(0; 0) = 1
    Pr(i; 0) = 0                for i > 0
    Pr(0; u) = 0                for u > 0
    Pr(i; u) = (1 - a^i) Pr(i; u-1) + a^(i-1) Pr(i-1; u-1)

with a = k/(k+1).  Everything else here is a moment of that distribution or
a closed form cross-checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceLimit, UnsupportedQ

_DP_LIMIT = 100_000


@dataclass(frozen=True)
class LevelDistribution:
    """Exact probabilities of each final level for one (k, u)."""

    k: int
    u: int
    probs: np.ndarray  # index i in [0, u]


def _check_ku(k: int, u: int) -> None:
    if k < 1:
        raise DomainError("k must be >= 1")
    if u < 0:
        raise DomainError("u must be >= 0")
    if u > _DP_LIMIT:
        raise ResourceLimit(f"u={u} exceeds the quadratic DP limit {_DP_LIMIT}")


def alpha_level_distribution(k: int, u: int) -> LevelDistribution:
    """Run the level recurrence to the exact distribution for (k, u)."""
    _check_ku(k, u)
    alpha = k / (k + 1)
    apow = alpha ** np.arange(u + 1, dtype=np.float64)
    p = np.zeros(u + 1, dtype=np.float64)
    p[0] = 1.0
    for step in range(1, u + 1):
        hi = step + 1
        p[1:hi] = p[1:hi] * (1.0 - apow[1:hi]) + apow[0 : hi - 1] * p[0 : hi - 1]
        p[0] = 0.0
    return LevelDistribution(k, u, p)


def _weighted_level_sums(q: int, k: int, u_max: int) -> np.ndarray:
    """sum_i a^(-q i) Pr(i; u) for u = 0..u_max, one DP sweep.

    The weight a^(-q i) is carried through the recurrence itself (the array
    holds w_i = a^(-q i) Pr(i; u)), which keeps every intermediate finite
    even where a^(-q u) alone would overflow.
    """
    alpha = k / (k + 1)
    # transition weight for the i-1 -> i step: a^(-q i) * a^(i-1) / a^(-q(i-1))
    idx = np.arange(1, u_max + 1, dtype=np.float64)
    step_w = alpha ** (idx - 1 - q)
    apow = alpha ** np.arange(u_max + 1, dtype=np.float64)
    w = np.zeros(u_max + 1, dtype=np.float64)
    w[0] = 1.0
    out = np.empty(u_max + 1, dtype=np.float64)
    out[0] = 1.0
    for step in range(1, u_max + 1):
        hi = step + 1
        w[1:hi] = w[1:hi] * (1.0 - apow[1:hi]) + step_w[0 : hi - 1] * w[0 : hi - 1]
        w[0] = 0.0
        out[step] = w[:hi].sum()
    return out


def g_moment_dp(q: int, k: int, u: int) -> float:
    """The q-th inverse-power moment sum_i a^(-q i) Pr(i; u), from the DP."""
    if q < 0:
        raise DomainError("q must be a nonnegative integer")
    _check_ku(k, u)
    return float(_weighted_level_sums(q, k, u)[u])


def g_moment_dp_sweep(q: int, k: int, u_max: int) -> np.ndarray:
    """g_moment_dp for every u in 0..u_max with a single DP pass."""
    if q < 0:
        raise DomainError("q must be a nonnegative integer")
    _check_ku(k, u_max)
    return _weighted_level_sums(q, k, u_max)


def g_closed(q: int, k: int, u: int) -> float:
    """Closed forms of the inverse-power moments, known for q in {0, 1, 2}."""
    if k < 1 or u < 0:
        raise DomainError("need k >= 1 and u >= 0")
    if q == 0:
        return 1.0
    if q == 1:
        return (k + u) / k
    if q == 2:
        return (k**3 + 2 * k**2 * u + k * u**2 + u * (u - 1) / 2) / k**3
    raise UnsupportedQ(f"no closed form for q={q}")


def _conditional_sample_variance(k: int, levels: np.ndarray) -> np.ndarray:
    """Var(retained count | level = i) = (a - a^(2i+1)) / (1 - a^2)."""
    alpha = k / (k + 1)
    return (alpha - alpha ** (2.0 * levels + 1.0)) / (1.0 - alpha * alpha)


def alpha_sample_size_moments(k: int, u: int) -> tuple[float, float]:
    """Exact mean and variance of the retained-set size at stream end.

    The mean is k for every u; the variance mixes the conditional variance
    over the exact level distribution (the conditional mean is constant, so
    no between-level term arises).
    """
    dist = alpha_level_distribution(k, u)
    levels = np.arange(u + 1, dtype=np.float64)
    mean = k * float(dist.probs.sum())
    var = float(np.dot(dist.probs, _conditional_sample_variance(k, levels)))
    return mean, var


def alpha_estimator_variance(k: int, n: int) -> float:
    """Exact variance of the count/threshold estimate of the level-counter sampler."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if n < k:
        raise DomainError("n must be >= k")
    nf = float(n)
    return ((2 * k + 1) * nf * nf - (k * k + k) * (2 * nf - 1) - nf) / (2 * k * k)


def hip_mean_var(k: int, n: int) -> tuple[float, float]:
    """Mean and variance of the level-only estimate k * a^(-level)."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if n < k:
        raise DomainError("n must be >= k")
    u = n - k
    return float(n), u * (u - 1) / (2.0 * k)


def kmv_variance(k: int, n: int) -> float:
    """Variance (n^2 - k n) / (k - 1) of the bottom-k estimator."""
    if k < 2:
        raise DomainError("k must be >= 2")
    if n < k:
        raise DomainError("n must be >= k")
    nf = float(n)
    return (nf * nf - k * nf) / (k - 1)


def kmv_subpop_variance(k: int, n: int, n_p: int) -> float:
    """Variance n_p (n - k) / (k - 1) of the bottom-k subpopulation estimator."""
    if k < 2:
        raise DomainError("k must be >= 2")
    if n < k:
        raise DomainError("n must be >= k")
    if not 0 <= n_p <= n:
        raise DomainError("n_p must lie in [0, n]")
    return n_p * (n - k) / (k - 1)


def adaptive_variance_approx(k: int, n: int) -> float:
    """Center value 1.44 n^2 / (k - 1) of the halving sampler's variance.

    The true variance oscillates around this value with the stream size;
    callers should treat it as a band center, not an exact target.
    """
    if k < 2:
        raise DomainError("k must be >= 2")
    if n < k:
        raise DomainError("n must be >= k")
    nf = float(n)
    return 1.44 * nf * nf / (k - 1)

"""Expected waiting times for partial coupon collection, and bounds on them.

Used by the engine to decide how many expeditions to run in an epoch: the
number of IID draws from the go distribution expected to visit half of the
elites.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

EPS = float(np.finfo(float).eps)
EXACT_MAX_N = 16
CUTOFF_MAX_C = 16


@dataclass(frozen=True)
class CouponBounds:
    lower: float
    upper: float
    exact: float | None = None


def _normalize(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if not np.all(np.isfinite(p)):
        raise ValueError("p not finite")
    if (p < 0).any():
        raise ValueError("p not nonnegative")
    total = p.sum()
    if abs(total - 1) > math.sqrt(EPS):
        if total <= 0 or abs(total - 1) > 1e-3:
            raise ValueError(f"p sums to {total}, not 1")
        warnings.warn("p does not sum to unity: normalizing", RuntimeWarning, stacklevel=3)
    return p / total


def _binom(n, k) -> float:
    """Binomial coefficient through log-gamma."""
    return float(np.exp(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)))


def _subset_sums(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum of ``p`` and size over every subset, indexed by bitmask."""
    n = len(p)
    sums = np.zeros(1 << n, dtype=p.dtype)
    sizes = np.zeros(1 << n, dtype=np.int64)
    for k in range(n):
        half = 1 << k
        sums[half : 2 * half] = sums[:half] + p[k]
        sizes[half : 2 * half] = sizes[:half] + 1
    return sums, sizes


def expected_partial_exact(p, m: int) -> float:
    """E(C_m) via the alternating inclusion-exclusion sum over index subsets.

    The alternating terms cancel heavily for n near 16 (about eight digits),
    so the sum is accumulated in extended precision with exact binomials.
    """
    p = _normalize(p)
    n = len(p)
    if n > EXACT_MAX_N:
        raise ValueError(f"exact sum limited to n <= {EXACT_MAX_N}, got n={n}")
    if m < 1 or m > np.count_nonzero(p):
        raise ValueError("need 1 <= m <= nnz(p)")
    if m == 1:
        return 1.0
    sums, sizes = _subset_sums(p.astype(np.longdouble))
    order = np.argsort(sizes, kind="stable")
    bounds = np.searchsorted(sizes[order], np.arange(m + 1))
    inv = 1 / (1 - sums[order[: bounds[m]]])
    total = np.longdouble(0)
    for ell in range(m):
        sign = -1 if (m - 1 - ell) % 2 else 1
        total += sign * math.comb(n - ell - 1, n - m) * inv[bounds[ell] : bounds[ell + 1]].sum()
    return float(total)


def expected_full_integral(p) -> float:
    """E(C_n) by trapezoid quadrature of ``1 - prod(1 - exp(-p t))``."""
    p = _normalize(p)
    if (p == 0).any():
        raise ValueError("full collection needs strictly positive p")

    def f(t):
        t = np.atleast_1d(t)
        return 1.0 - np.prod(-np.expm1(-np.outer(p, t)), axis=0)

    x = 1.0
    while f(x)[0] > EPS:
        x *= 10.0
    t = np.linspace(0.0, x, 10_000)
    return float(np.trapezoid(f(t), t))


def harmonic_lower_bound(n: int, m: int) -> float:
    """n (H_n - H_{n-m}): the uniform-distribution waiting time, a lower bound."""
    return float(n * sum(1.0 / k for k in range(n - m + 1, n + 1)))


def _cutoff_bounds(p: np.ndarray, m: int, c: int) -> tuple[float, float]:
    # p sorted descending; top lambda coordinates enumerated, tail bounded
    n = len(p)
    lb = ub = 0.0
    for ell in range(m):
        lam = min(c, ell)
        s_lb = s_ub = 0.0
        for mask in range(1 << lam):
            idx = [k for k in range(lam) if mask >> k & 1]
            mu = len(idx)
            r = ell - mu
            if r < 0 or r > n - lam:
                continue
            p_m = p[idx].sum()
            count = _binom(n - lam, r)
            tail_min = p[n - r :].sum() if r else 0.0
            start = min(lam, n - r)
            tail_max = p[start : start + r].sum()
            s_lb += count / (1.0 - p_m - tail_min)
            s_ub += count / (1.0 - p_m - tail_max)
        coeff = _binom(n - ell - 1, n - m) * (-1.0) ** (m - 1 - ell)
        lb += min(coeff * s_lb, coeff * s_ub)
        ub += max(coeff * s_lb, coeff * s_ub)
    return lb, ub


def _deviation_bounds(p: np.ndarray, m: int, c: int) -> tuple[float, float]:
    # write p_k = (1 + delta_k)/n, so 1 - P_L = 1 - (|L| + sum_L delta)/n
    n = len(p)
    delta = n * p - 1.0
    lb = ub = 0.0
    for ell in range(m):
        lam = min(c, ell)
        tail = np.sort(np.abs(delta[lam:]))[::-1]
        s_lb = s_ub = 0.0
        for mask in range(1 << lam):
            idx = [k for k in range(lam) if mask >> k & 1]
            mu = len(idx)
            r = ell - mu
            if r < 0 or r > n - lam:
                continue
            d_m = delta[idx].sum()
            spread = tail[:r].sum()
            count = _binom(n - lam, r)
            lo_denom = max(1.0 - (ell + d_m + spread) / n, EPS)
            hi_denom = max(1.0 - (ell + d_m - spread) / n, EPS)
            s_ub += count / lo_denom
            s_lb += count / hi_denom
        coeff = _binom(n - ell - 1, n - m) * (-1.0) ** (m - 1 - ell)
        lb += min(coeff * s_lb, coeff * s_ub)
        ub += max(coeff * s_lb, coeff * s_ub)
    return lb, ub


def partial_collection_bounds(p, m: int, c: int, use_exact: bool = True) -> CouponBounds:
    """Best available lower/upper bounds on E(C_m).

    With ``use_exact`` (the default) the exact sum is returned as both bounds
    whenever ``n <= 16``. Turning it off exposes the cutoff, deviation and
    harmonic bounds on their own, with ``exact`` still filled in for
    reference when it is cheap.
    """
    p = _normalize(p)
    if m < 1 or c < 1:
        raise ValueError("need m >= 1 and c >= 1")
    if m > np.count_nonzero(p):
        raise ValueError("numCouponTypes > nnz(p)")
    if m == 1:
        return CouponBounds(1.0, 1.0, 1.0)
    p = np.sort(p)[::-1]
    n = len(p)
    exact = expected_partial_exact(p, m) if n <= EXACT_MAX_N else None
    if exact is not None and use_exact:
        return CouponBounds(exact, exact, exact)

    lower = 0.0
    upper = math.inf
    if (p > 0).all():
        total = expected_full_integral(p)
        if m == n:
            return CouponBounds(total, total, total if exact is None else exact)
        upper = total
    if c <= CUTOFF_MAX_C:
        c = min(c, n)
        for lo, hi in (_cutoff_bounds(p, m, c), _deviation_bounds(p, m, c)):
            lower = max(lower, lo)
            upper = min(upper, hi)
    lower = max(lower, harmonic_lower_bound(n, m))
    return CouponBounds(float(lower), float(upper), exact)


def expedition_count(p) -> int:
    """Expeditions per epoch: ceil of the lower bound for visiting half the elites."""
    n = len(p)
    b = partial_collection_bounds(p, math.ceil(n / 2), n)
    return max(1, math.ceil(b.lower))


def simulate_partial(p, m: int, trials: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo mean and standard error of C_m."""
    p = _normalize(p)
    n = len(p)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    seen = np.zeros((trials, n), dtype=bool)
    count = np.zeros(trials, dtype=np.int64)
    steps = np.zeros(trials, dtype=np.int64)
    active = np.arange(trials)
    rows = np.arange(trials)
    while active.size:
        j = np.searchsorted(cdf, rng.random(active.size), side="right")
        r = rows[active]
        steps[r] += 1
        new = ~seen[r, j]
        seen[r, j] = True
        count[r] += new
        active = active[count[active] < m]
    return float(steps.mean()), float(steps.std(ddof=1) / math.sqrt(trials))

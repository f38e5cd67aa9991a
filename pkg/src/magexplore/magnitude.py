"""Similarity matrices, weightings, magnitude, diversity and scale cutoffs.

Everything here works on dense numpy arrays. A dissimilarity matrix is a
square, symmetric, nonnegative matrix with zero diagonal and strictly positive
off-diagonal entries (``inf`` allowed). The similarity matrix at scale ``t`` is
``exp(-t * d)`` and a weighting is a solution of ``Z w = 1``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize
from scipy.linalg import lapack

EPS = float(np.finfo(float).eps)
LOG_FLOOR = 2 * math.log(EPS)
SQRT_EPS = math.sqrt(EPS)


class SingularWeightingError(np.linalg.LinAlgError):
    """Raised when ``Z w = 1`` cannot be solved."""


@dataclass(frozen=True)
class Weighting:
    components: np.ndarray
    scale: float | None = None
    repaired: bool = False

    @property
    def magnitude(self) -> float:
        return float(np.sum(self.components))

    def __len__(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class ScaleCutoffs:
    diag_lower: float
    diag_upper: float
    strong: float
    positive: float


def check_dissimilarity(d, check_symmetry: bool = True) -> np.ndarray:
    """Validate and return ``d`` as a float array."""
    d = np.array(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("dissimilarity matrix must be square")
    if np.isnan(d).any():
        raise ValueError("dissimilarity matrix contains NaN")
    if (d < 0).any():
        raise ValueError("dissimilarity matrix has negative entries")
    if (np.diag(d) != 0).any():
        raise ValueError("dissimilarity matrix diagonal is not zero")
    n = d.shape[0]
    off = ~np.eye(n, dtype=bool)
    if (d[off] <= 0).any():
        raise ValueError("dissimilarity matrix is degenerate (zero off the diagonal)")
    if check_symmetry:
        dt = d.T
        both_inf = np.isinf(d) & np.isinf(dt)
        with np.errstate(invalid="ignore"):
            gap = np.abs(d - dt)
        scale = np.maximum(np.abs(d), np.abs(dt))
        bad = ~both_inf & (gap > SQRT_EPS * scale)
        if bad.any():
            raise ValueError("dissimilarity matrix is not symmetric")
    return d


def similarity(d, t: float) -> np.ndarray:
    """Entrywise ``exp(-t d)``; infinite dissimilarities map to exactly 0.

    Entries below ``eps**2`` are set to 0 as well. That is far below working
    precision and keeps subnormal numbers (very slow arithmetic) out of the
    exponential and the factorizations.
    """
    if not t >= 0:
        raise ValueError(f"scale must be nonnegative, got {t}")
    d = np.asarray(d, dtype=float)
    if t == 0:
        return np.where(np.isinf(d), 0.0, 1.0)
    x = np.multiply(d, -t)
    np.putmask(x, x < LOG_FLOOR, -np.inf)
    return np.exp(x, out=x)


def _factor_solve(Z: np.ndarray, lazy_rcond: bool = False):
    """Solve ``Z w = 1`` with a symmetric factorization.

    Returns ``(w, rcond)`` or raises :class:`SingularWeightingError`.
    Cholesky is tried first; symmetric indefinite (LDL^T) is the fallback.
    With ``lazy_rcond`` the condition estimate is skipped (NaN) unless ``w``
    is strictly positive.
    """
    n = Z.shape[0]
    ones = np.ones(n)
    # the transpose of a symmetric C-ordered array is the same matrix in Fortran order
    c, info = lapack.dpotrf(Z.T, lower=True, clean=False)
    if info == 0:
        w, info = lapack.dpotrs(c, ones, lower=True)
        if lazy_rcond and not w.min() > 0:
            return w, math.nan
        rcond, _ = lapack.dpocon(c, np.abs(Z).sum(axis=1).max(), uplo="L")
        return w, float(rcond)
    ldu, ipiv, info = lapack.dsytrf(Z, lower=True)
    if info != 0:
        raise SingularWeightingError("similarity matrix is singular")
    w, info = lapack.dsytrs(ldu, ipiv, ones, lower=True)
    if lazy_rcond and not w.min() > 0:
        return w, math.nan
    rcond, _ = lapack.dsycon(ldu, ipiv, np.abs(Z).sum(axis=1).max(), lower=True)
    return w, float(rcond)


def solve_weighting(Z, scale: float | None = None, repair: bool = True) -> Weighting:
    """Weighting of a similarity matrix.

    A matrix within ``eps**0.75`` of all-ones gets the uniform weighting ``1/n``.
    Negative components are shifted away (``w - min(w)``) when ``repair`` is
    set, and the result is flagged as repaired.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError("similarity matrix must be square")
    n = Z.shape[0]
    if np.max(np.abs(Z - 1.0)) < EPS**0.75:
        # Z is all-ones to working precision; the uniform vector solves it
        return Weighting(np.full(n, 1.0 / n), scale)
    w, _ = _factor_solve(Z)
    if not np.all(np.isfinite(w)):
        raise SingularWeightingError("similarity matrix is singular")
    if repair and (w < 0).any():
        warnings.warn(f"min(w) = {w.min():.3g} < 0: shifting weighting", RuntimeWarning, stacklevel=2)
        return Weighting(w - w.min(), scale, repaired=True)
    return Weighting(w, scale)


def weighting(d, t: float, repair: bool = True) -> Weighting:
    return solve_weighting(similarity(d, t), scale=t, repair=repair)


def magnitude(w: Weighting | np.ndarray) -> float:
    if isinstance(w, Weighting):
        return w.magnitude
    return float(np.sum(w))


def diversity(Z, p, q: float) -> float:
    """Similarity-sensitive diversity of order ``q`` (1 and inf via limits)."""
    if q is None or (isinstance(q, float) and math.isnan(q)) or q < 1:
        raise ValueError(f"invalid order q={q}")
    Z = np.asarray(Z, dtype=float)
    p = np.asarray(p, dtype=float)
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("p must be a probability vector")
    supp = p > 0
    zp = (Z @ p)[supp]
    ps = p[supp]
    if q == 1:
        return float(np.exp(-np.sum(ps * np.log(zp))))
    if math.isinf(q):
        return float(1.0 / zp.max())
    return float(np.sum(ps * zp ** (q - 1)) ** (1.0 / (1.0 - q)))


def max_diversity_distribution(w: Weighting | np.ndarray) -> np.ndarray:
    w = np.asarray(w.components if isinstance(w, Weighting) else w, dtype=float)
    if (w < 0).any():
        raise ValueError("weighting has negative components")
    total = w.sum()
    if total <= 0:
        raise ValueError("weighting sums to zero")
    return w / total


def diag_dominance_bounds(d) -> tuple[float, float]:
    """Bracket for the minimal scale making ``exp(-t d)`` diagonally dominant."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    off = d + np.diag(np.full(n, np.inf))
    log_n = math.log(n - 1)
    lower = log_n / d.max(axis=1).min()
    upper = log_n / off.min()
    return float(lower), float(upper)


def _bisect(d: np.ndarray, score) -> float:
    """Bracket the smallest accepted scale, starting from the diagonal dominance bound.

    ``score(t) > 0`` means ``t`` is accepted. The descent from the upper bound
    steps by at least a factor of two, further when a secant through the last
    two accepted scores points lower, until a rejection is found. Brent's
    method then tightens the bracket until ``1 - lower/upper <= sqrt(eps)``.
    Returns the bracket midpoint.
    """
    n = d.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    _, upper = diag_dominance_bounds(d)
    if not upper > 0:
        return float(upper)
    lower = 0.0
    seen: dict[float, float] = {}

    def f(t):
        nonlocal lower, upper
        if t not in seen:
            g = seen[t] = score(t)
            if g > 0:
                upper = min(upper, t)
            else:
                lower = max(lower, t)
        return seen[t]

    t_prev = g_prev = None
    t = 0.5 * upper
    while True:
        g = f(t)
        if not g > 0:
            break
        if t == 0.0:
            return 0.0
        step = 0.5 * t
        if g_prev is not None and g_prev > g:
            root = t - g * (t_prev - t) / (g_prev - g)
            step = min(step, max(0.9 * root, t / 16))
        t_prev, g_prev, t = t, g, step
    if 1 - lower / upper > SQRT_EPS:
        try:
            optimize.brentq(lambda s: f(s) if f(s) > 0 else min(f(s), -1e-300), lower, upper,
                            xtol=1e-300, rtol=0.25 * SQRT_EPS, maxiter=200)
        except RuntimeError:
            pass
    while 1 - lower / upper > SQRT_EPS:
        f(0.5 * (lower + upper))
    return float(0.5 * (lower + upper))


def _weighting_score(Z: np.ndarray) -> float:
    try:
        w, rcond = _factor_solve(Z, lazy_rcond=True)
    except SingularWeightingError:
        return -1.0
    if not np.all(np.isfinite(w)):
        return -1.0
    if not w.min() > 0:
        return float(w.min())
    # rcond guard stops the descent toward t = 0, where Z is numerically rank one
    if rcond < EPS:
        return -1.0
    # positivity only counts when it exceeds the forward error of the solve
    return float(w.min() - Z.shape[0] * EPS * np.abs(w).max() / rcond)


def strong_cutoff(d) -> float:
    """Minimal scale with PSD similarity matrix and positive weighting.

    Callers use ``strong_cutoff(d) * (1 + SQRT_EPS)``.
    """
    d = check_dissimilarity(d)
    n = d.shape[0]

    def score(t):
        Z = similarity(d, t)
        lam = linalg.eigvalsh(Z)[0] + 1e-10 * n
        if lam < 0:
            return lam
        return _weighting_score(Z)

    return _bisect(d, score)


def positive_cutoff(d) -> float:
    """Like :func:`strong_cutoff` without the eigenvalue check.

    Appropriate when ``exp(-t d)`` is known to be positive definite, e.g. for
    Euclidean distance matrices.
    """
    d = check_dissimilarity(d, check_symmetry=False)
    return _bisect(d, lambda t: _weighting_score(similarity(d, t)))


def scale_cutoffs(d) -> ScaleCutoffs:
    lo, hi = diag_dominance_bounds(d)
    return ScaleCutoffs(lo, hi, strong_cutoff(d), positive_cutoff(d))


def cutoff_weighting(d, euclidean: bool = False, repair: bool = True) -> Weighting:
    """Weighting at ``cutoff * (1 + sqrt(eps))``; a single point gets ``[1]``."""
    d = np.asarray(d, dtype=float)
    if d.shape[0] == 1:
        return Weighting(np.ones(1), 0.0)
    t = (positive_cutoff(d) if euclidean else strong_cutoff(d)) * (1 + SQRT_EPS)
    return solve_weighting(similarity(d, t), scale=t, repair=repair)

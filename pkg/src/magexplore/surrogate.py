"""Parameter-free linear radial basis function interpolation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class RbfInterpolant:
    nodes: np.ndarray
    coefficients: np.ndarray
    offset: float = 0.0  # only nonzero for a single node, where A = [[0]]

    def __call__(self, q):
        return evaluate(self, q)


def _as_nodes(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("nodes must be a 2-D array (one row per node)")
    return x


def fit_linear_rbf(x, y) -> RbfInterpolant:
    """Interpolate ``y`` at rows of ``x`` with ``phi(q) = sum_i c_i |q - x_i|``.

    Exact duplicate rows are dropped (first occurrence kept). A singular
    system falls back to least squares.
    """
    x = _as_nodes(x)
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.shape[0]:
        raise ValueError("x and y sizes incompatible")
    if x.shape[0] == 0:
        raise ValueError("need at least one node")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("x or y not finite")
    _, first = np.unique(x, axis=0, return_index=True)
    keep = np.sort(first)
    x, y = x[keep], y[keep]
    if len(x) == 1:
        return RbfInterpolant(x, np.zeros(1), float(y[0]))
    A = cdist(x, x)
    try:
        c = np.linalg.solve(A, y)
    except np.linalg.LinAlgError:
        c = np.linalg.lstsq(A, y, rcond=None)[0]
    return RbfInterpolant(x, c)


def evaluate(phi: RbfInterpolant, q):
    """Interpolant value at a point (float) or at each row of a matrix."""
    q = np.asarray(q, dtype=float)
    single = q.ndim <= 1
    q2 = q.reshape(1, -1) if single else q
    if q2.shape[1] != phi.nodes.shape[1]:
        raise ValueError("query dimension does not match nodes")
    out = cdist(q2, phi.nodes) @ phi.coefficients + phi.offset
    return float(out[0]) if single else out

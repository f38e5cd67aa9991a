"""Diverse landmark generation and the rank-K cell hash built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .magnitude import SQRT_EPS, SingularWeightingError, similarity, solve_weighting, strong_cutoff

Pairwise = Callable[[Sequence[Any], Sequence[Any]], np.ndarray]


class DuplicateStateError(RuntimeError):
    pass


def pairwise_from_scalar(dis: Callable[[Any, Any], float]) -> Pairwise:
    """Dissimilarity matrix builder from a two-argument dissimilarity."""

    def pairwise(xs, ys):
        out = np.empty((len(xs), len(ys)))
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                out[i, j] = dis(x, y)
        return out

    return pairwise


def self_dissimilarity(pairwise: Pairwise, xs: Sequence[Any]) -> np.ndarray:
    """Symmetric dissimilarity matrix with an exact zero diagonal."""
    d = pairwise(xs, xs)
    d = np.maximum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return d


def default_state_count(L: int) -> int:
    """ceil(L log L), floored at L."""
    return max(L, math.ceil(L * math.log(L))) if L > 1 else 1


@dataclass
class LandmarkSet:
    states: list
    landmark_indices: np.ndarray
    scale: float
    magnitude_trace: np.ndarray = field(repr=False)

    @property
    def landmarks(self) -> list:
        return [self.states[i] for i in self.landmark_indices]

    def __len__(self) -> int:
        return len(self.landmark_indices)


def generate_landmarks(
    pairwise: Pairwise,
    L: int,
    T: int | None,
    generator: Callable[[int], Any],
    max_retries: int = 100,
) -> LandmarkSet:
    """Greedy magnitude maximization over a stream of ``T`` generated states.

    The first ``L`` states seed the landmarks and fix the scale (strong cutoff
    of their dissimilarity matrix). Each later state replaces the landmark with
    the least weighting component iff the magnitude strictly increases.
    ``magnitude_trace[k]`` is the magnitude after state ``L + k`` is considered.
    """
    if L < 1:
        raise ValueError("L < 1")
    T = default_state_count(L) if T is None else T
    if T < L:
        raise ValueError("T < L")

    states: list = []

    def draw(i):
        for _ in range(max_retries):
            x = generator(i)
            if not states or pairwise([x], states).min() > 0:
                return x
        raise DuplicateStateError(f"generator produced only duplicate states after {max_retries} draws")

    for i in range(L):
        states.append(draw(i))
    index = np.arange(L)
    trace = np.empty(T - L + 1)
    if L == 1:
        for i in range(L, T):
            states.append(draw(i))
        trace[:] = 1.0
        return LandmarkSet(states, index, 0.0, trace)

    d0 = pairwise(states, states)
    d0 = np.maximum(d0, d0.T)
    np.fill_diagonal(d0, 0.0)
    t = strong_cutoff(d0) * (1 + SQRT_EPS)
    w0 = solve_weighting(similarity(d0, t), scale=t, repair=False).components
    mag = float(w0.sum())
    trace[0] = mag
    for i in range(L, T):
        x = draw(i)
        states.append(x)
        j = int(np.argmin(w0))
        row = pairwise([x], [states[k] for k in index])[0]
        row[j] = 0.0
        d1 = d0.copy()
        d1[j, :] = row
        d1[:, j] = row
        try:
            w1 = solve_weighting(similarity(d1, t), scale=t, repair=False).components
        except SingularWeightingError:
            w1 = None
        if w1 is not None and w1.sum() > mag:
            d0, w0, mag = d1, w1, float(w1.sum())
            index[j] = i
        trace[i - L + 1] = mag
    return LandmarkSet(states, index, t, trace)


def state_cells(pairwise: Pairwise, landmarks: Sequence[Any], K: int, xs: Sequence[Any]) -> np.ndarray:
    """Cell ids for many states: row ``i`` holds the ``K`` nearest landmark
    ranks of ``xs[i]`` (1-based, nearest first, ties to the lower rank)."""
    L = len(landmarks)
    if not 1 <= K <= L:
        raise ValueError(f"need 1 <= K <= L, got K={K}, L={L}")
    if len(xs) == 0:
        return np.empty((0, K), dtype=np.int64)
    d = pairwise(xs, landmarks)
    return np.argsort(d, axis=1, kind="stable")[:, :K] + 1


def state_cell(pairwise: Pairwise, landmarks: Sequence[Any], K: int, x: Any) -> tuple[int, ...]:
    return tuple(int(r) for r in state_cells(pairwise, landmarks, K, [x])[0])

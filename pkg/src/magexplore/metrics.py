"""Per-epoch QD and weighted-QD scores of a finished run."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .magnitude import SQRT_EPS, positive_cutoff, similarity, solve_weighting


@dataclass
class EpochScores:
    qd: np.ndarray
    wqd: np.ndarray
    num_evals: np.ndarray
    magnitude: np.ndarray
    detail: list[dict] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.qd)

    def rows(self):
        for j in range(len(self.qd)):
            yield j + 1, int(self.num_evals[j]), float(self.qd[j]), float(self.wqd[j]), float(self.magnitude[j])


def score_history(history, pairwise, normalization: tuple[float, float] | None = None) -> EpochScores:
    """Score every epoch of a history (entries with state, cell, birth, reign, objective).

    The elites of epoch ``j`` are the entries born by ``j`` whose reign
    reached ``j``. The scale is the positive cutoff of the final epoch's
    elites and is reused for the earlier epochs.
    """
    if not history:
        raise ValueError("empty history")
    births = np.array([e.birth for e in history])
    reigns = np.array([e.reign for e in history])
    objective = np.array([e.objective for e in history], dtype=float)
    cells = [tuple(e.cell) for e in history]
    if normalization is None:
        f_min, f_max = objective.min(), objective.max()
    else:
        f_min, f_max = normalization
    span = f_max - f_min
    span = span + (span == 0)

    cell_index: dict[tuple, list[int]] = {}
    for i, c in enumerate(cells):
        cell_index.setdefault(c, []).append(i)

    num_epochs = int(births.max())
    qd = np.full(num_epochs, np.nan)
    wqd = np.full(num_epochs, np.nan)
    num_evals = np.zeros(num_epochs, dtype=np.int64)
    mag = np.full(num_epochs, np.nan)
    detail: list[dict] = [{} for _ in range(num_epochs)]
    t = None
    for j in range(num_epochs, 0, -1):
        idx = np.flatnonzero((reigns >= j) & (births <= j))
        if idx.size == 0:
            raise ValueError(f"no elites at epoch {j}")
        states = [history[i].state for i in idx]
        d = pairwise(states, states)
        d = np.maximum(d, d.T)
        np.fill_diagonal(d, 0.0)
        if t is None:
            t = positive_cutoff(d) * (1 + SQRT_EPS) if len(idx) > 1 else 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            w = solve_weighting(similarity(d, t), scale=t).components
        if w.min() < 0:
            # the final-epoch scale need not be a cutoff for earlier elite sets
            warnings.warn(f"min(w) = {w.min():.3g} < 0: shifting weights", RuntimeWarning, stacklevel=2)
            w = w - w.min()
        f = objective[idx]
        quality = (f_max - f) / span
        qd[j - 1] = quality.sum()
        wqd[j - 1] = quality @ (w * len(w) / w.sum())
        num_evals[j - 1] = np.count_nonzero(births <= j)
        mag[j - 1] = w.sum()
        members = [cell_index[cells[i]] for i in idx]
        detail[j - 1] = dict(
            objective=f,
            w=w,
            cell_count=np.array([len(m) for m in members]),
            cell_max=np.array([objective[m].max() for m in members]),
            cell_min=np.array([objective[m].min() for m in members]),
            t=t,
        )
    return EpochScores(qd, wqd, num_evals, mag, detail)

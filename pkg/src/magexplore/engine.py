"""Go-Explore over a dissimilarity space, plus the lightweight baseline variant.

One epoch: refresh elites, weight them at the strong (or positive) cutoff,
form the go distribution, run as many expeditions as the coupon-collector
lower bound suggests, then evaluate every selected probe as one batch.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .coupon import expedition_count
from .discretize import LandmarkSet, default_state_count, generate_landmarks, self_dissimilarity, state_cells
from .magnitude import SingularWeightingError, Weighting, cutoff_weighting, max_diversity_distribution
from .problems import ProblemDefinition
from .surrogate import fit_linear_rbf

log = logging.getLogger(__name__)


class BandwidthError(RuntimeError):
    """The local generator never concentrated enough probes in the base cell.

    ``theta`` and ``probes`` hold the last attempt.
    """

    def __init__(self, message, theta=None, probes=None):
        super().__init__(message)
        self.theta = theta
        self.probes = probes


@dataclass
class EngineConfig:
    L: int = 15
    T: int | None = None
    K: int = 2
    M: int = 3000
    mu: int = 128
    seed: int = 0
    metric_is_euclidean: bool | None = None  # None: take it from the problem
    algorithm: str = "full"
    baseline_bandwidth: float | None = None
    baseline_effort: int = 10
    workers: int = 1
    variance_normalization: bool = False  # divide by variance instead of std

    def __post_init__(self):
        if self.T is None:
            self.T = default_state_count(self.L)

    def validate(self) -> None:
        if not (self.T >= self.L >= self.K >= 1):
            raise ValueError(f"need T >= L >= K >= 1, got T={self.T}, L={self.L}, K={self.K}")
        if self.M < self.T:
            raise ValueError(f"budget M={self.M} is smaller than T={self.T}")
        if self.mu < 1:
            raise ValueError("mu must be >= 1")
        if self.algorithm not in ("full", "baseline"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == "baseline" and not (self.baseline_bandwidth and self.baseline_bandwidth > 0):
            raise ValueError("baseline needs a positive baseline_bandwidth")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class HistoryEntry:
    state: Any
    cell: tuple
    birth: int
    reign: int
    objective: float


@dataclass
class RunResult:
    history: list[HistoryEntry]
    landmarks: LandmarkSet
    epochs: list[dict] = field(default_factory=list)

    @property
    def num_epochs(self) -> int:
        return max(e.birth for e in self.history)

    def elites(self) -> list[HistoryEntry]:
        last = self.num_epochs
        return [e for e in self.history if e.reign == last]


# pieces -----------------------------------------------------------------------


def quantile_normalize(phi) -> np.ndarray:
    """(phi - median) / (max - median), with a zero denominator replaced by 1."""
    phi = np.asarray(phi, dtype=float)
    med = np.median(phi)
    denom = phi.max() - med
    denom = denom + (denom == 0)
    return (phi - med) / denom


def go_distribution(w, f) -> np.ndarray:
    """Probabilities over elites, proportional to exp([log w] - [f]).

    Zero weights (from the post hoc shift) get probability zero; the
    quantile normalization of ``log w`` is taken over the finite entries.
    """
    w = np.asarray(w.components if isinstance(w, Weighting) else w, dtype=float)
    f = np.asarray(f, dtype=float)
    if len(w) != len(f) or len(w) == 0:
        raise ValueError("weighting and objectives must have equal nonzero length")
    if len(w) == 1:
        return np.ones(1)
    with np.errstate(divide="ignore"):
        logw = np.log(w / w.sum())
    finite = np.isfinite(logw)
    div = np.full(len(w), -np.inf)
    div[finite] = quantile_normalize(logw[finite])
    logits = div - quantile_normalize(f)
    logits -= logits[finite].max()
    p = np.exp(logits)
    return p / p.sum()


def sample_index(cdf: np.ndarray, u: float) -> int:
    """First index with u < cdf[index]."""
    return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)


def exploration_effort(f_minus: float, f_zero: float, mu0: float, mu: int) -> int:
    """ceil(min(max(1, 2^-(f0 - f-) mu0), mu)) on objectives normalized to [0, 1]."""
    return math.ceil(min(max(1.0, 2.0 ** -(f_zero - f_minus) * mu0), mu))


def pareto_domination(objectives) -> np.ndarray:
    """For each column j: max over k of min over rows of (a[:, j] - a[:, k])."""
    a = np.asarray(objectives, dtype=float)
    diff = a[:, :, None] - a[:, None, :]
    return diff.min(axis=0).max(axis=1)


def normalize_rows(a, variance: bool = False) -> np.ndarray:
    """Zero mean, unit variance per row; constant rows are only centered."""
    a = np.asarray(a, dtype=float)
    centered = a - a.mean(axis=1, keepdims=True)
    if a.shape[1] < 2:
        return centered
    spread = a.var(axis=1, ddof=1) if variance else a.std(axis=1, ddof=1)
    spread = np.where(spread > 0, spread, 1.0)
    return centered / spread[:, None]


def adapt_bandwidth(
    local_batch: Callable[[Any, float, int, np.random.Generator], list],
    x: Any,
    theta: float,
    base_cell: Sequence[int],
    cells_of: Callable[[list], np.ndarray],
    mu: int,
    rng: np.random.Generator,
    max_halvings: int = 60,
) -> tuple[float, list]:
    """Halve the bandwidth until at least a quarter of 2*mu probes share x's cell."""
    if not theta > 0:
        raise ValueError("initial bandwidth must be positive")
    n = 2 * mu
    base_cell = np.asarray(base_cell)
    for k in range(max_halvings + 1):
        if k:
            theta /= 2
        probes = local_batch(x, theta, n, rng)
        in_cell = np.all(cells_of(probes) == base_cell, axis=1)
        if np.count_nonzero(in_cell) >= n / 4:
            return theta, probes
    raise BandwidthError(f"no localization after {max_halvings} halvings", theta, probes)


# engine -------------------------------------------------------------------------


class _Run:
    """Mutable state of one run; history columns are kept as parallel lists."""

    def __init__(self, problem: ProblemDefinition, cfg: EngineConfig):
        cfg.validate()
        self.problem = problem
        self.cfg = cfg
        self.euclidean = problem.euclidean if cfg.metric_is_euclidean is None else cfg.metric_is_euclidean
        self.rng = np.random.default_rng(cfg.seed)
        self.pairwise = problem.pairwise_matrix
        self.states: list = []
        self.keys: list[bytes] = []
        self.cells = np.empty((0, cfg.K), dtype=np.int64)
        self.births: list[int] = []
        self.reign = np.empty(0, dtype=np.int64)
        self.objective = np.empty(0)
        self.members: dict[tuple, list[int]] = {}
        self.epoch = 1
        self.epochs: list[dict] = []

    def key(self, x) -> bytes:
        return np.ascontiguousarray(self.problem.encode(x)).tobytes()

    def cells_of(self, xs: list) -> np.ndarray:
        return state_cells(self.pairwise, self.landmark_states, self.cfg.K, xs)

    def evaluate(self, xs: list) -> np.ndarray:
        f = self.problem.objective
        if self.cfg.workers > 1 and len(xs) > 1:
            with ThreadPoolExecutor(self.cfg.workers) as pool:
                values = list(pool.map(f, xs))
        else:
            values = [f(x) for x in xs]
        return np.asarray(values, dtype=float)

    def commit(self, xs: list) -> None:
        """Evaluate a batch, append it to the history and refresh reigns."""
        values = self.evaluate(xs)
        cells = self.cells_of(xs)
        start = len(self.states)
        self.states.extend(xs)
        self.keys.extend(self.key(x) for x in xs)
        self.births.extend([self.epoch] * len(xs))
        self.cells = np.vstack([self.cells, cells])
        self.objective = np.concatenate([self.objective, values])
        self.reign = np.concatenate([self.reign, np.zeros(len(xs), dtype=np.int64)])
        for i, c in enumerate(map(tuple, cells.tolist())):
            self.members.setdefault(c, []).append(start + i)
        for idx in self.members.values():
            best = idx[int(np.argmin(self.objective[idx]))]
            self.reign[best] = self.epoch

    def start(self) -> None:
        cfg = self.cfg
        self.landmarks = generate_landmarks(
            self.pairwise, cfg.L, cfg.T, lambda i: self.problem.global_generator(self.rng)
        )
        self.landmark_states = self.landmarks.landmarks
        self.commit(list(self.landmarks.states))

    def elite_weighting(self, elite_states: list) -> tuple[np.ndarray, np.ndarray]:
        d = self_dissimilarity(self.pairwise, elite_states)
        if len(elite_states) == 1:
            return d, np.ones(1)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                w = cutoff_weighting(d, self.euclidean).components
        except SingularWeightingError:
            log.warning("elite weighting singular; using uniform weights")
            w = np.ones(len(elite_states))
        if w.sum() <= 0:
            w = np.ones(len(w))
        return d, w

    def run(self) -> RunResult:
        self.start()
        cfg = self.cfg
        stalled = 0
        while len(self.states) < cfg.M:
            elite_idx = np.flatnonzero(self.reign == self.epoch)
            self.epoch += 1
            before = len(self.states)
            if cfg.algorithm == "full":
                new, expeditions = self.full_epoch(elite_idx)
            else:
                new, expeditions = self.baseline_epoch(elite_idx)
            self.commit(new)
            self.epochs.append(dict(epoch=self.epoch, evaluations=len(self.states), expeditions=expeditions,
                                    elites=len(elite_idx)))
            log.info("epoch %d: |h| = %d, expeditions = %d, budget = %d",
                     self.epoch, len(self.states), expeditions, cfg.M)
            stalled = stalled + 1 if len(self.states) == before else 0
            if stalled >= 100:
                raise RuntimeError("no new states for 100 consecutive epochs")
        history = [
            HistoryEntry(x, tuple(int(r) for r in c), b, int(rg), float(f))
            for x, c, b, rg, f in zip(self.states, self.cells, self.births, self.reign, self.objective)
        ]
        return RunResult(history, self.landmarks, self.epochs)

    # full algorithm ------------------------------------------------------------

    def effort(self, in_base: list[int], gmin: float, gmax: float) -> int:
        births = np.asarray([self.births[i] for i in in_base])
        values = self.objective[in_base]
        seen = np.unique(births)
        one = births == seen[-1]
        two = births == seen[-2] if len(seen) > 1 else one
        denom = gmax - gmin
        denom = denom + (denom == 0)
        f_zero = np.min((values[one] - gmin) / denom)
        f_minus = np.min((values[two] - gmin) / denom)
        if self.epoch > 2:
            prior = int(np.count_nonzero(one))
        else:
            prior = math.ceil(math.sqrt(self.cfg.mu))
        return exploration_effort(f_minus, f_zero, prior, self.cfg.mu)

    def full_epoch(self, elite_idx: np.ndarray) -> tuple[list, int]:
        cfg = self.cfg
        elite_states = [self.states[i] for i in elite_idx]
        d_elite, w = self.elite_weighting(elite_states)
        p = go_distribution(w, self.objective[elite_idx])
        cdf = np.cumsum(p)
        b = expedition_count(p)
        gmin, gmax = self.objective.min(), self.objective.max()
        budget_left = cfg.M - len(self.states)
        new: list = []
        for _ in range(b):
            k = sample_index(cdf, self.rng.random())
            xi = int(elite_idx[k])
            x = self.states[xi]
            base_cell = self.cells[xi]
            in_base = self.members[tuple(base_cell.tolist())]
            effort = self.effort(in_base, gmin, gmax)

            to_x = self.pairwise([x], self.states)[0]
            num_nearest = min(len(self.states), math.ceil(cfg.mu / 2))
            nearest = np.argsort(to_x, kind="stable")[:num_nearest]
            near = sorted(set(in_base).union(nearest.tolist()))
            # one representative per distinct state; repeats would make d degenerate
            near_keys: dict[bytes, int] = {}
            for i in near:
                near_keys.setdefault(self.keys[i], i)
            near = list(near_keys.values())

            enc = np.asarray([self.problem.encode(self.states[i]) for i in near], dtype=float)
            interpolant = fit_linear_rbf(enc, self.objective[near])

            theta = float(d_elite[k].max())
            if theta <= 0:
                theta = float(to_x.max()) or 1.0
            try:
                _, probes = adapt_bandwidth(self.problem.local_batch, x, theta, base_cell, self.cells_of,
                                            cfg.mu, self.rng)
            except BandwidthError as exc:
                # e.g. a lattice cell holding no neighbor of x; plain halving would loop forever here
                log.warning("cell %s: %s; keeping the last probes", base_cell, exc)
                probes = exc.probes
            unique: dict[bytes, Any] = {}
            for q in probes:
                kq = self.key(q)
                if kq not in near_keys:
                    unique.setdefault(kq, q)
            probes = list(unique.values())
            if not probes:
                continue

            local = [self.states[i] for i in near] + probes
            d_local = self_dissimilarity(self.pairwise, local)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    w_local = cutoff_weighting(d_local, self.euclidean).components
            except SingularWeightingError:
                w_local = np.ones(len(local))
            probe_enc = np.asarray([self.problem.encode(q) for q in probes], dtype=float)
            f_est = np.concatenate([self.objective[near], interpolant(probe_enc)])
            alpha = normalize_rows(np.vstack([f_est, -w_local]), cfg.variance_normalization)
            dominated = pareto_domination(alpha)[len(near):]
            order = np.argsort(dominated, kind="stable")
            chosen = [probes[j] for j in order[: min(effort, len(probes))]]
            new.extend(chosen)
            if len(new) >= budget_left:
                new = new[:budget_left]
                break
        return new, b

    # baseline ----------------------------------------------------------------

    def baseline_epoch(self, elite_idx: np.ndarray) -> tuple[list, int]:
        cfg = self.cfg
        elite_states = [self.states[i] for i in elite_idx]
        _, w = self.elite_weighting(elite_states)
        p = max_diversity_distribution(w)
        cdf = np.cumsum(p)
        n = len(elite_idx)
        b = max(1, math.ceil(n * math.log(n)))
        budget_left = cfg.M - len(self.states)
        new: list = []
        for _ in range(b):
            x = elite_states[sample_index(cdf, self.rng.random())]
            new.extend(self.problem.local_batch(x, cfg.baseline_bandwidth, cfg.baseline_effort, self.rng))
            if len(new) >= budget_left:
                new = new[:budget_left]
                break
        return new, b


def run_go_explore(problem: ProblemDefinition, cfg: EngineConfig) -> RunResult:
    if cfg.algorithm != "full":
        cfg = EngineConfig(**{**cfg.__dict__, "algorithm": "full"})
    return _Run(problem, cfg).run()


def run_baseline(problem: ProblemDefinition, cfg: EngineConfig) -> RunResult:
    if cfg.algorithm != "baseline":
        cfg = EngineConfig(**{**cfg.__dict__, "algorithm": "baseline"})
    return _Run(problem, cfg).run()


def run(problem: ProblemDefinition, cfg: EngineConfig) -> RunResult:
    return _Run(problem, cfg).run()

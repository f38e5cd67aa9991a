"""Built-in problems: Rastrigin on R^N and Z^N, SK spin glass and LABS on F_2^N.

Binary states are 0/1 integer vectors; objectives map them to spins
``s = 2b - 1``. Every built-in dissimilarity is Euclidean distance on the
numeric encoding (for bits that is the square root of the Hamming distance),
so ``exp(-t d)`` is positive definite and the engine can use the cheaper
positive cutoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist


@dataclass
class ProblemDefinition:
    name: str
    objective: Callable[[Any], float]
    dissimilarity: Callable[[Any, Any], float]
    global_generator: Callable[[np.random.Generator], Any]
    local_generator: Callable[[Any, float, np.random.Generator], Any]
    encode: Callable[[Any], np.ndarray] = np.asarray
    decode: Callable[[Sequence], Any] = np.asarray
    pairwise: Callable[[Sequence, Sequence], np.ndarray] | None = None
    euclidean: bool = False
    params: dict = field(default_factory=dict)
    batched_local: bool = False  # local_generator accepts size=

    def local_batch(self, x, theta: float, n: int, rng: np.random.Generator) -> list:
        if self.batched_local:
            return list(self.local_generator(x, theta, rng, size=n))
        return [self.local_generator(x, theta, rng) for _ in range(n)]

    def pairwise_matrix(self, xs, ys) -> np.ndarray:
        if self.pairwise is not None:
            return self.pairwise(xs, ys)
        out = np.empty((len(xs), len(ys)))
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                out[i, j] = self.dissimilarity(x, y)
        return out


def _euclidean_pairwise(xs, ys) -> np.ndarray:
    return cdist(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))


def _euclidean(x, y) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


# objectives -----------------------------------------------------------------


def rastrigin(x, A: float = 10.0) -> float:
    x = np.asarray(x, dtype=float)
    return float(A * x.size + np.sum(x**2 - A * np.cos(2 * np.pi * x)))


def integer_rastrigin(x, scale: int, A: float = 10.0) -> float:
    if scale < 1:
        raise ValueError("scale must be a positive integer")
    return rastrigin(np.asarray(x, dtype=float) / scale, A)


@dataclass(frozen=True)
class SkInstance:
    N: int
    J: np.ndarray


def sk_instance(N: int, seed: int) -> SkInstance:
    """IID standard normal couplings on the upper triangle, mirrored, zero diagonal."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((N, N))
    J = np.triu(G, 1)
    J = J + J.T
    return SkInstance(N, J)


def _check_spins(s) -> np.ndarray:
    s = np.asarray(s)
    if not np.all(np.abs(s) == 1):
        raise ValueError("spin vector must have entries +1/-1")
    return s.astype(float)


def sk_energy(inst: SkInstance, s) -> float:
    s = _check_spins(s)
    return float(s @ inst.J @ s / math.sqrt(inst.N))


def labs_energy(s) -> float:
    """Bernasconi energy: sum of squared aperiodic autocorrelations."""
    s = _check_spins(s)
    n = len(s)
    if n < 2:
        raise ValueError("need N >= 2")
    r = np.correlate(s, s, mode="full")[n:]
    return float(np.sum(r**2))


def spins(b) -> np.ndarray:
    return 2 * np.asarray(b, dtype=np.int64) - 1


def binary_dissimilarity(b, b2) -> float:
    """Square root of the Hamming distance."""
    b, b2 = np.asarray(b), np.asarray(b2)
    if b.shape != b2.shape:
        raise ValueError("length mismatch")
    return math.sqrt(int(np.count_nonzero(b != b2)))


def hamming_figure_of_merit(num_elites: int, N: int) -> int:
    """Largest r with num_elites <= 2^N / |Hamming ball of radius r|."""
    if num_elites < 1 or N < 1:
        raise ValueError("need num_elites >= 1 and N >= 1")
    if num_elites > 2**N:
        raise ValueError("more elites than points in F_2^N")
    best = 0
    volume = 0
    for r in range(N + 1):
        volume += math.comb(N, r)
        if num_elites * volume <= 2**N:
            best = r
        else:
            break
    return best


# generators -----------------------------------------------------------------


# Each local generator takes an optional ``size``: with it, ``size`` probes are
# returned as rows of one array, drawn from the same random stream as ``size``
# consecutive single calls.


def gaussian_local_generator(x, theta: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    shape = x.shape if size is None else (size,) + x.shape
    return x + theta * rng.standard_normal(shape)


def rounded_gaussian_local_generator(x, theta: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Add a Gaussian step rounded away from zero in each coordinate."""
    x = np.asarray(x, dtype=np.int64)
    shape = x.shape if size is None else (size,) + x.shape
    delta = theta * rng.standard_normal(shape)
    step = np.sign(delta) * np.ceil(np.abs(delta))
    return x + step.astype(np.int64)


def flip_rate(theta: float, N: int) -> float:
    return min(theta**2 / N, 1.0)


def bernoulli_flip_generator(b, theta: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Flip each bit independently with probability ``min(theta^2 / N, 1)``."""
    b = np.asarray(b, dtype=np.int64)
    shape = b.shape if size is None else (size,) + b.shape
    flips = rng.random(shape) < flip_rate(theta, b.size)
    return np.where(flips, 1 - b, b)


def uniform_box_generator(N: int, low: float, high: float):
    def generate(rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(low, high, N)

    return generate


def uniform_bits_generator(N: int):
    def generate(rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, 2, N, dtype=np.int64)

    return generate


# registry -------------------------------------------------------------------


def make_rastrigin(N: int = 2, A: float = 10.0, low: float = -2.0, high: float = 3.0) -> ProblemDefinition:
    return ProblemDefinition(
        name="rastrigin",
        objective=lambda x: rastrigin(x, A),
        dissimilarity=_euclidean,
        global_generator=uniform_box_generator(N, low, high),
        local_generator=gaussian_local_generator,
        decode=lambda v: np.asarray(v, dtype=float),
        pairwise=_euclidean_pairwise,
        euclidean=True,
        batched_local=True,
        params=dict(N=N, A=A, low=low, high=high),
    )


def make_int_rastrigin(
    N: int = 2, scale: int = 100, A: float = 10.0, low: float = -2.0, high: float = 3.0
) -> ProblemDefinition:
    box = uniform_box_generator(N, scale * low, scale * high)

    def generate(rng):
        return np.rint(box(rng)).astype(np.int64)

    return ProblemDefinition(
        name="int-rastrigin",
        objective=lambda x: integer_rastrigin(x, scale, A),
        dissimilarity=_euclidean,
        global_generator=generate,
        local_generator=rounded_gaussian_local_generator,
        decode=lambda v: np.asarray(v, dtype=np.int64),
        pairwise=_euclidean_pairwise,
        euclidean=True,
        batched_local=True,
        params=dict(N=N, scale=scale, A=A, low=low, high=high),
    )


def _binary_problem(name, N, objective, params) -> ProblemDefinition:
    return ProblemDefinition(
        name=name,
        objective=objective,
        dissimilarity=binary_dissimilarity,
        global_generator=uniform_bits_generator(N),
        local_generator=bernoulli_flip_generator,
        decode=lambda v: np.asarray(v, dtype=np.int64),
        pairwise=_euclidean_pairwise,
        euclidean=True,
        batched_local=True,
        params=params,
    )


def make_sk(N: int = 20, instance_seed: int = 0) -> ProblemDefinition:
    inst = sk_instance(N, instance_seed)
    problem = _binary_problem("sk", N, lambda b: sk_energy(inst, spins(b)), dict(N=N, instance_seed=instance_seed))
    problem.params["instance"] = inst
    return problem


def make_labs(N: int = 16) -> ProblemDefinition:
    return _binary_problem("labs", N, lambda b: labs_energy(spins(b)), dict(N=N))


PROBLEMS: dict[str, Callable[..., ProblemDefinition]] = {
    "rastrigin": make_rastrigin,
    "int-rastrigin": make_int_rastrigin,
    "sk": make_sk,
    "labs": make_labs,
}


def make_problem(name: str, **params) -> ProblemDefinition:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory(**params)


def all_binary_states(N: int) -> np.ndarray:
    """Every 0/1 vector of length N, one per row, in counting order."""
    codes = np.arange(2**N, dtype=np.int64)
    return (codes[:, None] >> np.arange(N)) & 1


def sk_energies(inst: SkInstance, states: np.ndarray) -> np.ndarray:
    s = 2.0 * states - 1.0
    return np.einsum("ij,jk,ik->i", s, inst.J, s) / math.sqrt(inst.N)


def labs_energies(states: np.ndarray) -> np.ndarray:
    s = 2.0 * states - 1.0
    n = s.shape[1]
    total = np.zeros(len(s))
    for k in range(1, n):
        total += np.sum(s[:, :-k] * s[:, k:], axis=1) ** 2
    return total

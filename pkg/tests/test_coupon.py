import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magexplore.coupon import (
    expected_full_integral,
    expected_partial_exact,
    expedition_count,
    harmonic_lower_bound,
    partial_collection_bounds,
    simulate_partial,
)


def harmonic(n):
    return sum(1.0 / k for k in range(1, n + 1))


distributions = st.integers(2, 12).flatmap(
    lambda n: st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n)
).map(lambda v: np.array(v) / sum(v))


def test_exact_examples():
    assert expected_partial_exact([0.2, 0.3, 0.5], 1) == 1.0
    assert expected_partial_exact(np.full(4, 0.25), 4) == pytest.approx(25 / 3, rel=1e-12)


def test_exact_against_monte_carlo():
    p = np.array([0.5, 0.3, 0.2])
    mean, se = simulate_partial(p, 2, 1_000_000, np.random.default_rng(0))
    assert abs(expected_partial_exact(p, 2) - mean) < 3 * se


def test_two_type_closed_form():
    # collecting both of two types: 1/p + 1/q - 1
    for a in (0.1, 0.3, 0.5):
        assert expected_partial_exact([a, 1 - a], 2) == pytest.approx(1 / a + 1 / (1 - a) - 1, rel=1e-12)


def test_exact_rejects():
    with pytest.raises(ValueError):
        expected_partial_exact(np.full(17, 1 / 17), 3)
    with pytest.raises(ValueError):
        expected_partial_exact([0.5, 0.5, 0.0], 3)


def test_integral_examples():
    assert expected_full_integral([1.0]) == pytest.approx(1, rel=1e-3)
    assert expected_full_integral(np.full(4, 0.25)) == pytest.approx(25 / 3, rel=1e-3)
    assert expected_full_integral(np.full(16, 1 / 16)) == pytest.approx(16 * harmonic(16), rel=1e-3)
    assert 16 * harmonic(16) == pytest.approx(54.0917, abs=1e-4)
    with pytest.raises(ValueError):
        expected_full_integral([0.5, 0.5, 0.0])


@pytest.mark.parametrize("n", [4, 9, 16])
def test_uniform_is_harmonic(n):
    p = np.full(n, 1 / n)
    for m in range(1, n + 1):
        b = partial_collection_bounds(p, m, n)
        h = harmonic_lower_bound(n, m)
        assert h == pytest.approx(n * (harmonic(n) - harmonic(n - m)), rel=1e-12)
        assert abs(b.exact - h) < 1e-9 * h
        assert abs(b.lower - h) < 1e-9 * h
        sep = partial_collection_bounds(p, m, n, use_exact=False)
        assert abs(sep.lower - h) < 1e-9 * h


def test_full_collection_bounds_collapse():
    p = np.random.default_rng(1).dirichlet(np.ones(7))
    b = partial_collection_bounds(p, 7, 7)
    assert b.lower == b.upper == b.exact
    sep = partial_collection_bounds(p, 7, 7, use_exact=False)
    assert sep.lower == sep.upper
    assert sep.lower == pytest.approx(b.exact, rel=1e-3)


def test_sandwich_on_dirichlet_draws():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(4, 17))
        p = rng.dirichlet(np.ones(n))
        m = math.ceil(n / 2)
        b = partial_collection_bounds(p, m, n, use_exact=False)
        tol = 1e-9 * b.exact
        assert b.lower - tol <= b.exact <= b.upper + tol


def test_large_n_has_bounds_only():
    p = np.random.default_rng(3).dirichlet(np.ones(40))
    b = partial_collection_bounds(p, 20, 40)
    assert b.exact is None
    assert 0 < b.lower <= b.upper
    assert b.lower >= harmonic_lower_bound(40, 20)


def test_bounds_reject():
    with pytest.raises(ValueError):
        partial_collection_bounds([0.5, 0.5, 0.0], 3, 3)
    with pytest.raises(ValueError):
        partial_collection_bounds([0.5, 0.5], 0, 2)
    with pytest.raises(ValueError):
        partial_collection_bounds([0.5, 0.7], 1, 2)


def test_nearly_normalized_input_warns():
    with pytest.warns(RuntimeWarning):
        b = partial_collection_bounds([0.5, 0.5 + 1e-6], 2, 2)
    assert b.exact == pytest.approx(3, rel=1e-5)


@settings(max_examples=60, deadline=None)
@given(distributions)
def test_exact_increasing_in_m(p):
    values = [expected_partial_exact(p, m) for m in range(1, len(p) + 1)]
    assert np.all(np.diff(values) > 0)


@settings(max_examples=60, deadline=None)
@given(distributions, st.randoms(use_true_random=False))
def test_permutation_invariance(p, rnd):
    q = p.copy()
    rnd.shuffle(q)
    m = max(1, len(p) // 2)
    a = partial_collection_bounds(p, m, len(p), use_exact=False)
    b = partial_collection_bounds(q, m, len(p), use_exact=False)
    assert a.exact == pytest.approx(b.exact, rel=1e-10)
    assert a.lower == pytest.approx(b.lower, rel=1e-10)
    assert a.upper == pytest.approx(b.upper, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(distributions, st.integers(1, 16))
def test_sandwich_property(p, c):
    n = len(p)
    for m in range(1, n):
        b = partial_collection_bounds(p, m, c, use_exact=False)
        tol = 1e-9 * b.exact
        assert b.lower - tol <= b.exact <= b.upper + tol
        assert b.lower >= harmonic_lower_bound(n, m) * (1 - 1e-12)
    # full collection: both bounds are the quadrature value
    b = partial_collection_bounds(p, n, c, use_exact=False)
    assert b.lower == b.upper == pytest.approx(b.exact, rel=1e-3)


def test_monte_carlo_agreement_small_n():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(3, 11))
        p = rng.dirichlet(np.ones(n))
        m = int(rng.integers(2, n + 1))
        mean, se = simulate_partial(p, m, 100_000, rng)
        assert abs(expected_partial_exact(p, m) - mean) < 3 * se


def test_expedition_count():
    assert expedition_count(np.ones(1)) == 1
    n = 10
    assert expedition_count(np.full(n, 1 / n)) == math.ceil(harmonic_lower_bound(n, 5))
    skewed = np.array([0.91] + [0.01] * 9)
    assert expedition_count(skewed) > expedition_count(np.full(n, 1 / n))

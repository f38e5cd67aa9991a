import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magexplore.surrogate import evaluate, fit_linear_rbf

fits = st.tuples(st.integers(1, 50), st.integers(1, 30), st.integers(0, 2**32 - 1))


def random_fit(n, dim, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, dim)) * rng.uniform(0.1, 10)
    y = rng.standard_normal(n) * 100
    return x, y


def test_single_node_is_constant():
    phi = fit_linear_rbf([[1.0, 2.0]], [3.5])
    assert phi([1.0, 2.0]) == 3.5
    assert phi([10.0, -4.0]) == 3.5


def test_two_nodes_on_a_line():
    phi = fit_linear_rbf([0.0, 1.0], [0.0, 2.0])
    np.testing.assert_allclose(phi.coefficients, [2.0, 0.0])
    assert phi(0.0) == pytest.approx(0)
    assert phi(1.0) == pytest.approx(2)
    assert phi(0.5) == pytest.approx(1)


def test_duplicates_keep_first_value():
    phi = fit_linear_rbf([[0.0], [1.0], [0.0]], [1.0, 2.0, 99.0])
    assert len(phi.nodes) == 2
    assert phi([0.0]) == pytest.approx(1.0)


def test_singular_system_falls_back_to_least_squares(monkeypatch):
    # distinct nodes always give a nonsingular distance matrix, so force the failure
    def fail(*args):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setattr(np.linalg, "solve", fail)
    x, y = random_fit(6, 2, 3)
    phi = fit_linear_rbf(x, y)
    np.testing.assert_allclose(phi(x), y, atol=1e-8 * (1 + np.abs(y).max()))


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_linear_rbf([[0.0], [1.0]], [1.0])
    with pytest.raises(ValueError):
        fit_linear_rbf([[0.0], [np.nan]], [1.0, 2.0])
    with pytest.raises(ValueError):
        fit_linear_rbf(np.zeros((0, 2)), [])
    phi = fit_linear_rbf([[0.0, 0.0], [1.0, 1.0]], [0.0, 1.0])
    with pytest.raises(ValueError):
        evaluate(phi, [1.0, 2.0, 3.0])


def test_batch_matches_single():
    x, y = random_fit(20, 3, 0)
    phi = fit_linear_rbf(x, y)
    q = np.random.default_rng(1).standard_normal((5, 3))
    np.testing.assert_allclose(phi(q), [phi(r) for r in q])


@settings(max_examples=50, deadline=None)
@given(fits)
def test_interpolates_nodes(args):
    x, y = random_fit(*args)
    phi = fit_linear_rbf(x, y)
    assert np.all(np.abs(phi(x) - y) <= 1e-8 * (1 + np.abs(y)))


@settings(max_examples=30, deadline=None)
@given(fits, st.floats(-100, 100))
def test_translation_invariance(args, shift):
    x, y = random_fit(*args)
    q = np.random.default_rng(args[2] + 1).standard_normal((4, x.shape[1]))
    a = fit_linear_rbf(x, y)(q)
    b = fit_linear_rbf(x + shift, y)(q + shift)
    np.testing.assert_allclose(a, b, atol=1e-9 * (1 + np.abs(y).max()) * (1 + abs(shift)))


def test_linear_growth_far_away():
    x, y = random_fit(10, 2, 5)
    phi = fit_linear_rbf(x, y)
    direction = np.array([0.6, 0.8])
    far = [phi(r * direction) for r in (1e4, 2e4, 4e4)]
    assert far[2] - far[1] == pytest.approx(2 * (far[1] - far[0]), rel=1e-3)

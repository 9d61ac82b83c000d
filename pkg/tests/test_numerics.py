import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyres.numerics import (
    RankDeficientError,
    Rng,
    ShapeError,
    ridge_solve,
    scale_to_radius,
    spectral_radius,
    uniform_matrix,
)


def test_uniform_matrix_zero_sigma():
    assert np.array_equal(uniform_matrix(Rng(1), 4, 3, 0.0), np.zeros((4, 3)))


def test_uniform_matrix_deterministic():
    a = uniform_matrix(Rng(7), 5, 5, 0.3)
    b = uniform_matrix(Rng(7), 5, 5, 0.3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, uniform_matrix(Rng(8), 5, 5, 0.3))


def test_uniform_matrix_moments():
    m = uniform_matrix(Rng(3), 1000, 1000, 0.1)
    # LLN bound from the std of U[-0.1, 0.1]
    assert abs(m.mean()) < 3 * (0.1 / np.sqrt(3)) / 1e3
    assert np.abs(m).max() <= 0.1


def test_uniform_matrix_rejects_negative_sigma():
    with pytest.raises(ValueError):
        uniform_matrix(Rng(0), 2, 2, -1.0)


def test_rng_seed_range():
    Rng(2**64 - 1)
    with pytest.raises(ValueError):
        Rng(-1)


@pytest.mark.parametrize(
    "m, expected",
    [
        (np.diag([1.0, 2.0, 3.0]), 3.0),
        (np.array([[0.0, -1.0], [1.0, 0.0]]), 1.0),
        (np.zeros((3, 3)), 0.0),
        (np.array([[0.0, 1.0], [0.0, 0.0]]), 0.0),
    ],
)
def test_spectral_radius_simple(m, expected):
    assert spectral_radius(m) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_spectral_radius_non_square():
    with pytest.raises(ShapeError):
        spectral_radius(np.ones((2, 3)))


@pytest.mark.parametrize("seed", range(5))
def test_spectral_radius_matches_eigensolver(seed):
    m = uniform_matrix(Rng(seed), 10, 10, 1.0)
    oracle = np.abs(np.linalg.eigvals(m)).max()
    assert spectral_radius(m) == pytest.approx(oracle, rel=1e-4)


def test_scale_to_radius_diag():
    out = scale_to_radius(np.diag([1.0, 2.0]), 0.95)
    np.testing.assert_allclose(out, np.diag([0.475, 0.95]), rtol=1e-9)


def test_scale_to_radius_identity_target():
    m = uniform_matrix(Rng(2), 6, 6, 1.0)
    np.testing.assert_allclose(scale_to_radius(m, spectral_radius(m)), m, rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_scale_to_radius_small_target(seed):
    out = scale_to_radius(uniform_matrix(Rng(seed), 5, 5, 1.0), 0.01)
    assert 0.0099 <= np.abs(np.linalg.eigvals(out)).max() <= 0.0101


@given(st.integers(0, 2**32), st.integers(2, 12), st.floats(0.01, 2.0))
def test_scale_roundtrip_property(seed, n, target):
    m = uniform_matrix(Rng(seed), n, n, 1.0)
    out = scale_to_radius(m, target)
    assert spectral_radius(out) == pytest.approx(target, rel=1e-4)


def test_scale_to_radius_zero_matrix():
    with pytest.raises(ValueError):
        scale_to_radius(np.zeros((2, 2)), 1.0)


def test_ridge_exact_line():
    w = ridge_solve([[1.0], [2.0]], [[2.0], [4.0]], 0.0)
    np.testing.assert_allclose(w, [[2.0]], rtol=1e-12)


def test_ridge_hand_solved():
    # (sum xy) / (sum x^2 + beta) = 5 / 6 with the unscaled convention
    w = ridge_solve([[1.0], [2.0]], [[1.0], [2.0]], 1.0)
    assert w[0, 0] == pytest.approx(5 / 6, rel=1e-12)


def test_ridge_shrinks_monotonically(rng):
    phi = rng.normal(size=(30, 4))
    y = rng.normal(size=(30, 2))
    norms = [np.linalg.norm(ridge_solve(phi, y, b)) for b in 10.0 ** np.arange(-2, 10)]
    assert all(a > b for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-6


def test_ridge_interpolates_square(rng):
    phi = rng.normal(size=(6, 6))
    y = rng.normal(size=(6, 2))
    w = ridge_solve(phi, y, 0.0)
    exact = np.linalg.solve(phi, y)
    assert np.linalg.norm(w - exact) / np.linalg.norm(exact) < 1e-10


def test_ridge_rank_deficient_unregularized():
    phi = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(RankDeficientError):
        ridge_solve(phi, np.ones((3, 1)), 0.0)
    ridge_solve(phi, np.ones((3, 1)), 1e-3)


def test_ridge_shape_errors():
    with pytest.raises(ShapeError):
        ridge_solve(np.ones((3, 2)), np.ones((4, 1)), 0.1)


def test_ridge_optimality(rng):
    phi = rng.normal(size=(40, 5))
    y = rng.normal(size=(40, 3))
    beta = 0.3

    def objective(w):
        return np.sum((y - phi @ w) ** 2) + beta * np.sum(w**2)

    w = ridge_solve(phi, y, beta)
    base = objective(w)
    for _ in range(100):
        i, j = rng.integers(5), rng.integers(3)
        for eps in (1e-3, -1e-3):
            w2 = w.copy()
            w2[i, j] += eps
            assert objective(w2) >= base

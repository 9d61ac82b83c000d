"""Dense linear algebra helpers shared by the reservoir and readout code.

Random matrices come from :class:`Rng`, a thin wrapper over numpy's PCG64
bit generator. PCG64 is pinned: changing it would change every published
CSV, so don't.

Ridge convention: the regularizer enters the normal equations unscaled,
``(Phi^T Phi + beta I) W = Phi^T Y``, i.e. ``beta`` is *not* multiplied by
the number of samples.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "Rng",
    "ShapeError",
    "RankDeficientError",
    "uniform_matrix",
    "spectral_radius",
    "scale_to_radius",
    "ridge_solve",
    "POWER_ITERATIONS",
]

POWER_ITERATIONS = 2000


class ShapeError(ValueError):
    """Raised when array shapes do not match an operation's contract."""


class RankDeficientError(np.linalg.LinAlgError):
    """Raised when an unregularized least-squares problem is singular."""


class Rng:
    """Seeded random stream (PCG64).

    The same seed always yields the same stream, bit for bit.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def uniform(self, low, high, size):
        return self._gen.uniform(low, high, size)

    def standard_normal(self, size):
        return self._gen.standard_normal(size)

    def __repr__(self):
        return f"Rng(seed={self.seed})"


def uniform_matrix(rng: Rng, rows: int, cols: int, sigma: float) -> np.ndarray:
    """Matrix with i.i.d. entries uniform on ``[-sigma, sigma]``."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    # always draw so the stream advances identically regardless of sigma
    u = rng.uniform(-1.0, 1.0, (rows, cols))
    return sigma * u


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    return m


def spectral_radius(m, n_iter: int = POWER_ITERATIONS) -> float:
    """Largest eigenvalue modulus via the log-growth power method.

    Plain power iteration oscillates when the dominant eigenvalues form a
    complex pair. The mean one-step log growth of a renormalized vector
    still converges to ``log rho`` in that case, so that is what is
    averaged here (over the second half of the iterations).

    Returns 0 for a matrix that annihilates the iterate (e.g. zero or
    nilpotent matrices).
    """
    m = _as_square(m)
    n = m.shape[0]
    # deterministic, generic start vector
    v = np.cos(np.arange(1, n + 1) * 1.2345) + 1.0 / np.arange(1, n + 1)
    v /= np.linalg.norm(v)
    logs = np.empty(n_iter)
    for i in range(n_iter):
        w = m @ v
        g = np.linalg.norm(w)
        if g == 0.0 or not np.isfinite(g):
            return 0.0
        logs[i] = np.log(g)
        v = w / g
    return float(np.exp(logs[n_iter // 2 :].mean()))


def scale_to_radius(m, target: float) -> np.ndarray:
    """Rescale ``m`` so that its spectral radius equals ``target``."""
    m = _as_square(m)
    if target < 0:
        raise ValueError(f"target radius must be non-negative, got {target}")
    rho = spectral_radius(m)
    if rho == 0.0:
        raise ValueError("cannot rescale a matrix with zero spectral radius")
    return m * (target / rho)


def ridge_solve(features, targets, beta: float) -> np.ndarray:
    """Solve ``(Phi^T Phi + beta I) W = Phi^T Y`` for W.

    Args:
        features: (S, D) design matrix Phi.
        targets: (S, L) target matrix Y.
        beta: ridge parameter, not scaled by S.

    Returns:
        (D, L) weight matrix.

    Raises:
        RankDeficientError: ``beta == 0`` and ``Phi^T Phi`` is singular.
    """
    phi = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if phi.ndim != 2 or y.ndim != 2:
        raise ShapeError("features and targets must be 2-D")
    if phi.shape[0] != y.shape[0]:
        raise ShapeError(
            f"row mismatch: {phi.shape[0]} feature rows vs {y.shape[0]} target rows"
        )
    if phi.shape[0] < 1 or phi.shape[1] < 1:
        raise ShapeError("need at least one sample and one feature")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")

    gram = phi.T @ phi
    rhs = phi.T @ y
    d = gram.shape[0]
    gram[np.diag_indices(d)] += beta
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError(
            f"Phi^T Phi + beta*I is not positive definite (D={d}, beta={beta}); "
            "the feature matrix is rank deficient, use beta > 0"
        ) from exc
    w = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    if beta == 0.0:
        # Cholesky can squeak through on numerically singular Gram matrices
        diag = np.diag(factor[0])
        if diag.min() <= np.finfo(float).eps ** 0.5 * diag.max():
            raise RankDeficientError(
                f"Phi^T Phi is numerically singular (D={d}); use beta > 0"
            )
    return w

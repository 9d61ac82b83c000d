"""Echo state network: ``r_t = tanh(A r_{t-1} + B x_t)``."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .numerics import Rng, scale_to_radius, spectral_radius, uniform_matrix

__all__ = ["EsnConfig", "Esn", "build_esn", "update", "drive", "csis_distance"]

SIGMA_A = 1.0


@dataclass(frozen=True)
class EsnConfig:
    n: int
    k: int = 3
    spectral_radius: float = 0.95
    sigma_b: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError(f"n and k must be >= 1, got n={self.n}, k={self.k}")
        if self.spectral_radius < 0 or self.sigma_b < 0:
            raise ValueError("spectral_radius and sigma_b must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed out of range: {self.seed}")


@dataclass(frozen=True, eq=False)
class Esn:
    """Reservoir weights plus the current state.

    Treated as immutable: :func:`update` returns a new instance that shares
    ``a`` and ``b`` with the old one.
    """

    a: np.ndarray
    b: np.ndarray
    state: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.a.shape[0]
        if self.a.shape != (n, n) or self.b.ndim != 2 or self.b.shape[0] != n:
            raise ValueError(f"inconsistent shapes A{self.a.shape}, B{self.b.shape}")
        if self.state is None:
            object.__setattr__(self, "state", np.zeros(n))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def k(self) -> int:
        return self.b.shape[1]

    def with_state(self, state) -> "Esn":
        state = np.asarray(state, dtype=float)
        if state.shape != (self.n,):
            raise ValueError(f"state must have shape ({self.n},), got {state.shape}")
        return replace(self, state=state)


def build_esn(config: EsnConfig, rng: Rng | None = None) -> Esn:
    """Sample A and B (in that order) and rescale A to the configured radius."""
    if rng is None:
        rng = Rng(config.seed)
    for _ in range(2):
        a = uniform_matrix(rng, config.n, config.n, SIGMA_A)
        if spectral_radius(a) > 0.0:
            break
    else:
        raise RuntimeError("sampled recurrent matrix has zero spectral radius twice")
    a = scale_to_radius(a, config.spectral_radius)
    b = uniform_matrix(rng, config.n, config.k, config.sigma_b)
    return Esn(a, b)


def update(esn: Esn, x) -> Esn:
    """Advance the reservoir by one input sample."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (esn.k,):
        raise ValueError(f"input has dimension {x.size}, reservoir expects {esn.k}")
    return replace(esn, state=np.tanh(esn.a @ esn.state + esn.b @ x))


@numba.njit(cache=True)
def _drive(a, b, r, xs):
    out = np.empty((xs.shape[0], r.shape[0]))
    for t in range(xs.shape[0]):
        r = np.tanh(a @ r + b @ xs[t])
        out[t] = r
    return out


def drive(esn: Esn, inputs, washout: int = 0, r0=None) -> np.ndarray:
    """Drive the reservoir with ``inputs`` and drop the first ``washout`` states.

    Row ``i`` of the result is the state reached after consuming input
    ``washout + i``. Driving starts from ``r0`` (zero by default; pass
    ``esn.state`` to continue a run).
    """
    xs = np.ascontiguousarray(np.asarray(inputs, dtype=float))
    if xs.ndim == 1:
        xs = xs[:, None]
    if xs.shape[1] != esn.k:
        raise ValueError(f"inputs have dimension {xs.shape[1]}, reservoir expects {esn.k}")
    if washout < 0 or washout >= xs.shape[0]:
        raise ValueError(f"washout={washout} must be in [0, {xs.shape[0]})")
    r = np.zeros(esn.n) if r0 is None else np.asarray(r0, dtype=float).copy()
    if r.shape != (esn.n,):
        raise ValueError(f"r0 must have shape ({esn.n},)")
    states = _drive(esn.a, np.ascontiguousarray(esn.b), r, xs)
    return states[washout:]


def csis_distance(config: EsnConfig, inputs, r0, r0_alt) -> np.ndarray:
    """Distance between two copies of one reservoir driven by common input.

    Entry ``t`` is ``||r_{t+1} - r'_{t+1}||`` after the copies, started at
    ``r0`` and ``r0_alt``, have consumed ``t + 1`` inputs. Decay to zero
    means the reservoir has forgotten its initial condition.
    """
    esn = build_esn(config)
    r0 = np.asarray(r0, dtype=float)
    r0_alt = np.asarray(r0_alt, dtype=float)
    if r0.shape != (esn.n,) or r0_alt.shape != (esn.n,):
        raise ValueError(f"initial states must have shape ({esn.n},)")
    s1 = drive(esn, inputs, 0, r0)
    s2 = drive(esn, inputs, 0, r0_alt)
    return np.linalg.norm(s1 - s2, axis=1)

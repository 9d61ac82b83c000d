"""Target dynamical systems, RK4 flow maps and Lyapunov exponents.

Vector fields are numba-jitted functions ``f(x) -> dx/dt`` on 1-D float
arrays; the integration kernels take them as first-class arguments so a
new system only needs a jitted field. Plain Python fields also work, just
slower.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

__all__ = [
    "BlowUpError",
    "OdeSystem",
    "FlowMap",
    "Trajectory",
    "lorenz",
    "rossler",
    "linear_decay",
    "rk4_step",
    "flow",
    "flow_batch",
    "generate_trajectory",
    "max_lyapunov",
    "DEFAULT_H",
    "DEFAULT_X0",
    "DEFAULT_DISCARD_TIME",
]

DEFAULT_H = 0.01
DEFAULT_X0 = (1.0, 1.0, 1.0)
DEFAULT_DISCARD_TIME = 10.0

LORENZ_SIGMA = 10.0
LORENZ_RHO = 28.0
LORENZ_BETA = 8.0 / 3.0

ROSSLER_A = 0.2
ROSSLER_B = 0.2
ROSSLER_C = 5.7


class BlowUpError(FloatingPointError):
    """Integration or closed-loop iteration produced non-finite values."""


@numba.njit(cache=True)
def _lorenz_field(x):
    out = np.empty(3)
    out[0] = LORENZ_SIGMA * (x[1] - x[0])
    out[1] = LORENZ_RHO * x[0] - x[1] - x[0] * x[2]
    out[2] = x[0] * x[1] - LORENZ_BETA * x[2]
    return out


@numba.njit(cache=True)
def _rossler_field(x):
    out = np.empty(3)
    out[0] = -x[1] - x[2]
    out[1] = x[0] + ROSSLER_A * x[1]
    out[2] = ROSSLER_B + x[2] * (x[0] - ROSSLER_C)
    return out


@numba.njit(cache=True)
def _decay_field(x):
    return -x


@dataclass(frozen=True)
class OdeSystem:
    """Autonomous ODE ``dx/dt = vector_field(x)`` on R^dimension."""

    name: str
    dimension: int
    vector_field: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    @property
    def jitted(self) -> bool:
        return isinstance(self.vector_field, numba.core.registry.CPUDispatcher)

    def __call__(self, x) -> np.ndarray:
        out = np.asarray(self.vector_field(np.asarray(x, dtype=float)), dtype=float)
        if out.shape != (self.dimension,):
            raise ValueError(
                f"{self.name}: vector field returned shape {out.shape}, "
                f"expected ({self.dimension},)"
            )
        return out


def lorenz() -> OdeSystem:
    """Lorenz-63 with sigma=10, rho=28, beta=8/3."""
    return OdeSystem("lorenz", 3, _lorenz_field)


def rossler() -> OdeSystem:
    """Rossler system with the classical chaotic parameters a=b=0.2, c=5.7."""
    return OdeSystem("rossler", 3, _rossler_field)


def linear_decay(dimension: int = 1) -> OdeSystem:
    """``dx/dt = -x``; every Lyapunov exponent equals -1."""
    return OdeSystem(f"decay{dimension}", dimension, _decay_field)


SYSTEMS = {"lorenz": lorenz, "rossler": rossler}


def get_system(name: str) -> OdeSystem:
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise ValueError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None


# -- integration kernels ---------------------------------------------------


@numba.njit(cache=True)
def _rk4(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_py(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@numba.njit(cache=True)
def _advance(f, x, h, n):
    for _ in range(n):
        x = _rk4(f, x, h)
    return x


@numba.njit(cache=True)
def _sample(f, x, h, substeps, n_samples):
    out = np.empty((n_samples, x.shape[0]))
    out[0] = x
    for i in range(1, n_samples):
        for _ in range(substeps):
            x = _rk4(f, x, h)
        out[i] = x
    return out


@numba.njit(cache=True)
def _advance_rows(f, xs, h, n):
    out = np.empty_like(xs)
    for i in range(xs.shape[0]):
        x = xs[i].copy()
        for _ in range(n):
            x = _rk4(f, x, h)
        out[i] = x
    return out


@numba.njit(cache=True)
def _benettin(f, x, h, n_renorm, steps_per_renorm, d0):
    k = x.shape[0]
    y = x.copy()
    for j in range(k):
        y[j] += d0 / math.sqrt(k)
    total = 0.0
    for _ in range(n_renorm):
        for _ in range(steps_per_renorm):
            x = _rk4(f, x, h)
            y = _rk4(f, y, h)
        d = 0.0
        for j in range(k):
            d += (y[j] - x[j]) ** 2
        d = math.sqrt(d)
        if d == 0.0 or not math.isfinite(d):
            return -np.inf if d == 0.0 else np.nan
        total += math.log(d / d0)
        y = x + (y - x) * (d0 / d)
    return total


def _benettin_py(f, x, h, n_renorm, steps_per_renorm, d0):
    y = x + d0 / math.sqrt(x.shape[0])
    total = 0.0
    for _ in range(n_renorm):
        x = _advance_py(f, x, h, steps_per_renorm)
        y = _advance_py(f, y, h, steps_per_renorm)
        d = float(np.linalg.norm(y - x))
        if d == 0.0 or not math.isfinite(d):
            return -np.inf if d == 0.0 else np.nan
        total += math.log(d / d0)
        y = x + (y - x) * (d0 / d)
    return total


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise BlowUpError(f"{what} produced non-finite values")
    return x


def _as_state(system: OdeSystem, x) -> np.ndarray:
    x = np.array(x, dtype=float).reshape(-1)
    if x.shape != (system.dimension,):
        raise ValueError(
            f"{system.name}: state has dimension {x.size}, expected {system.dimension}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("state must be finite")
    return x


def rk4_step(system: OdeSystem, x, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of size ``h``."""
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = _as_state(system, x)
    step = _rk4 if system.jitted else _rk4_py
    return _check_finite(step(system.vector_field, x, float(h)), f"{system.name} RK4 step")


@dataclass(frozen=True)
class FlowMap:
    """Time-``tau`` map of ``system`` built from ``substeps`` RK4 steps of size ``h``."""

    system: OdeSystem
    tau: float
    h: float = DEFAULT_H
    substeps: int = field(init=False)

    def __post_init__(self):
        if not (self.tau > 0 and self.h > 0):
            raise ValueError("tau and h must be positive")
        n = round(self.tau / self.h)
        if n < 1 or abs(n * self.h - self.tau) > 1e-9 * self.tau:
            raise ValueError(f"tau={self.tau} is not an integer multiple of h={self.h}")
        object.__setattr__(self, "substeps", int(n))

    def __call__(self, x) -> np.ndarray:
        return flow(self, x)


def _advance_py(f, x, h, n):
    for _ in range(n):
        x = _rk4_py(f, x, h)
    return x


def _integrate(system, x, h, n):
    if system.jitted:
        return _advance(system.vector_field, x, h, n)
    return _advance_py(system.vector_field, x, h, n)


def flow(phi: FlowMap, x) -> np.ndarray:
    """Apply the flow map to a single state."""
    x = _as_state(phi.system, x)
    return _check_finite(
        _integrate(phi.system, x, phi.h, phi.substeps), f"{phi.system.name} flow"
    )


def flow_batch(phi: FlowMap, xs) -> np.ndarray:
    """Apply the flow map to every row of ``xs`` (shape ``(M, K)``)."""
    xs = np.ascontiguousarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != phi.system.dimension:
        raise ValueError(f"expected shape (M, {phi.system.dimension}), got {xs.shape}")
    if phi.system.jitted:
        out = _advance_rows(phi.system.vector_field, xs, phi.h, phi.substeps)
    else:
        out = np.array([_advance_py(phi.system.vector_field, x, phi.h, phi.substeps) for x in xs])
        out = out.reshape(xs.shape)
    return _check_finite(out, f"{phi.system.name} flow")


class Trajectory:
    """States sampled every ``tau`` time units, stored as a ``(T, K)`` array."""

    def __init__(self, data, tau: float):
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ValueError(f"trajectory data must be 2-D, got shape {data.shape}")
        self.data = data
        self.tau = float(tau)

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Trajectory(self.data[idx], self.tau)
        return self.data[idx]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @property
    def dimension(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.tau

    def __repr__(self):
        return f"Trajectory(len={len(self)}, dim={self.dimension}, tau={self.tau})"


def generate_trajectory(
    phi: FlowMap, x0=DEFAULT_X0, discard_time: float = DEFAULT_DISCARD_TIME, n_samples: int = 1
) -> Trajectory:
    """Integrate past a transient, then record ``n_samples`` states ``tau`` apart.

    ``discard_time`` is rounded to a whole number of RK4 steps.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if discard_time < 0:
        raise ValueError("discard_time must be non-negative")
    system = phi.system
    x = _as_state(system, x0)
    n_discard = int(round(discard_time / phi.h))
    x = _integrate(system, x, phi.h, n_discard)
    if system.jitted:
        data = _sample(system.vector_field, x, phi.h, phi.substeps, int(n_samples))
    else:
        data = np.empty((n_samples, system.dimension))
        data[0] = x
        for i in range(1, n_samples):
            x = _advance_py(system.vector_field, x, phi.h, phi.substeps)
            data[i] = x
    return Trajectory(_check_finite(data, f"{system.name} trajectory"), phi.tau)


def max_lyapunov(
    system: OdeSystem,
    x0=DEFAULT_X0,
    horizon: float = 2000.0,
    *,
    h: float = DEFAULT_H,
    renorm_interval: float = 0.1,
    separation: float = 1e-8,
    transient: float = DEFAULT_DISCARD_TIME,
) -> float:
    """Maximal Lyapunov exponent by Benettin's two-trajectory method.

    A companion orbit starts ``separation`` away from the reference; every
    ``renorm_interval`` time units the log stretch is accumulated and the
    separation is pulled back to ``separation``. The reference orbit first
    runs for ``transient`` time units to settle onto the attractor.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    steps = round(renorm_interval / h)
    if steps < 1 or abs(steps * h - renorm_interval) > 1e-9:
        raise ValueError("renorm_interval must be a multiple of h")
    n_renorm = max(1, int(round(horizon / renorm_interval)))
    x = _integrate(system, _as_state(system, x0), h, int(round(transient / h)))
    f = system.vector_field
    if system.jitted:
        total = _benettin(f, x, h, n_renorm, steps, separation)
    else:
        total = _benettin_py(f, x, h, n_renorm, steps, separation)
    if not np.isfinite(total):
        if total == -np.inf:
            return -np.inf
        raise BlowUpError("Lyapunov estimate diverged")
    return float(total / (n_renorm * steps * h))

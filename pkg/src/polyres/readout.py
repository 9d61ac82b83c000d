"""Polynomial readouts over reservoir states and the closed-loop map.

Feature ordering (frozen, tag ``"cwr-lex"``)::

    [1,
     r_0, ..., r_{n-1},
     r_j r_k      for j <= k       in lexicographic order,
     r_j r_k r_l  for j <= k <= l  in lexicographic order]

truncated after the requested degree. Each unordered monomial appears once,
so lower-degree feature vectors are prefixes of higher-degree ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

import numba
import numpy as np

from .dynamics import BlowUpError, Trajectory
from .numerics import ShapeError, ridge_solve
from .reservoir import Esn, update

__all__ = [
    "DEGREES",
    "ORDERING",
    "BLOWUP_LIMIT",
    "feature_dim",
    "features",
    "PolyReadout",
    "train",
    "predict",
    "AutonomousEsn",
    "autonomous_step",
    "closed_loop_run",
    "closed_loop_orbit",
]

DEGREES = (1, 2, 3)
ORDERING = "cwr-lex"
BLOWUP_LIMIT = 1e3


def _check_degree(degree) -> int:
    if degree not in DEGREES:
        raise ValueError(f"degree must be one of {DEGREES}, got {degree!r}")
    return int(degree)


def feature_dim(n: int, degree: int) -> int:
    """Number of monomials of total degree <= ``degree`` in ``n`` variables."""
    degree = _check_degree(degree)
    if n < 1:
        raise ValueError("n must be >= 1")
    return sum(comb(n + p - 1, p) for p in range(degree + 1))


@lru_cache(maxsize=None)
def _monomial_index(n: int, p: int) -> np.ndarray:
    idx = np.array(list(combinations_with_replacement(range(n), p)), dtype=np.int64)
    return idx.reshape(-1, p)


def features(r, degree: int) -> np.ndarray:
    """Monomial features of one state ``(n,)`` or a batch ``(S, n)``."""
    degree = _check_degree(degree)
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    rs = np.atleast_2d(r)
    n = rs.shape[1]
    blocks = [np.ones((rs.shape[0], 1)), rs]
    for p in range(2, degree + 1):
        idx = _monomial_index(n, p)
        blocks.append(np.prod(rs[:, idx], axis=2))
    out = np.concatenate(blocks, axis=1)
    return out[0] if single else out


@numba.njit(cache=True)
def _features_one(r, degree, idx2, idx3, out):
    n = r.shape[0]
    out[0] = 1.0
    for j in range(n):
        out[1 + j] = r[j]
    pos = 1 + n
    if degree >= 2:
        for m in range(idx2.shape[0]):
            out[pos + m] = r[idx2[m, 0]] * r[idx2[m, 1]]
        pos += idx2.shape[0]
    if degree >= 3:
        for m in range(idx3.shape[0]):
            out[pos + m] = r[idx3[m, 0]] * r[idx3[m, 1]] * r[idx3[m, 2]]


@dataclass(frozen=True, eq=False)
class PolyReadout:
    """Trained polynomial readout; ``weights`` has shape ``(feature_dim(n, degree), l)``."""

    degree: int
    n: int
    weights: np.ndarray

    def __post_init__(self):
        _check_degree(self.degree)
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != feature_dim(self.n, self.degree):
            raise ShapeError(
                f"weights shape {w.shape} does not match feature_dim"
                f"({self.n}, {self.degree}) = {feature_dim(self.n, self.degree)}"
            )
        object.__setattr__(self, "weights", w)

    @property
    def l(self) -> int:  # noqa: E743
        return self.weights.shape[1]

    @property
    def bias(self) -> np.ndarray:
        return self.weights[0]

    @property
    def linear(self) -> np.ndarray:
        """Linear weights as an ``(l, n)`` matrix."""
        return self.weights[1 : 1 + self.n].T

    def quadratic_tensor(self) -> np.ndarray:
        """Symmetric ``(l, n, n)`` tensor Q with ``sum_jk Q_ijk r_j r_k`` equal to the quadratic part.

        Off-diagonal monomial weights are split equally between ``(j, k)``
        and ``(k, j)``.
        """
        if self.degree < 2:
            raise ValueError("readout has no quadratic part")
        idx = _monomial_index(self.n, 2)
        w2 = self.weights[1 + self.n : 1 + self.n + len(idx)]
        q = np.zeros((self.l, self.n, self.n))
        for m, (j, k) in enumerate(idx):
            if j == k:
                q[:, j, j] = w2[m]
            else:
                q[:, j, k] = q[:, k, j] = 0.5 * w2[m]
        return q

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "n": self.n,
            "l": self.l,
            "ordering": ORDERING,
            "weights": self.weights.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolyReadout":
        if d.get("ordering") != ORDERING:
            raise ValueError(f"unsupported feature ordering {d.get('ordering')!r}")
        w = np.asarray(d["weights"], dtype=float).reshape(-1, int(d["l"]))
        return cls(int(d["degree"]), int(d["n"]), w)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "PolyReadout":
        return cls.from_dict(json.loads(s))


def train(states, targets, degree: int, beta: float) -> PolyReadout:
    """Fit readout weights by ridge regression on monomial features."""
    states = np.asarray(states, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    if states.ndim != 2:
        raise ShapeError(f"states must be 2-D (S, n), got {states.shape}")
    if states.shape[0] != targets.shape[0]:
        raise ShapeError(
            f"{states.shape[0]} states but {targets.shape[0]} targets"
        )
    phi = features(states, degree)
    return PolyReadout(degree, states.shape[1], ridge_solve(phi, targets, beta))


def predict(readout: PolyReadout, r) -> np.ndarray:
    """Readout output for one state ``(n,)`` or a batch ``(S, n)``."""
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != readout.n:
        raise ShapeError(f"state dimension {r.shape[-1]} != readout n {readout.n}")
    return features(r, readout.degree) @ readout.weights


@dataclass(frozen=True, eq=False)
class AutonomousEsn:
    """Reservoir whose readout output is fed back as its next input."""

    esn: Esn
    readout: PolyReadout

    def __post_init__(self):
        if self.readout.l != self.esn.k:
            raise ShapeError(
                f"readout emits {self.readout.l} outputs but reservoir takes {self.esn.k} inputs"
            )
        if self.readout.n != self.esn.n:
            raise ShapeError("readout and reservoir sizes differ")

    @property
    def state(self) -> np.ndarray:
        return self.esn.state

    def with_state(self, state) -> "AutonomousEsn":
        return replace(self, esn=self.esn.with_state(state))


def _guard(y, step):
    if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > BLOWUP_LIMIT:
        raise BlowUpError(f"closed loop diverged at step {step}: output {y}")


def autonomous_step(sys: AutonomousEsn) -> tuple[AutonomousEsn, np.ndarray]:
    """One step of the closed-loop map. Returns the new system and the emitted output."""
    y = predict(sys.readout, sys.esn.state)
    _guard(y, 0)
    return replace(sys, esn=update(sys.esn, y)), y


@numba.njit(cache=True)
def _closed_loop(a, b, w, degree, idx2, idx3, r, n_steps, limit):
    n = r.shape[0]
    outputs = np.empty((n_steps, w.shape[1]))
    states = np.empty((n_steps, n))
    phi = np.empty(w.shape[0])
    for t in range(n_steps):
        _features_one(r, degree, idx2, idx3, phi)
        y = phi @ w
        for i in range(y.shape[0]):
            if not np.isfinite(y[i]) or abs(y[i]) > limit:
                return outputs, states, t
        outputs[t] = y
        r = np.tanh(a @ r + b @ y)
        states[t] = r
    return outputs, states, -1


def closed_loop_orbit(sys: AutonomousEsn, n_steps: int, partial: bool = False):
    """Iterate the closed loop, returning ``(outputs, states, final_system)``.

    ``outputs[t]`` is the readout of the state *before* step ``t`` and
    ``states[t]`` the state after it, so ``states[t-1]`` maps to
    ``outputs[t]``.

    With ``partial=True`` a divergence truncates the arrays at the failing
    step instead of raising.

    Raises:
        BlowUpError: an output left the ``BLOWUP_LIMIT`` box or became
            non-finite; the message carries the step index.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    ro = sys.readout
    n = ro.n
    idx2 = _monomial_index(n, 2) if ro.degree >= 2 else np.zeros((0, 2), np.int64)
    idx3 = _monomial_index(n, 3) if ro.degree >= 3 else np.zeros((0, 3), np.int64)
    outputs, states, fail = _closed_loop(
        sys.esn.a,
        np.ascontiguousarray(sys.esn.b),
        np.ascontiguousarray(ro.weights),
        ro.degree,
        idx2,
        idx3,
        sys.esn.state.astype(float).copy(),
        int(n_steps),
        BLOWUP_LIMIT,
    )
    if fail >= 0:
        if not partial:
            raise BlowUpError(f"closed loop diverged at step {fail}")
        outputs, states = outputs[:fail], states[:fail]
    final = sys.with_state(states[-1]) if len(states) else sys
    return outputs, states, final


def closed_loop_run(sys: AutonomousEsn, n_steps: int, tau: float = 1.0) -> Trajectory:
    """Outputs of ``n_steps`` autonomous steps, as a trajectory sampled every ``tau``."""
    outputs, _, _ = closed_loop_orbit(sys, n_steps)
    return Trajectory(outputs.reshape(n_steps, sys.readout.l), tau)

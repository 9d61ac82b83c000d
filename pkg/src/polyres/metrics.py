"""Evaluation metrics: RMSE, conjugacy error, histogram PDFs, KL divergence."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Callable, Optional

import numpy as np

from .dynamics import FlowMap, flow, flow_batch
from .readout import AutonomousEsn, PolyReadout, closed_loop_orbit, predict
from .reservoir import Esn

__all__ = [
    "Histogram",
    "RunMetrics",
    "rmse",
    "conjugacy_error",
    "orbit_conjugacy_errors",
    "conjugacy_errors_generic",
    "mce",
    "histogram_pdf",
    "kl_divergence",
    "valid_prediction_time",
    "KL_FLOOR",
    "VALID_TIME_THRESHOLD",
]

KL_FLOOR = 1e-12
VALID_TIME_THRESHOLD = 0.4


def _pair(targets, predictions):
    y = np.asarray(targets, dtype=float)
    yh = np.asarray(predictions, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if yh.ndim == 1:
        yh = yh[:, None]
    if y.shape != yh.shape:
        raise ValueError(f"shape mismatch: targets {y.shape} vs predictions {yh.shape}")
    if y.shape[0] < 1:
        raise ValueError("need at least one sample")
    return y, yh


def rmse(targets, predictions) -> float:
    """``sqrt(mean_t ||y_t - yhat_t||^2)``."""
    y, yh = _pair(targets, predictions)
    return float(np.sqrt(np.mean(np.sum((y - yh) ** 2, axis=1))))


def _g(esn: Esn, readout: PolyReadout, r):
    return np.tanh(esn.a @ r + esn.b @ predict(readout, r))


def conjugacy_error(phi: FlowMap, readout: PolyReadout, esn: Esn, r) -> float:
    """``||phi(h(r)) - h(G(r))||`` with ``h`` the readout and ``G`` the closed-loop map."""
    r = np.asarray(r, dtype=float)
    if r.shape != (esn.n,):
        raise ValueError(f"state must have shape ({esn.n},)")
    a = flow(phi, predict(readout, r))
    b = predict(readout, _g(esn, readout, r))
    return float(np.linalg.norm(a - b))


def conjugacy_errors_generic(
    phi: Callable, h: Callable, g: Callable, r0, n_steps: int
) -> np.ndarray:
    """Local conjugacy errors along the orbit of an arbitrary map ``g``.

    Reference implementation with plain callables, used for mock
    dynamics and as a cross-check of the vectorized ESN path.
    """
    r = np.asarray(r0, dtype=float)
    out = np.empty(n_steps)
    for t in range(n_steps):
        r_next = g(r)
        out[t] = np.linalg.norm(np.asarray(phi(h(r))) - np.asarray(h(r_next)))
        r = r_next
    return out


def orbit_conjugacy_errors(phi: FlowMap, sys: AutonomousEsn, n_steps: int):
    """Local conjugacy errors along ``n_steps`` of the closed-loop orbit.

    Along the orbit ``G(r_t) = r_{t+1}``, so the error at step ``t`` is
    ``||phi(yhat_t) - yhat_{t+1}||``.

    Returns:
        (errors, outputs): ``errors`` has length ``n_steps``; ``outputs``
        holds the ``n_steps`` emitted readouts ``yhat_t``.

    Raises:
        BlowUpError: the orbit diverged.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    outputs, _, _ = closed_loop_orbit(sys, n_steps + 1)
    advanced = flow_batch(phi, outputs[:-1])
    errors = np.linalg.norm(advanced - outputs[1:], axis=1)
    return errors, outputs[:-1]


def mce(phi: FlowMap, sys: AutonomousEsn, n_steps: int) -> float:
    """Mean conjugacy error over ``n_steps`` closed-loop steps."""
    errors, _ = orbit_conjugacy_errors(phi, sys, n_steps)
    return float(errors.mean())


@dataclass(frozen=True, eq=False)
class Histogram:
    lo: float
    hi: float
    mass: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.mass.size

    @property
    def bin_width(self) -> float:
        return (self.hi - self.lo) / self.n_bins

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.n_bins) + 0.5) * self.bin_width

    @property
    def density(self) -> np.ndarray:
        return self.mass / self.bin_width


def histogram_pdf(samples, lo: float, hi: float, n_bins: int) -> Histogram:
    """Normalized histogram on ``n_bins`` uniform bins over ``[lo, hi]``.

    Samples outside the range are clipped into the end bins.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    if n_bins < 1 or not hi > lo:
        raise ValueError("need n_bins >= 1 and hi > lo")
    idx = np.floor((x - lo) / (hi - lo) * n_bins)
    idx = np.clip(np.nan_to_num(idx, nan=0.0), 0, n_bins - 1).astype(np.int64)
    counts = np.bincount(idx, minlength=n_bins)
    return Histogram(float(lo), float(hi), counts / counts.sum())


def kl_divergence(p: Histogram, q: Histogram) -> float:
    """``sum_i p_i ln(p_i / q_i)`` over bins with ``p_i > 0``.

    ``q`` is floored at ``KL_FLOOR`` and renormalized first, which keeps the
    result finite (at most about ``ln(1/KL_FLOOR)``) when ``q`` misses
    bins that ``p`` occupies.
    """
    if (p.lo, p.hi, p.n_bins) != (q.lo, q.hi, q.n_bins):
        raise ValueError("histograms use different binnings")
    qq = np.maximum(q.mass, KL_FLOOR)
    qq = qq / qq.sum()
    m = p.mass > 0
    return float(np.sum(p.mass[m] * np.log(p.mass[m] / qq[m])))


def valid_prediction_time(
    targets, predictions, threshold_fraction: float = VALID_TIME_THRESHOLD, tau: float | None = None
) -> float:
    """Time until ``||y_t - yhat_t||`` first exceeds ``threshold_fraction`` times the attractor scale.

    The attractor scale is the mean distance of the targets from their
    mean. The result counts whole valid steps times ``tau``; if the error
    never crosses the threshold the full horizon is returned. ``tau`` is
    taken from ``targets`` when it is a Trajectory.
    """
    if threshold_fraction <= 0:
        raise ValueError("threshold_fraction must be positive")
    if tau is None:
        tau = getattr(targets, "tau", 1.0)
    y, yh = _pair(targets, predictions)
    scale = np.mean(np.linalg.norm(y - y.mean(axis=0), axis=1))
    err = np.linalg.norm(y - yh, axis=1)
    over = np.flatnonzero(err > threshold_fraction * scale)
    n_valid = over[0] if over.size else len(err)
    return float(n_valid * tau)


@dataclass
class RunMetrics:
    """Metrics for one realization; ``None`` marks a value that is absent (e.g. diverged run)."""

    rmse: Optional[float] = None
    mce: Optional[float] = None
    kld: Optional[float] = None
    valid_time: Optional[float] = None
    diverged: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

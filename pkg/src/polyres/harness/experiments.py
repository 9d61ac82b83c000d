"""Open-loop sweeps and closed-loop ensembles.

Every realization ("cell") is an independent job keyed by
``(n, degree, seed)``; rows are sorted by that key before they are
returned, so execution order and worker count never change the output.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from ..dynamics import BlowUpError, Trajectory, generate_trajectory, max_lyapunov, get_system
from ..metrics import (
    RunMetrics,
    histogram_pdf,
    kl_divergence,
    mce,
    rmse,
    valid_prediction_time,
)
from ..readout import BLOWUP_LIMIT, AutonomousEsn, closed_loop_orbit, predict, train
from ..reservoir import EsnConfig, build_esn, csis_distance, drive
from .config import ExperimentConfig

log = logging.getLogger(__name__)

THREADS_ENV = "POLYRES_THREADS"
SIG_DIGITS = 10


def _round(v):
    if v is None:
        return None
    return float(f"{float(v):.{SIG_DIGITS}g}")


@dataclass
class ResultRow:
    """One realization. Metric values are stored at CSV precision so rows
    survive a CSV round trip unchanged; absent metrics are ``None``."""

    mode: str
    system: str
    n: int
    degree: int
    seed: int
    rmse: Optional[float] = None
    mce: Optional[float] = None
    kld: Optional[float] = None
    valid_time: Optional[float] = None
    diverged: bool = False

    def __post_init__(self):
        self.n, self.degree, self.seed = int(self.n), int(self.degree), int(self.seed)
        for name in ("rmse", "mce", "kld", "valid_time"):
            setattr(self, name, _round(getattr(self, name)))
        self.diverged = bool(self.diverged)

    @property
    def key(self):
        return (self.n, self.degree, self.seed)

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_metrics(cls, config: ExperimentConfig, n, degree, seed, m: RunMetrics):
        return cls(config.mode, config.system, n, degree, seed, **m.to_dict())


def n_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _map(fn, jobs):
    workers = min(n_workers(), len(jobs))
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _esn_config(config: ExperimentConfig, n: int, seed: int) -> EsnConfig:
    k = get_system(config.system).dimension
    return EsnConfig(n, k, config.spectral_radius, config.sigma_b, seed)


def training_trajectory(config: ExperimentConfig, extra: int = 0) -> Trajectory:
    """Shared input data: ``train_samples + 1`` training samples plus ``extra``."""
    return generate_trajectory(
        config.flow_map, config.x0, config.discard_time, config.train_samples + 1 + extra
    )


def fit_readouts(config: ExperimentConfig, data: np.ndarray, n: int, seed: int):
    """Build the reservoir for one cell and train one readout per degree.

    Pairs ``(r_t, x_{t+1})`` for ``t`` past the washout, up to
    ``train_samples``. Returns ``(esn, states, {degree: readout})`` where
    ``states`` are the post-washout training states.
    """
    esn = build_esn(_esn_config(config, n, seed))
    states = drive(esn, data[: config.train_samples], config.washout)
    targets = data[config.washout + 1 : config.train_samples + 1]
    readouts = {d: train(states, targets, d, config.beta) for d in config.degree}
    return esn, states, readouts


# -- open loop ---------------------------------------------------------------


def _open_loop_cell(config: ExperimentConfig, data: np.ndarray, n: int, seed: int):
    esn, states, readouts = fit_readouts(config, data, n, seed)
    s, e = config.train_samples, config.eval_samples
    # continue the same run through the held-out segment
    test_states = drive(esn, data[s : s + e], 0, r0=states[-1])
    targets = data[s + 1 : s + e + 1]
    rows = []
    for d, ro in readouts.items():
        m = RunMetrics(rmse=rmse(targets, predict(ro, test_states)))
        rows.append(ResultRow.from_metrics(config, n, d, seed, m))
    return rows


def run_open_loop(config: ExperimentConfig) -> list[ResultRow]:
    """RMSE of tau-ahead prediction for every ``(n, degree, seed)`` cell."""
    if config.mode != "open_loop":
        raise ValueError(f"expected an open_loop config, got mode={config.mode!r}")
    data = training_trajectory(config, extra=config.eval_samples).data
    jobs = [(config, data, n, seed) for n in config.n for seed in config.seeds]
    rows = [r for cell in _map(_open_loop_cell, jobs) for r in cell]
    return sorted(rows, key=lambda r: r.key)


# -- closed loop -------------------------------------------------------------


def reference_pdf(config: ExperimentConfig, data: np.ndarray):
    """Histogram of the first coordinate of a true run of ``pdf_samples`` steps."""
    ref = generate_trajectory(config.flow_map, data[-1], 0.0, config.pdf_samples)
    lo, hi = config.pdf_range
    return histogram_pdf(ref.data[:, 0], lo, hi, config.pdf_bins)


def _valid_time_run(config, esn, readout, test: np.ndarray):
    """Fresh reservoir, synchronized on ``washout`` true samples, then closed loop."""
    w, e = config.washout, config.eval_samples
    sync = drive(esn, test[:w], 0) if w else np.zeros((1, esn.n))
    sys = AutonomousEsn(esn.with_state(sync[-1]), readout)
    out, _, _ = closed_loop_orbit(sys, e, partial=True)
    targets = test[w : w + e]
    if len(out) < e:
        # diverged: everything after the blow-up counts as outside the box
        out = np.vstack([out, np.full((e - len(out), targets.shape[1]), BLOWUP_LIMIT)])
    return (
        valid_prediction_time(targets, out, config.valid_threshold, tau=config.tau),
        rmse(targets, out),
        out,
        targets,
    )


def _closed_loop_cell(config: ExperimentConfig, data: np.ndarray, p_ref, seed: int, n: int):
    esn, states, readouts = fit_readouts(config, data, n, seed)
    test = data[config.train_samples + 1 :]
    phi = config.flow_map
    lo, hi = config.pdf_range
    rows = []
    for d, ro in readouts.items():
        m = RunMetrics()
        sys = AutonomousEsn(esn.with_state(states[-1]), ro)
        try:
            m.mce = mce(phi, sys, config.mce_steps)
            out, _, _ = closed_loop_orbit(sys, config.pdf_samples)
            q = histogram_pdf(out[:, 0], lo, hi, config.pdf_bins)
            m.kld = kl_divergence(p_ref, q)
        except BlowUpError as exc:
            log.info("n=%d degree=%d seed=%d diverged: %s", n, d, seed, exc)
            m.diverged = True
            m.mce = m.kld = None
        m.valid_time, m.rmse, _, _ = _valid_time_run(config, esn, ro, test)
        rows.append(ResultRow.from_metrics(config, n, d, seed, m))
    return rows


def run_closed_loop(config: ExperimentConfig) -> list[ResultRow]:
    """MCE, KLD and valid prediction time for every ``(n, degree, seed)`` cell.

    Diverged closed loops are flagged in their row; they never abort the
    batch.
    """
    if config.mode != "closed_loop":
        raise ValueError(f"expected a closed_loop config, got mode={config.mode!r}")
    data = training_trajectory(config, extra=config.washout + config.eval_samples).data
    p_ref = reference_pdf(config, data)
    jobs = [(config, data, p_ref, seed, n) for n in config.n for seed in config.seeds]
    rows = [r for cell in _map(_closed_loop_cell, jobs) for r in cell]
    return sorted(rows, key=lambda r: r.key)


def closed_loop_example(config: ExperimentConfig, seed: int, n: Optional[int] = None):
    """Trajectories for the figures of one realization, per degree.

    Returns ``{degree: dict}`` with ``target``/``prediction`` (valid-time
    run), ``orbit``/``errors`` (the MCE orbit and its local conjugacy
    errors) and ``p``/``q`` histograms. Entries are ``None`` for a
    diverged closed loop.
    """
    from ..metrics import orbit_conjugacy_errors

    n = config.n[0] if n is None else n
    data = training_trajectory(config, extra=config.washout + config.eval_samples).data
    p_ref = reference_pdf(config, data)
    esn, states, readouts = fit_readouts(config, data, n, seed)
    test = data[config.train_samples + 1 :]
    lo, hi = config.pdf_range
    out = {}
    for d, ro in readouts.items():
        item = {"p": p_ref, "q": None, "orbit": None, "errors": None}
        sys = AutonomousEsn(esn.with_state(states[-1]), ro)
        try:
            item["errors"], item["orbit"] = orbit_conjugacy_errors(config.flow_map, sys, config.mce_steps)
            long_run, _, _ = closed_loop_orbit(sys, config.pdf_samples)
            item["q"] = histogram_pdf(long_run[:, 0], lo, hi, config.pdf_bins)
        except BlowUpError:
            pass
        _, _, pred, targets = _valid_time_run(config, esn, ro, test)
        item["target"] = Trajectory(targets, config.tau)
        item["prediction"] = Trajectory(pred, config.tau)
        out[d] = item
    return out


# -- summaries -----------------------------------------------------------------


def summarize(rows: list[ResultRow], metric: str, exclude_diverged: bool = True) -> dict:
    """Median and interquartile range of ``metric`` per ``(n, degree)``.

    Diverged rows carry no metric values and are left out when
    ``exclude_diverged`` is set; the count of dropped rows is reported.
    """
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.n, r.degree), []).append(r)
    out = {}
    for key, grp in sorted(groups.items()):
        vals = [getattr(r, metric) for r in grp if not (exclude_diverged and r.diverged)]
        vals = np.array([v for v in vals if v is not None], dtype=float)
        if vals.size:
            q1, med, q3 = np.percentile(vals, [25, 50, 75])
        else:
            q1 = med = q3 = float("nan")
        out[key] = {
            "median": float(med),
            "iqr": float(q3 - q1),
            "count": int(vals.size),
            "dropped": len(grp) - int(vals.size),
        }
    return out


def lyapunov(config: dict) -> float:
    """Maximal Lyapunov exponent for a ``lyapunov`` config dict."""
    system = get_system(config.get("system", "lorenz"))
    return max_lyapunov(
        system,
        config.get("x0", (1.0, 1.0, 1.0)),
        float(config.get("horizon", 2000.0)),
        h=float(config.get("h", 0.01)),
        renorm_interval=float(config.get("renorm_interval", 0.1)),
        separation=float(config.get("separation", 1e-8)),
        transient=float(config.get("discard_time", 10.0)),
    )


CSIS_DEFAULT_CASES = [
    {"tau": 0.2, "spectral_radius": 0.95, "sigma_b": 0.1},
    {"tau": 0.02, "spectral_radius": 0.01, "sigma_b": 0.01},
]


def csis_check(config: dict) -> list[dict]:
    """Run the two-initial-state convergence diagnostic.

    For each case and seed, two random initial states (drawn from a stream
    seeded by ``seed``) are driven by the same true trajectory. Reports the
    first step at which their distance drops below ``threshold``.
    """
    from ..dynamics import FlowMap
    from ..numerics import Rng

    system = get_system(config.get("system", "lorenz"))
    n = int(config.get("n", 10))
    steps = int(config.get("steps", 1000))
    threshold = float(config.get("threshold", 1e-8))
    seeds = [int(s) for s in config.get("seeds", range(5))]
    results = []
    for case in config.get("cases", CSIS_DEFAULT_CASES):
        phi = FlowMap(system, float(case["tau"]), float(config.get("h", 0.01)))
        inputs = generate_trajectory(phi, config.get("x0", (1.0, 1.0, 1.0)), 10.0, steps).data
        for seed in seeds:
            cfg = EsnConfig(n, system.dimension, float(case["spectral_radius"]), float(case["sigma_b"]), seed)
            rng = Rng(seed)
            r0 = rng.uniform(-1.0, 1.0, n)
            r1 = rng.uniform(-1.0, 1.0, n)
            dist = csis_distance(cfg, inputs, r0, r1)
            below = np.flatnonzero(dist < threshold)
            results.append(
                {
                    **case,
                    "seed": seed,
                    "first_below": int(below[0]) + 1 if below.size else None,
                    "final_distance": float(dist[-1]),
                    "passed": bool(below.size),
                }
            )
    return results

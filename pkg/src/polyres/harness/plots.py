"""Standalone SVG figures (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("rmse_vs_n", "timeseries", "phase_xz", "pdf_overlay", "metric_scatter")
DEGREE_COLORS = {1: "tab:red", 2: "tab:blue", 3: "tab:green"}
DEGREE_LABELS = {1: "L", 2: "Q", 3: "C"}

# no timestamps or random ids in the SVG, so reruns are byte-identical
_RC = {"svg.hashsalt": "polyres", "svg.fonttype": "none"}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _rows_plot(rows, metric, ax, by):
    xs_seen = set()
    for r in rows:
        v = getattr(r, metric)
        if v is None or (metric != "valid_time" and v <= 0):
            continue
        x = getattr(r, by)
        jitter = 0.0 if by == "n" else 0.06 * ((r.seed % 7) - 3)
        label = None if r.degree in xs_seen else f"{DEGREE_LABELS[r.degree]}-ESN"
        xs_seen.add(r.degree)
        ax.plot(x + jitter, v, "o", color=DEGREE_COLORS[r.degree], mfc="none", label=label)


def plot_rmse_vs_n(rows, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 4))
        _rows_plot(rows, "rmse", ax, "n")
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel("RMSE")
        ax.legend()
        return _save(fig, path)


def plot_metric_scatter(rows, path, metrics=("mce", "kld")):
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(len(metrics), 1, figsize=(4, 3 * len(metrics)), squeeze=False)
        for ax, metric in zip(axes[:, 0], metrics):
            _rows_plot([r for r in rows if not r.diverged], metric, ax, "degree")
            ax.set_yscale("log")
            ax.set_xticks(sorted({r.degree for r in rows}))
            ax.set_ylabel(metric.upper())
        axes[-1, 0].set_xlabel("readout degree")
        return _save(fig, path)


def plot_timeseries(target, prediction, path):
    tau = getattr(target, "tau", None)
    target = np.asarray(target)
    prediction = np.asarray(prediction)
    with plt.rc_context(_RC):
        k = target.shape[1]
        fig, axes = plt.subplots(k, 1, figsize=(6, 1.6 * k), sharex=True, squeeze=False)
        t = np.arange(len(target)) * (tau or 1.0)
        for i, ax in enumerate(axes[:, 0]):
            ax.plot(t, target[:, i], "--", color="grey", lw=1)
            ax.plot(t[: len(prediction)], prediction[:, i], "-", color="tab:red", lw=1)
            ax.set_ylabel("xyz"[i] if k == 3 else f"x{i}")
        axes[-1, 0].set_xlabel("t")
        return _save(fig, path)


def plot_phase_xz(orbit, path, colors=None):
    """x-z projection; ``colors`` (e.g. local conjugacy errors) are shown on a log scale."""
    orbit = np.asarray(orbit)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4, 4))
        if colors is None:
            ax.plot(orbit[:, 0], orbit[:, 2], ".", ms=2, color="k")
        else:
            c = np.log10(np.maximum(np.asarray(colors, dtype=float), 1e-16))
            sc = ax.scatter(orbit[:, 0], orbit[:, 2], c=c, s=2, cmap="jet")
            fig.colorbar(sc, ax=ax, label="log10 error")
        ax.set_xlabel("x")
        ax.set_ylabel("z")
        return _save(fig, path)


def plot_pdf_overlay(p, q, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.plot(p.centers, p.density, "--", color="grey", label="target")
        if q is not None:
            ax.plot(q.centers, q.density, "-", color="tab:red", label="model")
        ax.set_xlabel("x")
        ax.set_ylabel("PDF")
        ax.legend()
        return _save(fig, path)


def emit_plot(data, kind: str, path):
    """Dispatch on ``kind``; ``data`` is a row list or a tuple of arrays/histograms."""
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {KINDS}")
    if kind in ("rmse_vs_n", "metric_scatter"):
        if not isinstance(data, (list, tuple)) or not data or not hasattr(data[0], "degree"):
            raise ValueError(f"{kind} needs a non-empty list of result rows")
        return plot_rmse_vs_n(data, path) if kind == "rmse_vs_n" else plot_metric_scatter(data, path)
    if kind == "timeseries":
        target, prediction = data
        return plot_timeseries(target, prediction, path)
    if kind == "phase_xz":
        if isinstance(data, tuple):
            return plot_phase_xz(data[0], path, data[1])
        return plot_phase_xz(data, path)
    p, q = data
    return plot_pdf_overlay(p, q, path)

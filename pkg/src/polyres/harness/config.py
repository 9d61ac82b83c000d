"""Experiment configuration (JSON, ``schema_version`` 1)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Union

from ..dynamics import DEFAULT_DISCARD_TIME, DEFAULT_H, DEFAULT_X0, FlowMap, get_system
from ..readout import DEGREES

SCHEMA_VERSION = 1
MODES = ("open_loop", "closed_loop")

# Per-mode defaults; anything in a config file overrides these.
MODE_DEFAULTS = {
    "open_loop": dict(
        tau=0.2,
        n=[5, 10, 20, 40],
        degree=[1, 2],
        spectral_radius=0.95,
        sigma_b=0.1,
        beta=1e-4,
        train_samples=10_000,
        washout=100,
        eval_samples=10_000,
    ),
    "closed_loop": dict(
        tau=0.02,
        n=[10],
        degree=[1, 2, 3],
        spectral_radius=0.01,
        sigma_b=0.01,
        beta=1e-6,
        train_samples=20_000,
        washout=1000,
        eval_samples=1500,
    ),
}


class ConfigError(ValueError):
    pass


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass
class ExperimentConfig:
    """Everything needed to rerun one experiment.

    ``train_samples`` counts the whole training input segment, washout
    included, so the readout sees ``train_samples - washout`` pairs.
    In closed-loop mode ``eval_samples`` is the horizon of the
    valid-prediction-time run.
    """

    mode: str = "open_loop"
    system: str = "lorenz"
    tau: float = 0.2
    h: float = DEFAULT_H
    n: list = field(default_factory=lambda: [10])
    degree: list = field(default_factory=lambda: [1, 2])
    spectral_radius: float = 0.95
    sigma_b: float = 0.1
    beta: float = 1e-4
    seeds: list = field(default_factory=lambda: list(range(20)))
    train_samples: int = 10_000
    washout: int = 100
    eval_samples: int = 10_000
    x0: list = field(default_factory=lambda: list(DEFAULT_X0))
    discard_time: float = DEFAULT_DISCARD_TIME
    # closed-loop only
    mce_time: float = 50.0
    pdf_samples: int = 500_000
    pdf_range: list = field(default_factory=lambda: [-25.0, 25.0])
    pdf_bins: int = 100
    valid_threshold: float = 0.4
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.n = [int(v) for v in _as_list(self.n)]
        self.degree = [int(v) for v in _as_list(self.degree)]
        self.seeds = [int(v) for v in _as_list(self.seeds)]
        self.validate()

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        try:
            get_system(self.system)
            FlowMap(get_system(self.system), self.tau, self.h)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if any(not 0 <= s < 2**64 for s in self.seeds):
            raise ConfigError("seeds must be 64-bit unsigned integers")
        if not self.n or any(v < 1 for v in self.n):
            raise ConfigError("n must be a non-empty list of positive sizes")
        if not self.degree or any(d not in DEGREES for d in self.degree):
            raise ConfigError(f"degree entries must be in {DEGREES}")
        if self.spectral_radius < 0 or self.sigma_b < 0 or self.beta < 0:
            raise ConfigError("spectral_radius, sigma_b and beta must be non-negative")
        if self.washout < 0 or self.train_samples <= self.washout:
            raise ConfigError("need 0 <= washout < train_samples")
        if self.eval_samples < 1:
            raise ConfigError("eval_samples must be >= 1")
        if self.mode == "closed_loop":
            if self.pdf_samples < 1 or self.pdf_bins < 1:
                raise ConfigError("pdf_samples and pdf_bins must be >= 1")
            if not self.pdf_range[1] > self.pdf_range[0]:
                raise ConfigError("pdf_range must be increasing")
            if self.mce_time <= 0 or self.valid_threshold <= 0:
                raise ConfigError("mce_time and valid_threshold must be positive")

    @property
    def flow_map(self) -> FlowMap:
        return FlowMap(get_system(self.system), self.tau, self.h)

    @property
    def mce_steps(self) -> int:
        return int(round(self.mce_time / self.tau))

    def with_seed_offset(self, offset: int) -> "ExperimentConfig":
        d = self.to_dict()
        d["seeds"] = [s + offset for s in self.seeds]
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def for_mode(cls, mode: str, **overrides) -> "ExperimentConfig":
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        params = dict(MODE_DEFAULTS[mode], mode=mode)
        if mode == "closed_loop":
            params["seeds"] = list(range(10))
        params.update(overrides)
        return cls(**params)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)} | {"base_seed", "n_seeds"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "base_seed" in d or "n_seeds" in d:
            if "seeds" in d:
                raise ConfigError("give either seeds or base_seed/n_seeds, not both")
            base = int(d.pop("base_seed", 0))
            d["seeds"] = [base + i for i in range(int(d.pop("n_seeds", 1)))]
        mode = d.pop("mode", "open_loop")
        try:
            return cls.for_mode(mode, **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_json(path: Union[str, Path]) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    return ExperimentConfig.from_dict(load_json(path))

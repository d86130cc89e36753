"""Experiment configuration documents (YAML or JSON) and their validation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .learning import Split
from .optimize import OptimizerConfig
from .reservoir import PIPELINES


class ConfigError(ValueError):
    pass


@dataclass
class ReservoirSection:
    n_A: int = 3
    n_B: int = 4
    # a number, "sweep" (run the timestep sweep first), or a path to a sweep manifest
    tau: Any = 1.0
    K: int = 10
    encoding_qubit: int = 0
    bridge_qubits: list | None = None
    coupling_scale: float = 1.0
    seed: int = 0
    pipeline: str = "default"


@dataclass
class BridgeSection:
    # "optimize", "zeros", "bell", "published", a parameter-record path, or 15 angles
    theta: Any = "optimize"


@dataclass
class PurifierSection:
    # "optimize", "none", "published", a parameter-record path, or 15 angles
    gamma: Any = "optimize"
    n_states: int = 1000
    purity_range: list = field(default_factory=lambda: [0.51, 0.53])
    fidelity_floor: float = 0.8
    objective_cut: float = 0.1


@dataclass
class SplitSection:
    washout: int = 100
    train: int = 1000
    test: int = 500


@dataclass
class TaskSection:
    d_max: int = 8
    n_samples: int = 20
    readout: str = "both"
    split: SplitSection = field(default_factory=SplitSection)
    signal_seed: int = 0
    ridge_lambda: float = 1e-8
    setups: list | None = None  # [[n_A, n_B], ...]; default is the reservoir section's pair
    noise_levels: list = field(default_factory=lambda: [0.0])
    purification: list = field(default_factory=lambda: [True])
    tau_candidates: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0, 8.0])
    sweep_samples: int = 5


@dataclass
class ExperimentConfig:
    reservoir: ReservoirSection = field(default_factory=ReservoirSection)
    bridge: BridgeSection = field(default_factory=BridgeSection)
    purifier: PurifierSection = field(default_factory=PurifierSection)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    task: TaskSection = field(default_factory=TaskSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def split(self) -> Split:
        s = self.task.split
        return Split(s.washout, s.train, s.test)


_NESTED = {
    "reservoir": ReservoirSection,
    "bridge": BridgeSection,
    "purifier": PurifierSection,
    "optimizer": OptimizerConfig,
    "task": TaskSection,
    "task.split": SplitSection,
}


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown config key '{where}'")
    kwargs = {}
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if where in _NESTED:
            value = _build(_NESTED[where], value, where)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def _require(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"invalid value for '{key}': {msg}")


def validate(cfg: ExperimentConfig) -> None:
    r, t, s = cfg.reservoir, cfg.task, cfg.task.split
    _require(isinstance(r.n_A, int) and r.n_A >= 1, "reservoir.n_A", "must be a positive integer")
    _require(isinstance(r.n_B, int) and r.n_B >= 1, "reservoir.n_B", "must be a positive integer")
    _require(isinstance(r.K, int) and r.K >= 1, "reservoir.K", "must be a positive integer")
    _require(r.coupling_scale >= 0, "reservoir.coupling_scale", "must be non-negative")
    _require(r.pipeline in PIPELINES, "reservoir.pipeline", f"must be one of {sorted(PIPELINES)}")
    if isinstance(r.tau, (int, float)):
        _require(r.tau >= 0, "reservoir.tau", "must be non-negative")
    else:
        _require(isinstance(r.tau, str), "reservoir.tau", "must be a number, 'sweep' or a manifest path")
    _require(s.washout >= 0, "task.split.washout", "must be non-negative")
    _require(s.train >= 2, "task.split.train", "must be at least 2")
    _require(s.test >= 2, "task.split.test", "must be at least 2")
    _require(0 <= t.d_max <= s.washout and t.d_max < s.train, "task.d_max", "must be within the washout and below train")
    _require(t.n_samples >= 1, "task.n_samples", "must be at least 1")
    _require(t.readout in ("A", "B", "both"), "task.readout", "must be A, B or both")
    _require(t.ridge_lambda >= 0, "task.ridge_lambda", "must be non-negative")
    _require(all(0 <= p <= 1 for p in t.noise_levels), "task.noise_levels", "probabilities must lie in [0, 1]")
    _require(len(t.tau_candidates) >= 1, "task.tau_candidates", "need at least one candidate")
    _require(all(isinstance(x, bool) for x in t.purification), "task.purification", "must be a list of booleans")
    if t.setups is not None:
        _require(
            all(isinstance(p, (list, tuple)) and len(p) == 2 and min(p) >= 1 for p in t.setups),
            "task.setups",
            "must be a list of [n_A, n_B] pairs",
        )
    lo, hi = cfg.purifier.purity_range
    _require(0.5 <= lo <= hi <= 1, "purifier.purity_range", "must be an interval inside [0.5, 1]")
    _require(cfg.purifier.n_states >= 1, "purifier.n_states", "must be at least 1")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    cfg = _build(ExperimentConfig, data or {}, "")
    validate(cfg)
    return cfg


def override_seed(cfg: ExperimentConfig, seed: int) -> None:
    cfg.reservoir.seed = seed
    cfg.optimizer.seed = seed
    cfg.task.signal_seed = seed

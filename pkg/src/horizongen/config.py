"""Experiment configuration: an INI ``[experiment]`` section plus CLI overrides."""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .env import BUNDLED_MAZES


class ConfigError(ValueError):
    pass


ESTIMATORS = ("hitting_time", "successor_exact")
POLICIES = ("greedy", "boltzmann", "random", "adversarial")
PLANNERS = ("none", "optimal", "midpoint")
PLANNER_DISTANCES = ("true", "policy")


@dataclass
class ExperimentConfig:
    maze: str = "rooms"
    seed: int = 0
    num_trajectories: int = 3000
    trajectory_length: int = 50
    gamma: float = 0.9
    estimator: str = "hitting_time"
    project: bool = True
    # restrict the estimate to pairs closer than this before projecting; 0 keeps all
    short_pair_threshold: float = 0.0
    policy: str = "boltzmann"
    coeff: float = 0.1
    policy_seed: int = 0
    H: int = 5
    planner: str = "midpoint"
    planner_distance: str = "true"
    slack: float = 1.0
    n_pairs: int = 1000
    bins: list[float] = field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0, 64.0])
    c0: float = 4.0
    distant_threshold: float = 32.0
    invariance_pairs: int = 300
    max_steps: int = 0
    eval_seed: int = 1
    # Bellman probe
    bellman_maze: str = "s_maze"
    bellman_trajectories: int = 3000
    bellman_length: int = 10
    bellman_batch: int = 1024
    noise_levels: list[float] = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.5])
    bellman_eval_pairs: int = 200
    method: str = ""
    output_dir: str = "runs/default"

    def validate(self) -> "ExperimentConfig":
        if self.maze not in BUNDLED_MAZES and not Path(self.maze).is_file():
            raise ConfigError(f"maze {self.maze!r} is neither bundled nor an existing file")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        for name, allowed in [
            ("estimator", ESTIMATORS),
            ("policy", POLICIES),
            ("planner", PLANNERS),
            ("planner_distance", PLANNER_DISTANCES),
        ]:
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}")
        if self.num_trajectories < 1 or self.trajectory_length < 1:
            raise ConfigError("num_trajectories and trajectory_length must be positive")
        if self.n_pairs < 1 or self.invariance_pairs < 1:
            raise ConfigError("pair counts must be positive")
        if list(self.bins) != sorted(set(self.bins)):
            raise ConfigError("bins must be strictly ascending")
        if self.coeff <= 0:
            raise ConfigError("coeff must be positive")
        if self.distant_threshold <= 0:
            raise ConfigError("distant_threshold must be positive")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be >= 0 (0 means 4 * |S|)")
        return self

    @property
    def method_name(self) -> str:
        if self.method:
            return self.method
        if self.policy in ("random", "adversarial"):
            return self.policy
        proj = "+quasimetric" if self.project else ""
        return f"{self.estimator}{proj}/{self.policy}"

    def to_ini(self) -> str:
        lines = ["[experiment]"]
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def _parse(field_type, raw: str):
    raw = raw.strip()
    if field_type in (bool, "bool"):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if field_type in (int, "int"):
        return int(raw)
    if field_type in (float, "float"):
        return float(raw)
    if str(field_type) == "list[float]":
        return [float(x) for x in raw.replace(",", " ").split()]
    return raw


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def apply_overrides(cfg: ExperimentConfig, pairs: dict[str, str]) -> ExperimentConfig:
    updates = {}
    for key, raw in pairs.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            updates[key] = _parse(_FIELDS[key].type, raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return dataclasses.replace(cfg, **updates)


def load_config(path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keys are case sensitive (``H``)
        if not parser.read(path, encoding="utf-8"):
            raise ConfigError(f"cannot read config file {path}")
        if "experiment" not in parser:
            raise ConfigError(f"{path}: missing [experiment] section")
        cfg = apply_overrides(cfg, dict(parser["experiment"]))
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg.validate()

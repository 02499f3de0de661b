"""Run configuration: a YAML file mirroring the scenario and training settings.

Unknown keys are rejected and every path is checked before any work starts.
See ``config.example.yaml`` at the repository root for a commented example.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .predictor import TrainConfig
from .sim import ScenarioConfig


class ConfigError(ValueError):
    pass


@dataclass
class Paths:
    data_dir: str | None = None
    manifest: str | None = None
    checkpoint: str | None = None
    out: str = "runs"


@dataclass
class SweepConfig:
    powers: list = field(default_factory=lambda: [0.1, 0.25, 0.5, 1.0, 2.0])
    elements: list = field(default_factory=lambda: [100, 200, 400, 600])
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    methods: list = field(default_factory=lambda: ["tpc", "reactive", "always_on", "oracle", "direct"])
    predictor: str = "lstm"


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    paths: Paths = field(default_factory=Paths)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scenario"]["region"] = list(d["scenario"]["region"])
        return d


_SECTIONS = {"scenario": ScenarioConfig, "train": TrainConfig, "sweep": SweepConfig, "paths": Paths}


def _build(cls, raw, where):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def from_dict(raw: dict) -> RunConfig:
    raw = raw or {}
    unknown = sorted(set(raw) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")
    return RunConfig(**{k: _build(cls, raw.get(k), k) for k, cls in _SECTIONS.items()})


def load(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(raw)


def override(cfg: RunConfig, section: str, **values) -> RunConfig:
    """Apply non-None flag values on top of the file settings."""
    values = {k: v for k, v in values.items() if v is not None}
    if not values:
        return cfg
    part = getattr(cfg, section)
    try:
        new = dataclasses.replace(part, **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None
    return dataclasses.replace(cfg, **{section: new})


def require_file(path, what):
    if path is None:
        raise ConfigError(f"{what} is not set")
    if not Path(path).is_file():
        raise ConfigError(f"{what} not found: {path}")
    return Path(path)


def require_dir(path, what):
    if path is None:
        raise ConfigError(f"{what} is not set")
    if not Path(path).is_dir():
        raise ConfigError(f"{what} is not a directory: {path}")
    return Path(path)

"""Experiment configuration and its ``key = value`` file format."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..losses import MONOTONE_DIRECTIONS
from ..model import ModelConfig

OUTPUT_DIR_ENV = "LSTAR_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    domain: str = "maze"
    size: int = 10
    boxes: int = 2
    wall_break_rate: float = 0.1
    teleport_pairs: int = 4
    seed: int = 0
    budget: int = 100_000
    loss: str = "lstar"
    margin: float = 0.0
    lr: float = 0.001
    epochs: int = 10
    train_count: int = 200
    test_count: int = 100
    monotone_direction: str = "as-printed"
    drop_dead_ends: bool = False
    dead_end_multiplier: float = 2.0
    labeling_cap: int = 2_000_000
    conv_layers: tuple[tuple[int, int], ...] = ((8, 3), (8, 3), (8, 3))
    hidden_width: int = 32
    model_seed: int = 0
    output_dir: str = "runs"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.domain not in ("maze", "sokoban"):
            raise ConfigError(f"domain must be maze or sokoban, not {self.domain!r}")
        if self.loss not in ("l2", "lstar"):
            raise ConfigError(f"loss must be l2 or lstar, not {self.loss!r}")
        if self.monotone_direction not in MONOTONE_DIRECTIONS:
            raise ConfigError(f"monotone_direction must be one of {MONOTONE_DIRECTIONS}")
        for name in ("size", "budget", "lr", "dead_end_multiplier", "labeling_cap", "hidden_width"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("epochs", "train_count", "test_count", "margin", "teleport_pairs", "boxes"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    def model_config(self) -> ModelConfig:
        return ModelConfig(conv_layers=self.conv_layers, hidden_width=self.hidden_width, seed=self.model_seed)

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.output_dir)

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)


def _convert(name: str, raw: str, default):
    if name == "conv_layers":
        try:
            return tuple(tuple(int(v) for v in part.lower().split("x")) for part in raw.split(","))
        except ValueError as exc:
            raise ConfigError(f"conv_layers must look like 8x3,8x3: {raw!r}") from exc
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: not a boolean: {raw!r}")
    try:
        return type(default)(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from exc


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    base = base or ExperimentConfig()
    defaults = {f.name: getattr(base, f.name) for f in dataclasses.fields(ExperimentConfig)}
    values = dict(defaults)
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip().replace("-", "_"), raw.strip()
        if not sep or key not in defaults:
            raise ConfigError(f"line {lineno}: unknown or malformed entry {line!r}")
        values[key] = _convert(key, raw, defaults[key])
    return ExperimentConfig(**values)


def load_config(path: str | Path | None, **overrides) -> ExperimentConfig:
    config = parse_config_text(Path(path).read_text()) if path else ExperimentConfig()
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return config.replace(**overrides) if overrides else config


def render_config(config: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(config, f.name)
        if f.name == "conv_layers":
            value = ",".join(f"{c}x{k}" for c, k in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"

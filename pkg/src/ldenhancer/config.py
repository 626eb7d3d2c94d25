"""Configuration objects for the enhancer network, losses, and training."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class NetworkConfig:
    """Architecture hyperparameters for the enhancer network.

    The extractor downsamples by 2 four times, so ``input_size`` must be
    divisible by 16 and the bottleneck feature grid is ``input_size / 16``.
    """

    input_size: int = 256
    extractor_channels: tuple = (4, 4, 8, 8)
    decoder_channels: tuple = (8, 4, 4, 3)
    attention_heads: int = 2
    attention_dim: int = 8
    ffn_hidden: int = 32
    estimator_channels: int = 16
    iterations: int = 8
    seed: int = 0

    def __post_init__(self):
        self.extractor_channels = tuple(int(c) for c in self.extractor_channels)
        self.decoder_channels = tuple(int(c) for c in self.decoder_channels)
        if self.input_size <= 0 or self.input_size % 16 != 0:
            raise ValueError(
                f"input_size must be a positive multiple of 16, got {self.input_size}"
            )
        if len(self.extractor_channels) != 4 or len(self.decoder_channels) != 4:
            raise ValueError("extractor_channels and decoder_channels need 4 stages")
        if any(c <= 0 for c in self.extractor_channels + self.decoder_channels):
            raise ValueError("all channel counts must be positive")
        if self.decoder_channels[-1] != 3:
            raise ValueError("decoder must end with 3 channels")
        if self.attention_dim != self.extractor_channels[-1]:
            raise ValueError(
                "attention_dim must equal the extractor output channel count"
            )
        if self.attention_heads <= 0 or self.attention_dim % self.attention_heads != 0:
            raise ValueError("attention_dim must be divisible by attention_heads")
        if self.ffn_hidden <= 0 or self.estimator_channels <= 0:
            raise ValueError("ffn_hidden and estimator_channels must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")

    @property
    def grid_size(self) -> int:
        return self.input_size // 16


@dataclass
class LossWeights:
    """Loss term coefficients and the knobs of the individual terms."""

    spatial: float = 10.0
    color: float = 5.0
    smoothness: float = 1.0
    exposure: float = 10.0
    light: float = 1.0
    exposure_level: float = 0.6
    exposure_alpha: float = 1.0
    exposure_region: int = 16
    spatial_region: int = 4
    smoothl1_beta: float = 1.0

    def __post_init__(self):
        for name in ("spatial", "color", "smoothness", "exposure", "light"):
            if getattr(self, name) < 0:
                raise ValueError(f"loss weight {name} must be non-negative")
        if not 0.0 < self.exposure_level < 1.0:
            raise ValueError("exposure_level must lie in (0, 1)")
        if self.exposure_alpha <= 0 or self.smoothl1_beta <= 0:
            raise ValueError("exposure_alpha and smoothl1_beta must be positive")
        if self.exposure_region <= 0 or self.spatial_region <= 0:
            raise ValueError("region sizes must be positive")


@dataclass
class TrainConfig:
    """Optimization-loop hyperparameters and dataset location."""

    epochs: int = 100
    learning_rate: float = 1e-6
    weight_decay: float = 1e-4
    batch_size: int = 4
    sample_stride: int = 50
    input_size: int = 256
    seed: int = 0
    checkpoint_every: int = 50
    dataset_root: str = ""
    label_dir: str = ""
    lambda_smooth: float = 10.0

    def __post_init__(self):
        positive = (
            ("epochs", self.epochs),
            ("learning_rate", self.learning_rate),
            ("weight_decay", self.weight_decay),
            ("batch_size", self.batch_size),
            ("sample_stride", self.sample_stride),
            ("input_size", self.input_size),
            ("checkpoint_every", self.checkpoint_every),
            ("lambda_smooth", self.lambda_smooth),
        )
        for name, value in positive:
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass
class EvalOptions:
    """Scoring options for the tracking evaluation."""

    one_based: bool = False
    attributes_path: str = ""


@dataclass
class Config:
    """Top-level configuration file contents."""

    network: NetworkConfig = field(default_factory=NetworkConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    eval: EvalOptions = field(default_factory=EvalOptions)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {"network", "train", "loss", "eval"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        return cls(
            network=NetworkConfig(**data.get("network", {})),
            train=TrainConfig(**data.get("train", {})),
            loss=LossWeights(**data.get("loss", {})),
            eval=EvalOptions(**data.get("eval", {})),
        )


def load_config(path) -> Config:
    """Load a JSON config file."""
    with open(path, "r", encoding="utf-8") as fh:
        return Config.from_dict(json.load(fh))


def save_config(config: Config, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write("\n")


def _coerce(raw: str, current):
    if isinstance(current, bool):
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"cannot parse boolean from {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        return tuple(int(v) for v in raw.split(","))
    return raw


def apply_overrides(config: Config, overrides) -> Config:
    """Apply ``section.field=value`` strings on top of a config.

    Values are coerced to the type of the field they replace, and the
    resulting config is re-validated.
    """
    data = config.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.split(".")
        if len(parts) != 2:
            raise ValueError(f"override key {key!r} must look like section.field")
        section, name = parts
        if section not in data:
            raise ValueError(f"unknown config section {section!r}")
        if name not in data[section]:
            raise ValueError(f"unknown config field {section}.{name}")
        data[section][name] = _coerce(raw, data[section][name])
    return Config.from_dict(data)

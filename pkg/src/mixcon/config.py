"""Experiment configuration: one frozen tree, one canonical JSON form.

Every training artifact embeds the canonical JSON and its SHA-256 hash,
so two artifacts with equal hashes were produced from byte-identical
configurations (including the seed).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .data import AugmentConfig, SyntheticDatasetConfig, correlated_cooccurrence
from .errors import InputError
from .losses import AslConfig, ContrastiveLossConfig
from .model import ModelConfig


@dataclass(frozen=True)
class DataConfig:
    """Recipe for the synthetic dataset; the co-occurrence matrix is built
    from (marginal, boost) so the config stays flat and JSON-friendly."""

    num_samples: int = 2000
    num_classes: int = 6
    input_dim: int = 24
    marginal: float = 0.35
    boost: float = 0.5
    noise_scale: float = 0.25
    holdout_frac: float = 0.25

    def __post_init__(self):
        if self.num_samples < 8:
            raise InputError("num_samples must be >= 8")
        if not 0.0 < self.holdout_frac < 1.0:
            raise InputError("holdout_frac must lie in (0, 1)")
        # marginal/boost ranges are enforced by correlated_cooccurrence.
        correlated_cooccurrence(self.num_classes, self.marginal, self.boost)

    def synthetic_config(self, seed: int) -> SyntheticDatasetConfig:
        return SyntheticDatasetConfig(
            num_samples=self.num_samples,
            num_classes=self.num_classes,
            input_dim=self.input_dim,
            cooccurrence=correlated_cooccurrence(
                self.num_classes, self.marginal, self.boost
            ),
            noise_scale=self.noise_scale,
            seed=seed,
        )


@dataclass(frozen=True)
class OptimConfig:
    peak_lr: float = 3e-3
    batch_size: int = 64
    contrastive_epochs: int = 20
    classifier_epochs: int = 10
    warmup_frac: float = 0.3
    final_factor: float = 1e-4
    start_factor: float = 0.04

    def __post_init__(self):
        if self.peak_lr <= 0.0:
            raise InputError("peak_lr must be > 0")
        if self.batch_size < 2:
            raise InputError("batch_size must be >= 2")
        if self.contrastive_epochs < 1 or self.classifier_epochs < 1:
            raise InputError("epoch counts must be >= 1")
        if not 0.0 < self.warmup_frac < 1.0:
            raise InputError("warmup_frac must lie in (0, 1)")
        if not 0.0 < self.final_factor <= 1.0 or not 0.0 < self.start_factor <= 1.0:
            raise InputError("start/final LR factors must lie in (0, 1]")


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = DataConfig()
    model: ModelConfig = ModelConfig(input_dim=24)
    loss: ContrastiveLossConfig = ContrastiveLossConfig()
    asl: AslConfig = AslConfig()
    optim: OptimConfig = OptimConfig()
    augment: AugmentConfig = AugmentConfig()
    seed: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if self.model.input_dim != self.data.input_dim:
            raise InputError("model.input_dim must equal data.input_dim")
        if self.model.num_classes != self.data.num_classes:
            raise InputError("model.num_classes must equal data.num_classes")
        if callable(self.loss.measure):
            raise InputError("experiment configs require a named overlap measure")
        if not 0.0 < self.threshold < 1.0:
            raise InputError("threshold must lie in (0, 1)")
        holdout = int(round(self.data.num_samples * self.data.holdout_frac))
        if holdout < 1 or self.data.num_samples - holdout < self.optim.batch_size:
            raise InputError("split leaves too few samples for one training batch")


def to_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_json(cfg: ExperimentConfig) -> str:
    return canonical_json(to_dict(cfg))


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(config_json(cfg).encode("utf-8")).hexdigest()


def from_dict(payload: dict) -> ExperimentConfig:
    try:
        model = dict(payload["model"])
        model["encoder_hidden"] = tuple(model["encoder_hidden"])
        model["mdn_hidden"] = tuple(model["mdn_hidden"])
        return ExperimentConfig(
            data=DataConfig(**payload["data"]),
            model=ModelConfig(**model),
            loss=ContrastiveLossConfig(**payload["loss"]),
            asl=AslConfig(**payload["asl"]),
            optim=OptimConfig(**payload["optim"]),
            augment=AugmentConfig(**payload["augment"]),
            seed=int(payload["seed"]),
            threshold=float(payload["threshold"]),
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed experiment config: {exc}") from exc


def from_json(text: str) -> ExperimentConfig:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise InputError("config JSON must be an object")
    return from_dict(payload)


def save_config(path, cfg: ExperimentConfig) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(to_dict(cfg), sort_keys=True, indent=2) + "\n")


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return from_json(fh.read())

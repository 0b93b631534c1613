"""Dataclass configs and the single JSON config document.

The JSON schema mirrors the dataclass tree exactly; unknown keys are
rejected.  Only two environment overrides exist: HAIREDIT_OUTPUT_DIR and
HAIREDIT_PORT.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .core import ConfigError, Dims, LatentPartition
from .losses import LossWeights


@dataclass(frozen=True)
class TrainConfig:
    """Training-loop settings.

    Full-scale reference values: 500_000 iterations at learning rate 0.0005,
    Adam(0.9, 0.999), batch size 1.  The desk default keeps the optimizer
    settings and shrinks the iteration count.
    """

    dims: Dims = field(default_factory=Dims)
    partition: LatentPartition | None = None
    learning_rate: float = 0.0005
    batch_size: int = 1
    iterations: int = 2000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    mapper_seed: int | None = None
    task_probs: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    modality_probs: tuple[float, float] = (0.5, 0.5)
    loss_weights: LossWeights = field(default_factory=LossWeights)
    checkpoint_every: int = 500
    ref_pool_size: int = 8
    ref_pool_dir: str | None = None
    ref_pool_split: str | None = None
    latent_source: str = "sample"
    zero_delta_when_unconditioned: bool = False
    share_across_layers: bool = True
    hidden_width: int | None = None
    identity_start: bool = True

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        if self.ref_pool_size < 1:
            raise ConfigError("ref_pool_size must be >= 1")
        if abs(sum(self.task_probs) - 1.0) > 1e-9 or any(p < 0 for p in self.task_probs):
            raise ConfigError(f"task_probs must be non-negative and sum to 1, got {self.task_probs}")
        if abs(sum(self.modality_probs) - 1.0) > 1e-9 or any(p < 0 for p in self.modality_probs):
            raise ConfigError(f"modality_probs must be non-negative and sum to 1, got {self.modality_probs}")
        if self.latent_source not in ("sample", "invert"):
            raise ConfigError(f"latent_source must be 'sample' or 'invert', got {self.latent_source!r}")

    @property
    def effective_partition(self) -> LatentPartition:
        return self.partition or LatentPartition.default_for(self.dims.n_layers)

    @property
    def effective_mapper_seed(self) -> int:
        return self.mapper_seed if self.mapper_seed is not None else self.seed + 1


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8000
    cache_capacity: int = 64
    ui_dir: str | None = "frontend/dist"

    def __post_init__(self):
        if self.cache_capacity < 1:
            raise ConfigError("cache_capacity must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    """Everything the CLI and service need, loadable from one JSON file."""

    train: TrainConfig = field(default_factory=TrainConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    backend_seed: int = 7
    output_dir: str = "out"
    corpus_path: str | None = None

    @property
    def dims(self) -> Dims:
        return self.train.dims


def desk_config(**train_overrides) -> RunConfig:
    """Small-profile config used by tests and the demo scripts.

    Uses a balanced (2, 2, 2) partition: at 6 layers the proportional default
    would leave the style pathway only 2 of 6 layers, which starves style
    edits at this scale.
    """
    train_overrides.setdefault("partition", LatentPartition(2, 2, 2))
    train_overrides.setdefault("iterations", 200)
    train_overrides.setdefault("checkpoint_every", 100)
    train_overrides.setdefault("dims", Dims.desk())
    return RunConfig(train=TrainConfig(**train_overrides))


def _build(cls, data, path="config"):
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must be a JSON object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        if value is None:
            kwargs[name] = None
            continue
        target = known[name].type
        if name == "dims":
            kwargs[name] = _build(Dims, value, f"{path}.dims")
        elif name == "partition":
            kwargs[name] = _build(LatentPartition, value, f"{path}.partition")
        elif name == "loss_weights":
            kwargs[name] = _build(LossWeights, value, f"{path}.loss_weights")
        elif name == "train":
            kwargs[name] = _build(TrainConfig, value, f"{path}.train")
        elif name == "service":
            kwargs[name] = _build(ServiceConfig, value, f"{path}.service")
        elif name in ("task_probs", "modality_probs"):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad {path}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data)


def config_to_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = config_from_dict(data)
    if os.environ.get("HAIREDIT_OUTPUT_DIR"):
        cfg = RunConfig(
            train=cfg.train,
            service=cfg.service,
            backend_seed=cfg.backend_seed,
            output_dir=os.environ["HAIREDIT_OUTPUT_DIR"],
            corpus_path=cfg.corpus_path,
        )
    if os.environ.get("HAIREDIT_PORT"):
        try:
            port = int(os.environ["HAIREDIT_PORT"])
        except ValueError as exc:
            raise ConfigError("HAIREDIT_PORT must be an integer") from exc
        cfg = RunConfig(
            train=cfg.train,
            service=ServiceConfig(port=port, cache_capacity=cfg.service.cache_capacity, ui_dir=cfg.service.ui_dir),
            backend_seed=cfg.backend_seed,
            output_dir=cfg.output_dir,
            corpus_path=cfg.corpus_path,
        )
    return cfg


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n")


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]

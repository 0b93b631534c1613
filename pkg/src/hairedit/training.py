"""Training loop: randomized task sampling, Adam updates, checkpoints, logs.

Runs are bit-reproducible under a fixed seed: task sampling consumes one
numpy Generator whose state is checkpointed, the reference pool is rebuilt
from a fixed derived seed, and the optimizer keeps explicit float64 moments
so resuming from a checkpoint continues the exact same trajectory.  Backends
are frozen throughout; only the mapper parameters change.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .backends import BackendBundle, sample_latent
from .checkpoint import load_checkpoint, save_checkpoint
from .conditions import (
    ConditionPair,
    PromptCorpus,
    absent_condition,
    condition_from_reference,
    condition_from_text,
    load_prompt_corpus,
)
from .config import RunConfig, TrainConfig, config_hash
from .core import ConfigError, Image, LatentCode, NumericError
from .losses import LossBreakdown, LossWeights, TaskContext, total_loss
from .mapper import (
    HairMapperParams,
    apply_edit,
    init_mapper_params,
    mapper_forward,
    named_parameters,
)

log = logging.getLogger(__name__)

TASK_TYPES = ("style_only", "color_only", "both")

# Seed offset for the reference-pool stream, kept apart from the task stream.
_POOL_SEED_OFFSET = 104729


@dataclass(frozen=True)
class TrainTask:
    """One sampled training example: latent, conditions, reference images."""

    w: LatentCode
    pair: ConditionPair
    style_ref: Image | None
    color_ref: Image | None
    task_type: str

    def __post_init__(self):
        if self.task_type not in TASK_TYPES:
            raise ConfigError(f"unknown task type {self.task_type!r}")
        if self.pair.task_type != self.task_type:
            raise ConfigError(
                f"task type {self.task_type!r} inconsistent with conditions {self.pair.task_type!r}"
            )

    def describe(self) -> dict:
        return {
            "task_type": self.task_type,
            "style": {"kind": self.pair.style.kind, "source": self.pair.style.source},
            "color": {"kind": self.pair.color.kind, "source": self.pair.color.source},
        }


def build_reference_pool(backends: BackendBundle, cfg: TrainConfig) -> list[Image]:
    """Render a deterministic pool of generated images to serve as references."""
    rng = np.random.default_rng(cfg.seed + _POOL_SEED_OFFSET)
    pool = []
    with torch.no_grad():
        for _ in range(cfg.ref_pool_size):
            pool.append(backends.generator.generate(sample_latent(rng, cfg.dims)))
    return pool


def sample_task(
    rng: np.random.Generator,
    corpus: PromptCorpus,
    ref_pool: list[Image],
    backends: BackendBundle,
    cfg: TrainConfig,
) -> TrainTask:
    """Draw task type, per-side modality, prompts/references, and the latent."""
    if not corpus.hairstyles or not corpus.colors:
        raise ConfigError("prompt corpus is empty")
    if not ref_pool:
        raise ConfigError("reference pool is empty")

    task_type = TASK_TYPES[int(rng.choice(3, p=cfg.task_probs))]

    def draw_side(active: bool, prompts: tuple[str, ...]):
        if not active:
            return absent_condition(), None
        modality = int(rng.choice(2, p=cfg.modality_probs))
        if modality == 0:
            prompt = prompts[int(rng.integers(len(prompts)))]
            return condition_from_text(prompt, backends.text_encoder), None
        idx = int(rng.integers(len(ref_pool)))
        ref = ref_pool[idx]
        cond = condition_from_reference(ref, backends.parser, backends.image_encoder, source_id=f"pool:{idx}")
        return cond, ref

    style, style_ref = draw_side(task_type in ("style_only", "both"), corpus.hairstyles)
    color, color_ref = draw_side(task_type in ("color_only", "both"), corpus.colors)

    if cfg.latent_source == "sample":
        w = sample_latent(rng, cfg.dims)
    else:
        w = backends.inverter.invert(ref_pool[int(rng.integers(len(ref_pool)))])

    return TrainTask(w=w, pair=ConditionPair(style, color), style_ref=style_ref, color_ref=color_ref, task_type=task_type)


class AdamState:
    """Explicit Adam moments (float64) so checkpoints capture the exact state."""

    def __init__(self, params: HairMapperParams):
        self.m = {name: torch.zeros_like(t) for name, t in named_parameters(params)}
        self.v = {name: torch.zeros_like(t) for name, t in named_parameters(params)}
        self.step = 0

    def to_arrays(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        return {name: (self.m[name].numpy().copy(), self.v[name].numpy().copy()) for name in self.m}

    @classmethod
    def from_arrays(cls, params: HairMapperParams, arrays: dict, step: int) -> "AdamState":
        state = cls(params)
        for name in state.m:
            m, v = arrays[name]
            state.m[name] = torch.from_numpy(np.ascontiguousarray(m)).to(state.m[name].dtype)
            state.v[name] = torch.from_numpy(np.ascontiguousarray(v)).to(state.v[name].dtype)
        state.step = step
        return state


def adam_update(params: HairMapperParams, state: AdamState, cfg: TrainConfig) -> None:
    """One classic Adam step over every parameter with a gradient."""
    state.step += 1
    t = state.step
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    with torch.no_grad():
        for name, p in named_parameters(params):
            if p.grad is None:
                continue
            g = p.grad
            m, v = state.m[name], state.v[name]
            m.mul_(b1).add_(g, alpha=1.0 - b1)
            v.mul_(b2).addcmul_(g, g, value=1.0 - b2)
            if cfg.learning_rate != 0.0:
                p.add_(-cfg.learning_rate * (m / bias1) / ((v / bias2).sqrt() + cfg.adam_eps))


def _zero_grads(params: HairMapperParams) -> None:
    for _, p in named_parameters(params):
        p.grad = None


def evaluate_task(
    params: HairMapperParams,
    task: TrainTask,
    backends: BackendBundle,
    weights: LossWeights,
    cfg: TrainConfig,
) -> LossBreakdown:
    """Forward pass (mapper -> apply -> generate) and composite loss."""
    delta = mapper_forward(task.w, task.pair, params, cfg.zero_delta_when_unconditioned)
    w_edit = apply_edit(task.w, delta)
    edited = backends.generator.generate(w_edit)
    with torch.no_grad():
        recon = backends.generator.generate(task.w)
    ctx = TaskContext(
        pair=task.pair,
        delta=delta,
        edited_image=edited,
        recon_image=recon,
        style_ref=task.style_ref,
        color_ref=task.color_ref,
    )
    return total_loss(ctx, backends, weights)


def train_step(
    params: HairMapperParams,
    task: TrainTask,
    backends: BackendBundle,
    weights: LossWeights,
    state: AdamState,
    cfg: TrainConfig,
) -> LossBreakdown:
    """Single-task gradient step; parameters and optimizer state update in place."""
    breakdown = evaluate_task(params, task, backends, weights, cfg)
    if not math.isfinite(float(breakdown.total.detach())):
        raise NumericError(f"non-finite loss on task {task.describe()}")
    _zero_grads(params)
    breakdown.total.backward()
    adam_update(params, state, cfg)
    return breakdown


def smoothed_series(values: list[float], decay: float = 0.9) -> list[float]:
    """Exponentially smoothed copy of a scalar series."""
    out: list[float] = []
    ema = None
    for v in values:
        ema = v if ema is None else decay * ema + (1.0 - decay) * v
        out.append(ema)
    return out


def train(
    run_cfg: RunConfig,
    backends: BackendBundle,
    out_dir: str | Path | None = None,
    resume_from: str | Path | None = None,
    ref_pool: list[Image] | None = None,
) -> Path:
    """Run (or resume) training; returns the final checkpoint path.

    Writes ``train_log.jsonl`` (one loss breakdown per iteration), periodic
    ``checkpoint_iter*.npz`` files, and ``checkpoint_final.npz``.
    """
    cfg = run_cfg.train
    out = Path(out_dir) if out_dir is not None else Path(run_cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_hash = config_hash(run_cfg)

    corpus = load_prompt_corpus(run_cfg.corpus_path)
    if ref_pool is None:
        ref_pool = build_reference_pool(backends, cfg)

    rng = np.random.default_rng(cfg.seed)
    if resume_from is not None:
        ckpt = load_checkpoint(resume_from)
        params = ckpt.params
        state = AdamState.from_arrays(params, ckpt.adam_moments or {}, int(ckpt.meta["adam_step"]))
        if ckpt.rng_state is not None:
            rng.bit_generator.state = ckpt.rng_state
        start_iter = int(ckpt.meta["iteration"])
        log.info("resumed from %s at iteration %d", resume_from, start_iter)
    else:
        params = init_mapper_params(
            cfg.dims,
            cfg.effective_partition,
            seed=cfg.effective_mapper_seed,
            share_across_layers=cfg.share_across_layers,
            hidden=cfg.hidden_width,
            identity_start=cfg.identity_start,
        )
        state = AdamState(params)
        start_iter = 0

    def write_checkpoint(path: Path, iteration: int) -> Path:
        params.trained_iterations = iteration
        return save_checkpoint(
            path,
            params,
            meta={
                "iteration": iteration,
                "adam_step": state.step,
                "seed": cfg.seed,
                "config_hash": cfg_hash,
                "dims": {
                    "n_layers": cfg.dims.n_layers,
                    "latent_dim": cfg.dims.latent_dim,
                    "embed_dim": cfg.dims.embed_dim,
                    "image_size": cfg.dims.image_size,
                },
            },
            adam_moments=state.to_arrays(),
            rng_state=rng.bit_generator.state,
        )

    log_path = out / "train_log.jsonl"
    mode = "a" if resume_from is not None else "w"
    with open(log_path, mode) as log_file:
        for iteration in range(start_iter, cfg.iterations):
            records = []
            _zero_grads(params)
            total = None
            for _ in range(cfg.batch_size):
                task = sample_task(rng, corpus, ref_pool, backends, cfg)
                breakdown = evaluate_task(params, task, backends, cfg.loss_weights, cfg)
                if not math.isfinite(float(breakdown.total.detach())):
                    dump = out / f"diagnostic_iter{iteration:06d}.json"
                    dump.write_text(json.dumps({"iteration": iteration, "task": task.describe(), "breakdown": breakdown.to_json_dict()}, indent=2))
                    raise NumericError(f"non-finite loss at iteration {iteration}; task dumped to {dump}")
                records.append((task, breakdown))
                total = breakdown.total if total is None else total + breakdown.total
            (total / cfg.batch_size).backward()
            adam_update(params, state, cfg)
            for task, breakdown in records:
                entry = {"iteration": iteration, **task.describe(), "loss": breakdown.to_json_dict()}
                log_file.write(json.dumps(entry) + "\n")
            if (iteration + 1) % cfg.checkpoint_every == 0 and (iteration + 1) < cfg.iterations:
                write_checkpoint(out / f"checkpoint_iter{iteration + 1:06d}.npz", iteration + 1)

    final = write_checkpoint(out / "checkpoint_final.npz", cfg.iterations)
    log.info("training finished at iteration %d -> %s", cfg.iterations, final)
    return final

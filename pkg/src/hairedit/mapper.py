"""The conditional latent mapper: three sub-mappers of five modulated blocks.

Each block is fc -> modulation -> leaky-relu.  The modulation standardizes
the block feature vector and applies a condition-driven affine transform

    x' = (1 + gamma(e)) * (x - mean(x)) / (std(x) + eps) + beta(e)

where gamma and beta are small two-layer nets over the condition embedding.
When no condition is given the modulation is the identity, leaving an
unconditioned (but still nonlinear) pass through the blocks.

Conditions are injected disentangled: the style condition drives the coarse
and medium sub-mappers, the color condition drives only the fine sub-mapper.
That wiring is exact, not statistical: perturbing one side's embedding
cannot change the other side's delta layers at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import torch
import torch.nn.functional as F

from .core import (
    DTYPE,
    Dims,
    LatentCode,
    LatentDelta,
    LatentPartition,
    ShapeError,
    assemble_latent,
    split_latent,
)
from .conditions import Condition, ConditionPair

MODULATION_EPS = 1e-5
LEAKY_SLOPE = 0.2
BLOCKS_PER_MAPPER = 5

_PARTS = ("coarse", "medium", "fine")


@dataclass
class ModulationParams:
    """Parameters of the gamma/beta condition nets of one block.

    Each net is fc -> layernorm -> leaky-relu -> fc, mapping the condition
    embedding to the block width.  The two nets are independent.
    """

    gamma_w1: torch.Tensor
    gamma_b1: torch.Tensor
    gamma_w2: torch.Tensor
    gamma_b2: torch.Tensor
    beta_w1: torch.Tensor
    beta_b1: torch.Tensor
    beta_w2: torch.Tensor
    beta_b2: torch.Tensor

    @property
    def width(self) -> int:
        return self.gamma_w2.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.gamma_w1.shape[1]


@dataclass
class BlockParams:
    """One mapper block: width-preserving fc, modulation, leaky-relu slope."""

    weight: torch.Tensor
    bias: torch.Tensor
    modulation: ModulationParams
    negative_slope: float = LEAKY_SLOPE

    @property
    def width(self) -> int:
        return self.weight.shape[0]


@dataclass
class HairMapperParams:
    """Parameters of the three sub-mappers plus the layer partition.

    Each part holds one or more 5-block stacks: a single stack shared by all
    layers of the part (default), or one stack per layer.
    """

    coarse: tuple[tuple[BlockParams, ...], ...]
    medium: tuple[tuple[BlockParams, ...], ...]
    fine: tuple[tuple[BlockParams, ...], ...]
    partition: LatentPartition
    embed_dim: int
    seed: int = 0
    trained_iterations: int = 0

    def part_stacks(self, part: str) -> tuple[tuple[BlockParams, ...], ...]:
        return {"coarse": self.coarse, "medium": self.medium, "fine": self.fine}[part]


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, gain: float = 1.0) -> torch.Tensor:
    bound = gain / np.sqrt(fan_in)
    t = torch.from_numpy(rng.uniform(-bound, bound, size=shape)).to(DTYPE)
    t.requires_grad_(True)
    return t


def _zeros(shape: tuple[int, ...]) -> torch.Tensor:
    t = torch.zeros(shape, dtype=DTYPE)
    t.requires_grad_(True)
    return t


# Scale of the beta-net output layer at init: keeps the starting edit small
# but condition-dependent.
BETA_INIT_GAIN = 0.05


def init_modulation(
    rng: np.random.Generator, embed_dim: int, width: int, hidden: int, beta_gain: float = 1.0
) -> ModulationParams:
    # gamma output starts at zero so training begins near plain standardization.
    return ModulationParams(
        gamma_w1=_uniform(rng, (hidden, embed_dim), embed_dim),
        gamma_b1=_uniform(rng, (hidden,), embed_dim),
        gamma_w2=_zeros((width, hidden)),
        gamma_b2=_zeros((width,)),
        beta_w1=_uniform(rng, (hidden, embed_dim), embed_dim),
        beta_b1=_uniform(rng, (hidden,), embed_dim),
        beta_w2=_uniform(rng, (width, hidden), hidden, gain=beta_gain),
        beta_b2=_uniform(rng, (width,), hidden, gain=beta_gain),
    )


def init_block(
    rng: np.random.Generator,
    width: int,
    embed_dim: int,
    hidden: int,
    zero_fc: bool = False,
    beta_gain: float = 1.0,
) -> BlockParams:
    return BlockParams(
        weight=_zeros((width, width)) if zero_fc else _uniform(rng, (width, width), width),
        bias=_zeros((width,)) if zero_fc else _uniform(rng, (width,), width),
        modulation=init_modulation(rng, embed_dim, width, hidden, beta_gain=beta_gain),
    )


def init_mapper_params(
    dims: Dims,
    partition: LatentPartition | None = None,
    seed: int = 0,
    share_across_layers: bool = True,
    hidden: int | None = None,
    identity_start: bool = True,
) -> HairMapperParams:
    """Seeded initialization; identical arguments reproduce bit-identical parameters.

    With ``identity_start`` (default) the last block's fc is zero and the
    beta-net output layers are down-scaled, so the initial delta is tiny but
    still condition-dependent; training starts from a near-identity edit.
    Disable it for a fully random initialization (every parameter nonzero),
    e.g. for gradient checks.
    """
    if partition is None:
        partition = LatentPartition.default_for(dims.n_layers)
    if partition.total != dims.n_layers:
        raise ShapeError(f"partition sums to {partition.total}, dims declare {dims.n_layers} layers")
    hidden = hidden or dims.latent_dim
    rng = np.random.default_rng(seed)
    counts = {"coarse": partition.n_coarse, "medium": partition.n_medium, "fine": partition.n_fine}
    beta_gain = BETA_INIT_GAIN if identity_start else 1.0
    parts = {}
    for part in _PARTS:
        n_stacks = 1 if share_across_layers else counts[part]
        parts[part] = tuple(
            tuple(
                init_block(
                    rng,
                    dims.latent_dim,
                    dims.embed_dim,
                    hidden,
                    zero_fc=identity_start and b == BLOCKS_PER_MAPPER - 1,
                    beta_gain=beta_gain,
                )
                for b in range(BLOCKS_PER_MAPPER)
            )
            for _ in range(n_stacks)
        )
    return HairMapperParams(
        coarse=parts["coarse"],
        medium=parts["medium"],
        fine=parts["fine"],
        partition=partition,
        embed_dim=dims.embed_dim,
        seed=seed,
    )


def zero_mapper_params(dims: Dims, partition: LatentPartition | None = None) -> HairMapperParams:
    """All-zero parameters: the mapper is exactly the zero delta for any pair."""
    if partition is None:
        partition = LatentPartition.default_for(dims.n_layers)
    hidden = dims.latent_dim

    def zero_block() -> BlockParams:
        return BlockParams(
            weight=_zeros((dims.latent_dim, dims.latent_dim)),
            bias=_zeros((dims.latent_dim,)),
            modulation=ModulationParams(
                gamma_w1=_zeros((hidden, dims.embed_dim)),
                gamma_b1=_zeros((hidden,)),
                gamma_w2=_zeros((dims.latent_dim, hidden)),
                gamma_b2=_zeros((dims.latent_dim,)),
                beta_w1=_zeros((hidden, dims.embed_dim)),
                beta_b1=_zeros((hidden,)),
                beta_w2=_zeros((dims.latent_dim, hidden)),
                beta_b2=_zeros((dims.latent_dim,)),
            ),
        )

    stacks = lambda: (tuple(zero_block() for _ in range(BLOCKS_PER_MAPPER)),)
    return HairMapperParams(
        coarse=stacks(),
        medium=stacks(),
        fine=stacks(),
        partition=partition,
        embed_dim=dims.embed_dim,
    )


def _layer_normalize(x: torch.Tensor, eps: float = MODULATION_EPS) -> torch.Tensor:
    return (x - x.mean()) / (x.std(unbiased=False) + eps)


def _cond_net(
    e: torch.Tensor,
    w1: torch.Tensor,
    b1: torch.Tensor,
    w2: torch.Tensor,
    b2: torch.Tensor,
) -> torch.Tensor:
    h = w1 @ e + b1
    h = F.leaky_relu(_layer_normalize(h), LEAKY_SLOPE)
    return w2 @ h + b2


def modulate(x: torch.Tensor, cond: Condition, m: ModulationParams, eps: float = MODULATION_EPS) -> torch.Tensor:
    """Condition-driven standardize-and-affine; exact identity when the condition is absent."""
    if not cond.present:
        return x
    if x.shape != (m.width,):
        raise ShapeError(f"feature width {tuple(x.shape)} != modulation width {m.width}")
    if cond.embedding.shape != (m.embed_dim,):
        raise ShapeError(
            f"condition embedding dim {tuple(cond.embedding.shape)} != expected {m.embed_dim}"
        )
    gamma = _cond_net(cond.embedding, m.gamma_w1, m.gamma_b1, m.gamma_w2, m.gamma_b2)
    beta = _cond_net(cond.embedding, m.beta_w1, m.beta_b1, m.beta_w2, m.beta_b2)
    standardized = (x - x.mean()) / (x.std(unbiased=False) + eps)
    return (1.0 + gamma) * standardized + beta


def block_forward(x: torch.Tensor, cond: Condition, block: BlockParams) -> torch.Tensor:
    h = block.weight @ x + block.bias
    h = modulate(h, cond, block.modulation)
    return F.leaky_relu(h, block.negative_slope)


def sub_mapper_forward(
    part: torch.Tensor,
    cond: Condition,
    stacks: tuple[tuple[BlockParams, ...], ...],
) -> torch.Tensor:
    """Run one sub-mapper over its (n, D) layer block, producing per-layer deltas."""
    if part.ndim != 2:
        raise ShapeError(f"expected (n_layers, D) part, got {tuple(part.shape)}")
    if len(stacks) not in (1, part.shape[0]):
        raise ShapeError(f"{len(stacks)} block stacks for {part.shape[0]} layers")
    out = []
    for i in range(part.shape[0]):
        blocks = stacks[0] if len(stacks) == 1 else stacks[i]
        h = part[i]
        for block in blocks:
            h = block_forward(h, cond, block)
        out.append(h)
    return torch.stack(out, dim=0)


def mapper_forward(
    w: LatentCode,
    pair: ConditionPair,
    params: HairMapperParams,
    zero_delta_when_unconditioned: bool = False,
) -> LatentDelta:
    """Predict the latent edit for (w, conditions).

    The style condition reaches only the coarse and medium sub-mappers; the
    color condition reaches only the fine sub-mapper.  With
    ``zero_delta_when_unconditioned`` an absent side short-circuits to a zero
    delta instead of running its blocks with identity modulation.
    """
    w_c, w_m, w_f = split_latent(w, params.partition)

    def run(part: torch.Tensor, cond: Condition, stacks) -> torch.Tensor:
        if zero_delta_when_unconditioned and not cond.present:
            return torch.zeros_like(part)
        return sub_mapper_forward(part, cond, stacks)

    d_c = run(w_c, pair.style, params.coarse)
    d_m = run(w_m, pair.style, params.medium)
    d_f = run(w_f, pair.color, params.fine)
    return LatentDelta(assemble_latent(d_c, d_m, d_f, params.partition).layers)


def apply_edit(w: LatentCode, delta: LatentDelta) -> LatentCode:
    if w.layers.shape != delta.layers.shape:
        raise ShapeError(
            f"latent {tuple(w.layers.shape)} and delta {tuple(delta.layers.shape)} shapes differ"
        )
    return LatentCode(w.layers + delta.layers)


def named_parameters(params: HairMapperParams) -> Iterator[tuple[str, torch.Tensor]]:
    """Stable-ordered (name, tensor) walk over every trainable array."""
    mod_fields = ("gamma_w1", "gamma_b1", "gamma_w2", "gamma_b2", "beta_w1", "beta_b1", "beta_w2", "beta_b2")
    for part in _PARTS:
        for s, stack in enumerate(params.part_stacks(part)):
            for b, block in enumerate(stack):
                prefix = f"{part}.{s}.{b}"
                yield f"{prefix}.fc.weight", block.weight
                yield f"{prefix}.fc.bias", block.bias
                for name in mod_fields:
                    yield f"{prefix}.mod.{name}", getattr(block.modulation, name)


def parameter_list(params: HairMapperParams) -> list[torch.Tensor]:
    return [t for _, t in named_parameters(params)]


def parameter_count(params: HairMapperParams) -> int:
    """Total scalar parameter count; depends only on partition, D, D_e and sharing."""
    return sum(t.numel() for _, t in named_parameters(params))

"""Training objectives: manipulation terms, preservation terms, weighted total.

Term gating follows the condition kinds exactly:

  style_text        active iff the style condition is text
  color_text        active iff the color condition is text
  style_image       active iff the style condition is a reference image
  color_image       active iff the color condition is a reference image
  identity          active for every edit
  style_keeps_color active iff style is present and color is absent
  background        active for every edit
  latent_norm       active for every edit

The weighted total is

  total = w_text * (style_text + color_text)
        + w_image * (w_style_image * style_image + w_color_image * color_image)
        + w_preserve * (w_identity * identity + w_style_keeps_color * style_keeps_color
                        + w_background * background + w_latent_norm * latent_norm)

All terms are differentiable w.r.t. the mapper parameters through the edited
image; parsed masks are constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import torch

from .backends import BackendBundle, FaceParser, IdentityEmbedder
from .conditions import EMPTY_HAIR_MASK, ConditionPair, hair_masked
from .core import (
    DTYPE,
    ContractError,
    Image,
    LatentDelta,
    NumericError,
    ShapeError,
)


@dataclass(frozen=True)
class LossWeights:
    """Default coefficients of the composite objective."""

    style_image: float = 5.0
    color_image: float = 0.02
    identity: float = 0.3
    style_keeps_color: float = 0.02
    background: float = 1.0
    latent_norm: float = 0.8
    text: float = 2.0
    image: float = 1.0
    preserve: float = 1.0

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) < 0:
                raise ContractError(f"loss weight {name} must be non-negative")


@dataclass(frozen=True)
class LossTerm:
    value: torch.Tensor  # 0-d
    active: bool
    flags: tuple[str, ...] = ()

    def item(self) -> float:
        return float(self.value.detach())


@dataclass(frozen=True)
class LossBreakdown:
    style_text: LossTerm
    color_text: LossTerm
    style_image: LossTerm
    color_image: LossTerm
    identity: LossTerm
    style_keeps_color: LossTerm
    background: LossTerm
    latent_norm: LossTerm
    text_total: torch.Tensor
    image_total: torch.Tensor
    preserve_total: torch.Tensor
    total: torch.Tensor

    TERM_NAMES = (
        "style_text",
        "color_text",
        "style_image",
        "color_image",
        "identity",
        "style_keeps_color",
        "background",
        "latent_norm",
    )

    def term(self, name: str) -> LossTerm:
        return getattr(self, name)

    def item_total(self) -> float:
        return float(self.total.detach())

    def to_json_dict(self) -> dict:
        out: dict = {"terms": {}}
        for name in self.TERM_NAMES:
            t = self.term(name)
            out["terms"][name] = {"value": t.item(), "active": t.active}
            if t.flags:
                out["terms"][name]["flags"] = list(t.flags)
        out["text_total"] = float(self.text_total.detach())
        out["image_total"] = float(self.image_total.detach())
        out["preserve_total"] = float(self.preserve_total.detach())
        out["total"] = float(self.total.detach())
        return out


def _zero() -> torch.Tensor:
    return torch.zeros((), dtype=DTYPE)


def _inactive() -> LossTerm:
    return LossTerm(value=_zero(), active=False)


def clip_cosine_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """1 - cosine similarity; 0 for aligned vectors, 2 for opposite."""
    if a.shape != b.shape:
        raise ShapeError(f"embedding shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")
    na, nb = a.norm(), b.norm()
    if float(na.detach()) == 0.0 or float(nb.detach()) == 0.0:
        raise NumericError("cosine loss undefined for zero-norm embeddings")
    # Clamp away the odd ulp so the loss stays inside [0, 2].
    return 1.0 - torch.clamp((a @ b) / (na * nb), -1.0, 1.0)


def text_manipulation_loss(x_m: Image, pair: ConditionPair, backends: BackendBundle) -> torch.Tensor:
    """Sum of cosine distances between the edited image and each text embedding."""
    text_conds = [c for c in (pair.style, pair.color) if c.kind == "text"]
    if not text_conds:
        raise ContractError("text manipulation loss requires at least one text condition")
    img_emb = backends.image_encoder.encode(x_m)
    loss = _zero()
    for cond in text_conds:
        loss = loss + clip_cosine_loss(img_emb, cond.embedding)
    return loss


def style_image_loss(x_m: Image, x_ref: Image, backends: BackendBundle) -> torch.Tensor:
    """Cosine distance between hair-region embeddings of edit and reference."""
    masked_m, _ = hair_masked(x_m, backends.parser)
    masked_r, _ = hair_masked(x_ref, backends.parser)
    return clip_cosine_loss(
        backends.image_encoder.encode(masked_m), backends.image_encoder.encode(masked_r)
    )


class HairColor(NamedTuple):
    color: torch.Tensor  # (3,) per-channel mask-weighted mean
    empty: bool


def average_hair_color(img: Image, parser: FaceParser) -> HairColor:
    """Mask-weighted per-channel mean of the hair region; zeros when the mask is empty."""
    mask = parser.hair_mask(img).detach()
    total = mask.sum()
    if float(total) == 0.0:
        return HairColor(torch.zeros(3, dtype=DTYPE), True)
    color = (img * mask.unsqueeze(0)).sum(dim=(1, 2)) / total
    return HairColor(color, False)


def color_image_loss(x_m: Image, x_ref: Image, parser: FaceParser) -> torch.Tensor:
    """L1 distance between average hair colors; 0 when either mask is empty."""
    a = average_hair_color(x_m, parser)
    b = average_hair_color(x_ref, parser)
    if a.empty or b.empty:
        return _zero()
    return (a.color - b.color).abs().sum()


def identity_loss(x_m: Image, x_w: Image, embedder: IdentityEmbedder) -> torch.Tensor:
    """Cosine distance between identity embeddings of edit and reconstruction."""
    return clip_cosine_loss(embedder.embed(x_m), embedder.embed(x_w))


def style_keeps_color_loss(x_m: Image, x_w: Image, parser: FaceParser) -> torch.Tensor:
    """Average-hair-color drift of a style-only edit relative to the reconstruction."""
    return color_image_loss(x_m, x_w, parser)


def background_loss(
    x_m: Image,
    x_w: Image,
    parser: FaceParser,
    squared: bool = False,
    normalized: bool = True,
) -> torch.Tensor:
    """Norm of the image change restricted to the shared non-hair region.

    The region is the element-wise min of the two soft non-hair masks.  By
    default this is the plain Euclidean norm of the masked difference,
    divided by sqrt(#elements) for resolution independence; ``squared`` and
    ``normalized`` select the other readings.
    """
    if x_m.shape != x_w.shape:
        raise ShapeError(f"image shapes differ: {tuple(x_m.shape)} vs {tuple(x_w.shape)}")
    non_hair_m = 1.0 - parser.hair_mask(x_m).detach()
    non_hair_w = 1.0 - parser.hair_mask(x_w).detach()
    region = torch.minimum(non_hair_m, non_hair_w).unsqueeze(0)
    sq = ((x_m - x_w) * region).pow(2).sum()
    if normalized:
        sq = sq / x_m.numel()
    return sq if squared else _safe_sqrt(sq)


def _safe_sqrt(sq: torch.Tensor) -> torch.Tensor:
    # sqrt has no gradient at 0; return the (zero) sum itself there, which has
    # the exact value and the conventional zero subgradient.
    if float(sq.detach()) == 0.0:
        return sq
    return torch.sqrt(sq)


def norm_loss(delta: LatentDelta) -> torch.Tensor:
    """Euclidean norm of the latent step over all entries."""
    return _safe_sqrt(delta.layers.pow(2).sum())


@dataclass(frozen=True)
class TaskContext:
    """Everything a single training task evaluation produced."""

    pair: ConditionPair
    delta: LatentDelta
    edited_image: Image
    recon_image: Image
    style_ref: Image | None = None
    color_ref: Image | None = None


def total_loss(ctx: TaskContext, backends: BackendBundle, weights: LossWeights) -> LossBreakdown:
    """Evaluate every active term and compose the weighted total."""
    pair = ctx.pair
    if not pair.any_present:
        raise ContractError("total loss requires at least one active manipulation condition")

    style_kind, color_kind = pair.style.kind, pair.color.kind

    has_text = style_kind == "text" or color_kind == "text"
    style_text = _inactive()
    color_text = _inactive()
    if has_text:
        img_emb = backends.image_encoder.encode(ctx.edited_image)
        if style_kind == "text":
            style_text = LossTerm(clip_cosine_loss(img_emb, pair.style.embedding), True)
        if color_kind == "text":
            color_text = LossTerm(clip_cosine_loss(img_emb, pair.color.embedding), True)

    if style_kind == "image":
        if ctx.style_ref is None:
            raise ContractError("style image condition requires the style reference image")
        style_image = LossTerm(style_image_loss(ctx.edited_image, ctx.style_ref, backends), True)
    else:
        style_image = _inactive()

    if color_kind == "image":
        if ctx.color_ref is None:
            raise ContractError("color image condition requires the color reference image")
        a = average_hair_color(ctx.edited_image, backends.parser)
        b = average_hair_color(ctx.color_ref, backends.parser)
        if a.empty or b.empty:
            color_image = LossTerm(_zero(), True, (EMPTY_HAIR_MASK,))
        else:
            color_image = LossTerm((a.color - b.color).abs().sum(), True)
    else:
        color_image = _inactive()

    identity = LossTerm(identity_loss(ctx.edited_image, ctx.recon_image, backends.identity_embedder), True)

    if pair.style.present and not pair.color.present:
        a = average_hair_color(ctx.edited_image, backends.parser)
        b = average_hair_color(ctx.recon_image, backends.parser)
        if a.empty or b.empty:
            style_keeps_color = LossTerm(_zero(), True, (EMPTY_HAIR_MASK,))
        else:
            style_keeps_color = LossTerm((a.color - b.color).abs().sum(), True)
    else:
        style_keeps_color = _inactive()

    background = LossTerm(background_loss(ctx.edited_image, ctx.recon_image, backends.parser), True)
    latent_norm = LossTerm(norm_loss(ctx.delta), True)

    text_total = style_text.value + color_text.value
    image_total = weights.style_image * style_image.value + weights.color_image * color_image.value
    preserve_total = (
        weights.identity * identity.value
        + weights.style_keeps_color * style_keeps_color.value
        + weights.background * background.value
        + weights.latent_norm * latent_norm.value
    )
    total = weights.text * text_total + weights.image * image_total + weights.preserve * preserve_total

    return LossBreakdown(
        style_text=style_text,
        color_text=color_text,
        style_image=style_image,
        color_image=color_image,
        identity=identity,
        style_keeps_color=style_keeps_color,
        background=background,
        latent_norm=latent_norm,
        text_total=text_total,
        image_total=image_total,
        preserve_total=preserve_total,
        total=total,
    )

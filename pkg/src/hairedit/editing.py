"""Inference pipeline: invert, condition, map, apply, render; interpolation.

``edit`` is a pure function of (image, conditions, parameters, backends); the
returned result keeps the edited latent so interpolation and re-rendering
never need to re-invert.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .backends import BackendBundle, Generator
from .conditions import ConditionPair
from .core import DomainError, Image, LatentCode, LatentDelta, interpolate_latent
from .losses import LossBreakdown, LossWeights, TaskContext, total_loss
from .mapper import HairMapperParams, apply_edit, mapper_forward
from .metrics import evaluate_pair

UNTRAINED_WARNING = "untrained_parameters"
MISSING_REFERENCE_WARNING = "missing_reference_for_loss_breakdown"


@dataclass(frozen=True)
class EditResult:
    """Edited latent, rendered image, and the evaluation against the reconstruction."""

    w: LatentCode
    delta: LatentDelta
    w_edited: LatentCode
    image: Image
    recon_image: Image
    losses: LossBreakdown | None
    metrics: dict
    warnings: tuple[str, ...] = ()


def edit(
    img: Image,
    pair: ConditionPair,
    params: HairMapperParams,
    backends: BackendBundle,
    weights: LossWeights | None = None,
    style_ref: Image | None = None,
    color_ref: Image | None = None,
    zero_delta_when_unconditioned: bool = False,
) -> EditResult:
    """Invert the image, predict and apply the conditional edit, re-render.

    The loss breakdown is included when it is computable: it needs at least
    one condition, and reference images for any image-kind condition.
    """
    warnings: list[str] = []
    if params.trained_iterations == 0:
        warnings.append(UNTRAINED_WARNING)
    weights = weights or LossWeights()

    with torch.no_grad():
        w = backends.inverter.invert(img)
        delta = mapper_forward(w, pair, params, zero_delta_when_unconditioned)
        w_edited = apply_edit(w, delta)
        edited = backends.generator.generate(w_edited)
        recon = backends.generator.generate(w)

        breakdown = None
        refs_ok = (pair.style.kind != "image" or style_ref is not None) and (
            pair.color.kind != "image" or color_ref is not None
        )
        if pair.any_present and refs_ok:
            ctx = TaskContext(
                pair=pair,
                delta=delta,
                edited_image=edited,
                recon_image=recon,
                style_ref=style_ref,
                color_ref=color_ref,
            )
            breakdown = total_loss(ctx, backends, weights)
        elif pair.any_present:
            warnings.append(MISSING_REFERENCE_WARNING)

        result_metrics = evaluate_pair(recon, edited, backends)

    return EditResult(
        w=w,
        delta=delta,
        w_edited=w_edited,
        image=edited,
        recon_image=recon,
        losses=breakdown,
        metrics=result_metrics,
        warnings=tuple(warnings),
    )


def interpolation_sequence(
    result_a: EditResult,
    result_b: EditResult,
    steps: int,
    generator: Generator,
) -> list[Image]:
    """Render the latent segment between two edits at steps evenly spaced blends.

    Endpoints reproduce the two input renders bit-exactly.
    """
    if steps < 2:
        raise DomainError(f"interpolation needs at least 2 steps, got {steps}")
    frames = []
    with torch.no_grad():
        for k in range(steps):
            lam = k / (steps - 1)
            w_i = interpolate_latent(result_a.w_edited, result_b.w_edited, lam)
            frames.append(generator.generate(w_i))
    return frames

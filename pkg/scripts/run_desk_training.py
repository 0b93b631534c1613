#!/usr/bin/env python3
"""End-to-end desk-scale demo: train the mapper, render edits, report metrics.

Trains the small deterministic profile for a few hundred iterations, then
edits a generated face with text prompts, a reference image, and a mixed
text+reference pair, writes all renders as PNGs, prints the preservation
metrics table, and renders an interpolation strip between two edits.
"""

import argparse
import sys
from pathlib import Path

import numpy as np
import torch

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from hairedit.backends import sample_latent, toy_bundle
from hairedit.checkpoint import load_checkpoint
from hairedit.conditions import (
    ConditionPair,
    absent_condition,
    condition_from_reference,
    condition_from_text,
)
from hairedit.config import desk_config
from hairedit.editing import edit, interpolation_sequence
from hairedit.imaging import save_image
from hairedit.metrics import evaluate_batch
from hairedit.training import train


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/desk_demo")
    parser.add_argument("--iterations", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = desk_config(seed=args.seed, iterations=args.iterations)
    bundle = toy_bundle(cfg.dims, cfg.backend_seed)

    print(f"training {args.iterations} iterations at desk scale ...")
    ckpt_path = train(cfg, bundle, out_dir=out / "train")
    params = load_checkpoint(ckpt_path).params
    print(f"checkpoint: {ckpt_path}")

    rng = np.random.default_rng(args.seed + 1000)
    with torch.no_grad():
        face = bundle.generator.generate(sample_latent(rng, cfg.dims))
        reference = bundle.generator.generate(sample_latent(rng, cfg.dims))
    save_image(face, out / "input.png")
    save_image(reference, out / "reference.png")

    jobs = {
        "style_text": ConditionPair(
            condition_from_text("bobcut hairstyle", bundle.text_encoder), absent_condition()
        ),
        "color_text": ConditionPair(
            absent_condition(), condition_from_text("green hair", bundle.text_encoder)
        ),
        "style_ref": ConditionPair(
            condition_from_reference(reference, bundle.parser, bundle.image_encoder, "demo-ref"),
            absent_condition(),
        ),
        "mixed_text_and_ref": ConditionPair(
            condition_from_text("perm hairstyle", bundle.text_encoder),
            condition_from_reference(reference, bundle.parser, bundle.image_encoder, "demo-ref"),
        ),
    }

    results = {}
    for name, pair in jobs.items():
        style_ref = reference if pair.style.kind == "image" else None
        color_ref = reference if pair.color.kind == "image" else None
        result = edit(
            face, pair, params, bundle,
            weights=cfg.train.loss_weights, style_ref=style_ref, color_ref=color_ref,
        )
        results[name] = result
        save_image(result.image, out / f"edit_{name}.png")
        print(f"  {name}: total loss {result.losses.item_total():.4f}")

    report = evaluate_batch([(r.recon_image, r.image) for r in results.values()], bundle)
    print()
    print(report.render_table())
    report.save(out / "metrics.json")

    frames = interpolation_sequence(results["style_text"], results["color_text"], 6, bundle.generator)
    for k, frame in enumerate(frames):
        save_image(frame, out / f"interp_{k}.png")
    print(f"\nwrote renders and metrics to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry points: train, edit, interpolate, eval, serve.

Exit codes: 0 on success, 2 for configuration/input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import torch

from .backends import toy_bundle
from .checkpoint import checkpoint_file_hash, load_checkpoint
from .conditions import (
    ConditionPair,
    absent_condition,
    condition_from_reference,
    condition_from_text,
    load_prompt_corpus,
)
from .config import RunConfig, desk_config, load_config, save_config
from .core import HairEditError, InputError, LatentCode
from .editing import edit
from .imaging import load_image, load_image_dir, save_image
from .metrics import evaluate_batch
from .training import train

log = logging.getLogger("hairedit")


def _load_run_config(path: str) -> RunConfig:
    return load_config(path)


def _bundle_for(cfg: RunConfig):
    return toy_bundle(cfg.dims, cfg.backend_seed)


def cmd_init_config(args) -> int:
    cfg = desk_config() if args.desk else RunConfig()
    save_config(cfg, args.path)
    print(f"wrote {args.path}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_run_config(args.config)
    backends = _bundle_for(cfg)
    ref_pool = None
    if cfg.train.ref_pool_dir:
        ref_pool = load_image_dir(cfg.train.ref_pool_dir, cfg.dims.image_size, cfg.train.ref_pool_split)
    final = train(cfg, backends, out_dir=args.out, resume_from=args.resume, ref_pool=ref_pool)
    print(f"final checkpoint: {final}")
    return 0


def _conditions_from_args(args, cfg: RunConfig, backends):
    style = absent_condition()
    style_ref = None
    if args.style_text:
        style = condition_from_text(args.style_text, backends.text_encoder)
    elif args.style_ref:
        style_ref = load_image(args.style_ref, cfg.dims.image_size)
        style = condition_from_reference(style_ref, backends.parser, backends.image_encoder, args.style_ref)
    color = absent_condition()
    color_ref = None
    if args.color_text:
        color = condition_from_text(args.color_text, backends.text_encoder)
    elif args.color_ref:
        color_ref = load_image(args.color_ref, cfg.dims.image_size)
        color = condition_from_reference(color_ref, backends.parser, backends.image_encoder, args.color_ref)
    pair = ConditionPair(style, color)
    if not pair.any_present:
        raise InputError(
            "at least one condition is required (--style-text/--style-ref/--color-text/--color-ref)"
        )
    return pair, style_ref, color_ref


def cmd_edit(args) -> int:
    cfg = _load_run_config(args.config)
    backends = _bundle_for(cfg)
    pair, style_ref, color_ref = _conditions_from_args(args, cfg, backends)
    ckpt = load_checkpoint(args.checkpoint)
    img = load_image(args.image, cfg.dims.image_size)
    result = edit(
        img,
        pair,
        ckpt.params,
        backends,
        weights=cfg.train.loss_weights,
        style_ref=style_ref,
        color_ref=color_ref,
        zero_delta_when_unconditioned=cfg.train.zero_delta_when_unconditioned,
    )
    out = Path(args.out)
    save_image(result.image, out)
    latent_path = out.with_suffix(".latent.npy")
    np.save(latent_path, result.w_edited.layers.detach().numpy())
    sidecar = {
        "input": str(args.image),
        "checkpoint": str(args.checkpoint),
        "checkpoint_hash": checkpoint_file_hash(args.checkpoint),
        "conditions": {"style": pair.style.source or None, "color": pair.color.source or None},
        "latent": str(latent_path),
        "losses": result.losses.to_json_dict() if result.losses else None,
        "metrics": result.metrics,
        "warnings": list(result.warnings),
    }
    out.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    print(f"wrote {out}")
    return 0


def cmd_interpolate(args) -> int:
    cfg = _load_run_config(args.config)
    backends = _bundle_for(cfg)
    layers_a = torch.from_numpy(np.load(args.latent_a)).to(torch.float64)
    layers_b = torch.from_numpy(np.load(args.latent_b)).to(torch.float64)
    from .core import interpolate_latent

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    w_a, w_b = LatentCode(layers_a), LatentCode(layers_b)
    if args.steps < 2:
        raise InputError("--steps must be at least 2")
    with torch.no_grad():
        for k in range(args.steps):
            lam = k / (args.steps - 1)
            frame = backends.generator.generate(interpolate_latent(w_a, w_b, lam))
            save_image(frame, out_dir / f"frame_{k:03d}.png")
    print(f"wrote {args.steps} frames to {out_dir}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_run_config(args.config)
    backends = _bundle_for(cfg)
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        raise InputError(f"manifest not found: {manifest_path}")
    try:
        entries = json.loads(manifest_path.read_text())
        pairs = [
            (load_image(e["before"], cfg.dims.image_size), load_image(e["after"], cfg.dims.image_size))
            for e in entries
        ]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"malformed manifest {manifest_path}: {exc}") from exc
    if not pairs:
        raise InputError("manifest lists no pairs")
    report = evaluate_batch(pairs, backends)
    print(report.render_table())
    if args.out:
        report.save(args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_augment_refs(args) -> int:
    """Render edited images into a reference-pool directory."""
    cfg = _load_run_config(args.config)
    backends = _bundle_for(cfg)
    ckpt = load_checkpoint(args.checkpoint)
    corpus = load_prompt_corpus(cfg.corpus_path)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    prompts = list(corpus.hairstyles) + list(corpus.colors)
    from .backends import sample_latent
    from .mapper import apply_edit, mapper_forward

    with torch.no_grad():
        for i in range(args.count):
            prompt = prompts[i % len(prompts)]
            is_style = prompt in corpus.hairstyles
            cond = condition_from_text(prompt, backends.text_encoder)
            pair = ConditionPair(cond, absent_condition()) if is_style else ConditionPair(absent_condition(), cond)
            w = sample_latent(rng, cfg.dims)
            delta = mapper_forward(w, pair, ckpt.params, cfg.train.zero_delta_when_unconditioned)
            img = backends.generator.generate(apply_edit(w, delta))
            save_image(img, out_dir / f"ref_{i:04d}.png")
    print(f"wrote {args.count} reference images to {out_dir}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app_from_config

    cfg = _load_run_config(args.config)
    app = build_app_from_config(cfg, args.checkpoint)
    uvicorn.run(app, host=args.host, port=args.port or cfg.service.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hairedit", description="Text/reference-image hair editing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-config", help="write a default config JSON")
    p.add_argument("path")
    p.add_argument("--desk", action="store_true", help="use the small desk-scale profile")
    p.set_defaults(func=cmd_init_config)

    p = sub.add_parser("train", help="train the mapper")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output dir (default: config output_dir)")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("edit", help="edit one image")
    p.add_argument("image")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--style-text", default=None)
    p.add_argument("--color-text", default=None)
    p.add_argument("--style-ref", default=None, help="hairstyle reference image path")
    p.add_argument("--color-ref", default=None, help="hair color reference image path")
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("interpolate", help="render frames between two edited latents")
    p.add_argument("--config", required=True)
    p.add_argument("--latent-a", required=True)
    p.add_argument("--latent-b", required=True)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("eval", help="metrics over a manifest of (before, after) image pairs")
    p.add_argument("--config", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", default=None, help="recorded for provenance only")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("augment-refs", help="render edits into a reference-pool directory")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_augment_refs)

    p = sub.add_parser("serve", help="run the HTTP edit service")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HairEditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

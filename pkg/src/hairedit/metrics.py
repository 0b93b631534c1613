"""Attribute-preservation metrics: IDS, region PSNR/SSIM, ACD, batch reports.

The region metrics restrict themselves to the intersection of the two
non-hair masks, so edits confined to hair never move them.  An undefined
metric (empty region, region smaller than the SSIM window, empty hair mask)
is reported as missing, not as a number.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends import BackendBundle, FaceParser, IdentityEmbedder
from .core import Image, NumericError, ShapeError
from .losses import average_hair_color

PSNR_CAP_DB = 99.0
SSIM_WINDOW = 7
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def ids(img_a: Image, img_b: Image, embedder: IdentityEmbedder) -> float:
    """Identity similarity: cosine of the two identity embeddings, in [-1, 1]."""
    ea, eb = embedder.embed(img_a), embedder.embed(img_b)
    na, nb = float(ea.norm()), float(eb.norm())
    if na == 0.0 or nb == 0.0:
        raise NumericError("identity similarity undefined for zero-norm embeddings")
    return max(-1.0, min(1.0, float(ea @ eb) / (na * nb)))


def _shared_non_hair(img_a: Image, img_b: Image, parser: FaceParser) -> np.ndarray:
    if img_a.shape != img_b.shape:
        raise ShapeError(f"image shapes differ: {tuple(img_a.shape)} vs {tuple(img_b.shape)}")
    nh_a = 1.0 - parser.hair_mask(img_a).numpy()
    nh_b = 1.0 - parser.hair_mask(img_b).numpy()
    return np.minimum(nh_a, nh_b) >= 0.5


def region_psnr(img_a: Image, img_b: Image, parser: FaceParser) -> float | None:
    """PSNR over the shared non-hair region, capped at 99 dB; None if empty."""
    region = _shared_non_hair(img_a, img_b, parser)
    if not region.any():
        return None
    a = img_a.detach().numpy()[:, region]
    b = img_b.detach().numpy()[:, region]
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / mse))


def region_ssim(img_a: Image, img_b: Image, parser: FaceParser, window: int = SSIM_WINDOW) -> float | None:
    """Mean local SSIM over windows fully inside the shared non-hair region.

    Uniform window, population moments, C1=(0.01)^2, C2=(0.03)^2 on the [0,1]
    range; channels averaged.  None when no window fits.
    """
    region = _shared_non_hair(img_a, img_b, parser)
    h, w = region.shape
    if h < window or w < window:
        return None
    win_region = np.lib.stride_tricks.sliding_window_view(region, (window, window))
    valid = win_region.all(axis=(-2, -1))
    if not valid.any():
        return None
    a = img_a.detach().numpy()
    b = img_b.detach().numpy()
    scores = []
    for ch in range(3):
        wa = np.lib.stride_tricks.sliding_window_view(a[ch], (window, window))
        wb = np.lib.stride_tricks.sliding_window_view(b[ch], (window, window))
        mu_a = wa.mean(axis=(-2, -1))
        mu_b = wb.mean(axis=(-2, -1))
        var_a = (wa**2).mean(axis=(-2, -1)) - mu_a**2
        var_b = (wb**2).mean(axis=(-2, -1)) - mu_b**2
        cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b
        ssim_map = ((2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)) / (
            (mu_a**2 + mu_b**2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
        )
        scores.append(float(ssim_map[valid].mean()))
    return float(np.mean(scores))


def acd(img_a: Image, img_b: Image, parser: FaceParser) -> float | None:
    """Average per-channel hair-color difference; None when a mask is empty."""
    a = average_hair_color(img_a, parser)
    b = average_hair_color(img_b, parser)
    if a.empty or b.empty:
        return None
    return float((a.color - b.color).abs().sum()) / 3.0


METRIC_NAMES = ("ids", "psnr", "ssim", "acd")


@dataclass
class EvalReport:
    """Per-pair metric records plus means over the defined values."""

    items: list[dict] = field(default_factory=list)

    def means(self) -> dict[str, float | None]:
        out: dict[str, float | None] = {}
        for name in METRIC_NAMES:
            vals = [it[name] for it in self.items if it[name] is not None]
            out[name] = float(np.mean(vals)) if vals else None
        return out

    def missing_counts(self) -> dict[str, int]:
        return {name: sum(1 for it in self.items if it[name] is None) for name in METRIC_NAMES}

    def to_json_dict(self) -> dict:
        return {"items": self.items, "means": self.means(), "missing": self.missing_counts(), "count": len(self.items)}

    def render_table(self) -> str:
        means = self.means()
        missing = self.missing_counts()
        header = f"{'metric':<8}{'mean':>10}{'n':>6}{'missing':>9}"
        rows = [header, "-" * len(header)]
        for name in METRIC_NAMES:
            mean = means[name]
            shown = f"{mean:.4f}" if mean is not None else "--"
            rows.append(f"{name.upper():<8}{shown:>10}{len(self.items) - missing[name]:>6}{missing[name]:>9}")
        return "\n".join(rows)

    def save(self, path: str | Path) -> Path:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")
        return p


def evaluate_pair(before: Image, after: Image, backends: BackendBundle) -> dict:
    return {
        "ids": ids(before, after, backends.identity_embedder),
        "psnr": region_psnr(before, after, backends.parser),
        "ssim": region_ssim(before, after, backends.parser),
        "acd": acd(before, after, backends.parser),
    }


def evaluate_batch(pairs: list[tuple[Image, Image]], backends: BackendBundle) -> EvalReport:
    if not pairs:
        raise ShapeError("evaluate_batch needs at least one (before, after) pair")
    report = EvalReport()
    for before, after in pairs:
        report.items.append(evaluate_pair(before, after, backends))
    return report

"""PNG and base64 conversions at the file/wire boundary.

Images live as float64 (3, H, W) tensors in [0, 1] in memory; 8-bit files
convert by dividing by 255 on the way in and rounding on the way out.
"""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
import torch
from PIL import Image as PILImage

from .core import Image, InputError, check_image


def from_uint8(arr: np.ndarray) -> Image:
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InputError(f"expected (H, W, 3) uint8 array, got {arr.shape}")
    return torch.from_numpy(arr.astype(np.float64) / 255.0).permute(2, 0, 1).contiguous()


def to_uint8(img: Image) -> np.ndarray:
    check_image(img)
    arr = (img.detach().numpy() * 255.0).round().clip(0, 255).astype(np.uint8)
    return np.ascontiguousarray(arr.transpose(1, 2, 0))


def _from_pil(pil: PILImage.Image, image_size: int | None, resize: bool) -> Image:
    pil = pil.convert("RGB")
    if image_size is not None and pil.size != (image_size, image_size):
        if not resize:
            raise InputError(f"image is {pil.size}, pipeline expects ({image_size}, {image_size})")
        pil = pil.resize((image_size, image_size), PILImage.BILINEAR)
    return from_uint8(np.asarray(pil))


def load_image(path: str | Path, image_size: int | None = None, resize: bool = True) -> Image:
    p = Path(path)
    if not p.exists():
        raise InputError(f"image file not found: {p}")
    try:
        with PILImage.open(p) as pil:
            return _from_pil(pil, image_size, resize)
    except InputError:
        raise
    except Exception as exc:
        raise InputError(f"cannot read image {p}: {exc}") from exc


def save_image(img: Image, path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(to_uint8(img)).save(p, format="PNG")
    return p


def png_bytes(img: Image) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(to_uint8(img)).save(buf, format="PNG")
    return buf.getvalue()


def image_from_png_bytes(data: bytes, image_size: int | None = None, resize: bool = True) -> Image:
    try:
        pil = PILImage.open(io.BytesIO(data))
        pil.load()
    except Exception as exc:
        raise InputError(f"cannot decode PNG bytes: {exc}") from exc
    return _from_pil(pil, image_size, resize)


def encode_png_b64(img: Image) -> str:
    return base64.b64encode(png_bytes(img)).decode("ascii")


def decode_png_b64(data: str, image_size: int | None = None, resize: bool = True) -> Image:
    try:
        raw = base64.b64decode(data, validate=True)
    except Exception as exc:
        raise InputError(f"invalid base64 image payload: {exc}") from exc
    return image_from_png_bytes(raw, image_size, resize)


def load_image_dir(
    path: str | Path,
    image_size: int | None = None,
    split_file: str | Path | None = None,
) -> list[Image]:
    """Load a directory of images, optionally restricted to a newline-delimited split list."""
    p = Path(path)
    if not p.is_dir():
        raise InputError(f"image directory not found: {p}")
    names: list[str] | None = None
    if split_file is not None:
        split_path = Path(split_file)
        if not split_path.exists():
            raise InputError(f"split list not found: {split_path}")
        names = [line.strip() for line in split_path.read_text().splitlines() if line.strip()]
        missing = [n for n in names if not (p / n).exists()]
        if missing:
            raise InputError(f"split list entries missing under {p}: {missing[:5]}")
    images = []
    children = [p / n for n in names] if names is not None else sorted(p.iterdir())
    for child in children:
        if child.suffix.lower() in (".png", ".jpg", ".jpeg"):
            images.append(load_image(child, image_size, resize=True))
    if not images:
        raise InputError(f"no images found under {p}")
    return images

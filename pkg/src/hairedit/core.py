"""Core domain types: latent codes, partitions, images, masks, embeddings.

Everything downstream (backends, mapper, losses) is built on the small set of
value types defined here.  All tensors are float64 on CPU; instances are
treated as immutable once constructed and all operations are pure functions,
so values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

DTYPE = torch.float64


class HairEditError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(HairEditError):
    """Tensor shape or dimension mismatch."""


class DomainError(HairEditError):
    """A numeric argument is outside its allowed range."""


class InputError(HairEditError):
    """Malformed user-facing input (empty text, bad file, ...)."""


class ContractError(HairEditError):
    """An operation was invoked in a state its contract forbids."""


class ConfigError(HairEditError):
    """Invalid or inconsistent configuration."""


class NumericError(HairEditError):
    """A computation produced non-finite or degenerate values."""


@dataclass(frozen=True)
class Dims:
    """Global size profile: latent layers/width, embedding width, image size.

    Defaults are the full-scale profile (18 layers of 512, 512-d embeddings).
    ``Dims.desk()`` is the small profile used for fast tests and toy training.
    """

    n_layers: int = 18
    latent_dim: int = 512
    embed_dim: int = 512
    image_size: int = 256

    def __post_init__(self):
        if self.n_layers < 3:
            raise ConfigError(f"n_layers must be >= 3, got {self.n_layers}")
        for name in ("latent_dim", "embed_dim", "image_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @classmethod
    def desk(cls, image_size: int = 32) -> "Dims":
        return cls(n_layers=6, latent_dim=32, embed_dim=32, image_size=image_size)


@dataclass(frozen=True)
class LatentPartition:
    """Split of the L latent layers into coarse / medium / fine groups."""

    n_coarse: int
    n_medium: int
    n_fine: int

    def __post_init__(self):
        for name in ("n_coarse", "n_medium", "n_fine"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def total(self) -> int:
        return self.n_coarse + self.n_medium + self.n_fine

    @classmethod
    def default_for(cls, n_layers: int) -> "LatentPartition":
        # (4, 4, 10) at 18 layers, scaled proportionally for other depths.
        n_c = max(1, round(n_layers * 4 / 18))
        n_m = max(1, round(n_layers * 4 / 18))
        n_f = n_layers - n_c - n_m
        if n_f < 1:
            raise ConfigError(f"no valid default partition for {n_layers} layers")
        return cls(n_c, n_m, n_f)


def _check_layers_tensor(layers: torch.Tensor, kind: str) -> None:
    if not isinstance(layers, torch.Tensor):
        raise ShapeError(f"{kind} expects a torch.Tensor, got {type(layers).__name__}")
    if layers.ndim != 2:
        raise ShapeError(f"{kind} must be 2-d (layers, dim), got shape {tuple(layers.shape)}")
    if layers.shape[0] < 3:
        raise ShapeError(f"{kind} needs at least 3 layers, got {layers.shape[0]}")
    if not torch.isfinite(layers).all():
        raise DomainError(f"{kind} contains non-finite entries")


@dataclass(frozen=True)
class LatentCode:
    """An (L, D) editing-space code: one D-vector per generator layer."""

    layers: torch.Tensor

    def __post_init__(self):
        _check_layers_tensor(self.layers, "LatentCode")

    @property
    def n_layers(self) -> int:
        return self.layers.shape[0]

    @property
    def dim(self) -> int:
        return self.layers.shape[1]


@dataclass(frozen=True)
class LatentDelta:
    """A latent-space edit step, shape-compatible with its LatentCode."""

    layers: torch.Tensor

    def __post_init__(self):
        _check_layers_tensor(self.layers, "LatentDelta")

    @property
    def n_layers(self) -> int:
        return self.layers.shape[0]

    @property
    def dim(self) -> int:
        return self.layers.shape[1]


# Images are (3, H, W) float64 tensors with values in [0, 1]; masks are (H, W)
# float64 tensors in [0, 1]; embeddings are 1-d float64 vectors.  They stay
# plain tensors: the checkers below are applied at operation boundaries.
Image = torch.Tensor
Mask = torch.Tensor
Embedding = torch.Tensor


def check_image(img: torch.Tensor, image_size: int | None = None) -> torch.Tensor:
    if not isinstance(img, torch.Tensor) or img.ndim != 3 or img.shape[0] != 3:
        got = tuple(img.shape) if isinstance(img, torch.Tensor) else type(img).__name__
        raise ShapeError(f"image must be (3, H, W), got {got}")
    if image_size is not None and img.shape[1:] != (image_size, image_size):
        raise ShapeError(
            f"image resolution {tuple(img.shape[1:])} != declared ({image_size}, {image_size})"
        )
    if not torch.isfinite(img).all():
        raise DomainError("image contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise DomainError("image values must lie in [0, 1]")
    return img


def check_mask(mask: torch.Tensor, img: torch.Tensor | None = None) -> torch.Tensor:
    if not isinstance(mask, torch.Tensor) or mask.ndim != 2:
        got = tuple(mask.shape) if isinstance(mask, torch.Tensor) else type(mask).__name__
        raise ShapeError(f"mask must be (H, W), got {got}")
    if img is not None and mask.shape != img.shape[1:]:
        raise ShapeError(f"mask {tuple(mask.shape)} does not match image {tuple(img.shape[1:])}")
    if mask.min() < 0.0 or mask.max() > 1.0:
        raise DomainError("mask values must lie in [0, 1]")
    return mask


def check_embedding(vec: torch.Tensor, dim: int | None = None, unit: bool = False) -> torch.Tensor:
    if not isinstance(vec, torch.Tensor) or vec.ndim != 1:
        got = tuple(vec.shape) if isinstance(vec, torch.Tensor) else type(vec).__name__
        raise ShapeError(f"embedding must be 1-d, got {got}")
    if dim is not None and vec.shape[0] != dim:
        raise ShapeError(f"embedding dim {vec.shape[0]} != expected {dim}")
    if not torch.isfinite(vec).all():
        raise DomainError("embedding contains non-finite values")
    if unit and abs(float(vec.norm()) - 1.0) > 1e-6:
        raise DomainError(f"embedding norm {float(vec.norm()):.8f} is not 1 within 1e-6")
    return vec


def split_latent(
    w: LatentCode, p: LatentPartition
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Slice the layer stack into (coarse, medium, fine) in layer order."""
    if p.total != w.n_layers:
        raise ShapeError(f"partition sums to {p.total} but latent has {w.n_layers} layers")
    c = w.layers[: p.n_coarse]
    m = w.layers[p.n_coarse : p.n_coarse + p.n_medium]
    f = w.layers[p.n_coarse + p.n_medium :]
    return c, m, f


def assemble_latent(
    coarse: torch.Tensor,
    medium: torch.Tensor,
    fine: torch.Tensor,
    p: LatentPartition,
) -> LatentCode:
    """Concatenate part layer-lists back into a full latent (inverse of split)."""
    for part, n, name in ((coarse, p.n_coarse, "coarse"), (medium, p.n_medium, "medium"), (fine, p.n_fine, "fine")):
        if part.ndim != 2 or part.shape[0] != n:
            raise ShapeError(f"{name} part has shape {tuple(part.shape)}, expected ({n}, D)")
    if not (coarse.shape[1] == medium.shape[1] == fine.shape[1]):
        raise ShapeError("parts disagree on layer dimension")
    return LatentCode(torch.cat([coarse, medium, fine], dim=0))


def interpolate_latent(w_a: LatentCode, w_b: LatentCode, lam: float) -> LatentCode:
    """Convex combination of two latents; lam=0 gives w_a, lam=1 gives w_b.

    The endpoints are returned exactly (not recomputed through arithmetic) so
    interpolation sequences reproduce their inputs bit-for-bit.
    """
    if not (0.0 <= lam <= 1.0) or math.isnan(lam):
        raise DomainError(f"blending parameter must be in [0, 1], got {lam}")
    if w_a.layers.shape != w_b.layers.shape:
        raise ShapeError(
            f"latent shapes differ: {tuple(w_a.layers.shape)} vs {tuple(w_b.layers.shape)}"
        )
    if lam == 0.0:
        return w_a
    if lam == 1.0:
        return w_b
    return LatentCode((1.0 - lam) * w_a.layers + lam * w_b.layers)

"""Pretrained-network roles as pluggable interfaces, plus deterministic toys.

Six roles are abstracted: generator, text encoder, image encoder, face
parser, identity embedder, and inverter.  The shipped implementations are
seeded linear/smooth maps so that every loss in the pipeline is
differentiable end to end and desk-scale gradient checks are exact to first
order.  Adapters for real pretrained models plug in behind the same
interfaces; their preprocessing stays inside the adapter.

Toy backends are fully determined by (dims, seed): two instances built with
equal arguments produce bit-identical outputs.  All instances are immutable
after construction and safe for concurrent evaluation.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
import torch
import torch.nn.functional as F

from .core import (
    DTYPE,
    ConfigError,
    Dims,
    Embedding,
    Image,
    InputError,
    LatentCode,
    Mask,
    ShapeError,
    check_image,
)

# Dense toy generator weight above this many entries would not be "desk scale".
_MAX_TOY_MATRIX = 50_000_000

# Side length of the pooled grid the toy image encoders see.
_POOL = 8


@runtime_checkable
class Generator(Protocol):
    differentiable: bool

    def generate(self, w: LatentCode) -> Image: ...


@runtime_checkable
class TextEncoder(Protocol):
    differentiable: bool

    def encode(self, text: str) -> Embedding: ...


@runtime_checkable
class ImageEncoder(Protocol):
    differentiable: bool

    def encode(self, img: Image) -> Embedding: ...


@runtime_checkable
class FaceParser(Protocol):
    differentiable: bool

    def hair_mask(self, img: Image) -> Mask: ...


@runtime_checkable
class IdentityEmbedder(Protocol):
    differentiable: bool

    def embed(self, img: Image) -> Embedding: ...


@runtime_checkable
class Inverter(Protocol):
    differentiable: bool

    def invert(self, img: Image) -> LatentCode: ...


def _seeded_matrix(seed: int, rows: int, cols: int, scale: float) -> torch.Tensor:
    rng = np.random.default_rng(seed)
    return torch.from_numpy(rng.standard_normal((rows, cols)) * scale).to(DTYPE)


def _seeded_vector(seed: int, n: int, scale: float) -> torch.Tensor:
    rng = np.random.default_rng(seed)
    return torch.from_numpy(rng.standard_normal(n) * scale).to(DTYPE)


class ToyGenerator:
    """Seeded affine map of the flattened latent, squashed into (0, 1).

    generate(w) = sigmoid(A @ vec(w) + b) reshaped to (3, S, S).  Smooth and
    differentiable w.r.t. w; the sigmoid keeps outputs strictly inside [0, 1].
    """

    differentiable = True

    def __init__(self, dims: Dims, seed: int, gain: float = 2.0):
        self.dims = dims
        self.seed = seed
        n_in = dims.n_layers * dims.latent_dim
        n_out = 3 * dims.image_size * dims.image_size
        if n_in * n_out > _MAX_TOY_MATRIX:
            raise ConfigError(
                f"toy generator matrix {n_out}x{n_in} exceeds the desk-scale budget; "
                "use smaller dims or a real generator adapter"
            )
        self.weight = _seeded_matrix(seed, n_out, n_in, gain / math.sqrt(n_in))
        self.bias = _seeded_vector(seed + 1, n_out, 0.1)

    def generate(self, w: LatentCode) -> Image:
        if w.layers.shape != (self.dims.n_layers, self.dims.latent_dim):
            expected = (self.dims.n_layers, self.dims.latent_dim)
            raise ShapeError(f"latent shape {tuple(w.layers.shape)} != generator input {expected}")
        flat = w.layers.reshape(-1)
        out = torch.sigmoid(self.weight @ flat + self.bias)
        s = self.dims.image_size
        return out.reshape(3, s, s)


def _contrast_features(img: Image) -> torch.Tensor:
    """Logit contrast curve then 8x8 average pooling, flattened.

    The logit undoes squash-style pixel nonlinearities so embedding
    sensitivity does not die in saturated regions; the clamp keeps exact 0/1
    pixels (e.g. masked-out background) finite.
    """
    z = torch.clamp(img, 1e-6, 1.0 - 1e-6)
    z = torch.log(z) - torch.log1p(-z)
    return F.adaptive_avg_pool2d(z, (_POOL, _POOL)).reshape(-1)


class _PooledLinearEmbedder:
    """Shared guts of the toy image encoder and identity embedder.

    Applies the contrast curve, pools to an 8x8 grid, then a seeded affine
    map and L2 normalization.  When given a generator to calibrate on, the
    features are centered and whitened against a seeded sample of generated
    images, the toy analogue of an encoder trained on the image domain;
    without calibration it is the plain seeded projection.  The bias keeps
    degenerate inputs (all-zero image) away from the zero vector so
    normalization is always defined.
    """

    differentiable = True
    CALIBRATION_SAMPLES = 256
    WHITEN_EPS = 1e-4
    # Calibrated embeddings are dominated by the top-variance feature
    # subspace; the remaining directions keep a faint influence.  This mirrors
    # how trained encoders concentrate on a semantic subspace, and it keeps
    # the embedding responsive to small edits along the dominant directions.
    DOMINANT_DIMS = 4
    OFF_SUBSPACE_SCALE = 0.03

    def __init__(self, dims: Dims, seed: int, calibrate_on: "ToyGenerator | None" = None):
        self.dims = dims
        self.seed = seed
        n_in = 3 * _POOL * _POOL
        base = _seeded_matrix(seed, dims.embed_dim, n_in, 1.0 / math.sqrt(n_in))
        if calibrate_on is not None:
            if calibrate_on.dims != dims:
                raise ConfigError("embedder and calibration generator dims disagree")
            rng = np.random.default_rng(seed + 5)
            with torch.no_grad():
                feats = torch.stack(
                    [
                        _contrast_features(calibrate_on.generate(sample_latent(rng, dims)))
                        for _ in range(self.CALIBRATION_SAMPLES)
                    ]
                )
            mu = feats.mean(dim=0)
            centered = feats - mu
            cov = centered.T @ centered / (feats.shape[0] - 1)
            lam, basis = torch.linalg.eigh(cov)  # eigenvalues ascending
            gains = torch.full((n_in,), self.OFF_SUBSPACE_SCALE, dtype=DTYPE)
            gains[n_in - self.DOMINANT_DIMS :] = 1.0
            whiten = basis @ torch.diag(gains * (lam + self.WHITEN_EPS).rsqrt()) @ basis.T
            self.weight = base @ whiten
            self.center = mu
        else:
            self.weight = base
            self.center = torch.zeros(n_in, dtype=DTYPE)
        self.bias = _seeded_vector(seed + 1, dims.embed_dim, 0.05)

    def _embed(self, img: Image) -> Embedding:
        check_image(img, self.dims.image_size)
        feats = _contrast_features(img)
        return F.normalize(self.weight @ (feats - self.center) + self.bias, dim=0)


class ToyImageEncoder(_PooledLinearEmbedder):
    def encode(self, img: Image) -> Embedding:
        return self._embed(img)


class ToyIdentityEmbedder(_PooledLinearEmbedder):
    def embed(self, img: Image) -> Embedding:
        return self._embed(img)


class ToyTextEncoder:
    """Hashed bag-of-tokens, seeded projection, L2-normalized.

    Each token maps to a fixed Gaussian feature vector keyed by a stable hash
    of (seed, token); a prompt embeds as the normalized projection of the sum
    of its token features.  Deterministic across processes.
    """

    differentiable = False

    def __init__(self, dims: Dims, seed: int):
        self.dims = dims
        self.seed = seed
        d = dims.embed_dim
        self.projection = _seeded_matrix(seed, d, d, 1.0 / math.sqrt(d))
        self._token_cache: dict[str, torch.Tensor] = {}

    def _token_vec(self, token: str) -> torch.Tensor:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(f"{self.seed}:{token}".encode(), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = torch.from_numpy(rng.standard_normal(self.dims.embed_dim)).to(DTYPE)
            self._token_cache[token] = vec
        return vec

    def encode(self, text: str) -> Embedding:
        tokens = text.lower().split()
        if not tokens:
            raise InputError("text condition must be a non-empty string")
        bag = torch.zeros(self.dims.embed_dim, dtype=DTYPE)
        for tok in tokens:
            bag = bag + self._token_vec(tok)
        return F.normalize(self.projection @ bag, dim=0)


class ToyFaceParser:
    """Fixed geometric hair region: the top 40% of rows, regardless of content.

    Masks are constants for gradient purposes; nothing differentiates through
    the parser.
    """

    differentiable = False
    hair_fraction = 0.4

    def __init__(self, dims: Dims):
        self.dims = dims

    def hair_mask(self, img: Image) -> Mask:
        check_image(img, self.dims.image_size)
        h, w = img.shape[1], img.shape[2]
        mask = torch.zeros(h, w, dtype=DTYPE)
        mask[: int(math.floor(self.hair_fraction * h))] = 1.0
        return mask


class ToyInverter:
    """Seeded linear projection of the image back to an (L, D) latent.

    When built against a ToyGenerator the projection is the pseudo-inverse of
    the generator's weight applied in logit space, which makes
    invert(generate(w)) = w up to float rounding.  Without a generator it is
    an independent random projection (still deterministic).
    """

    differentiable = False

    def __init__(self, dims: Dims, seed: int, generator: ToyGenerator | None = None):
        self.dims = dims
        self.seed = seed
        n_lat = dims.n_layers * dims.latent_dim
        n_img = 3 * dims.image_size * dims.image_size
        if generator is not None:
            if generator.dims != dims:
                raise ConfigError("inverter and generator dims disagree")
            self.matched = True
            self.weight = torch.linalg.pinv(generator.weight)
            self.bias = generator.bias
        else:
            self.matched = False
            self.weight = _seeded_matrix(seed, n_lat, n_img, 1.0 / math.sqrt(n_img))
            self.bias = torch.zeros(n_img, dtype=DTYPE)

    def invert(self, img: Image) -> LatentCode:
        check_image(img, self.dims.image_size)
        with torch.no_grad():
            flat = img.reshape(-1).to(DTYPE)
            if self.matched:
                z = flat.clamp(1e-15, 1.0 - 1e-15)
                flat = torch.log(z) - torch.log1p(-z) - self.bias
            lat = self.weight @ flat
        return LatentCode(lat.reshape(self.dims.n_layers, self.dims.latent_dim))


@dataclass(frozen=True)
class BackendBundle:
    """All six network roles wired to one dims profile."""

    generator: Generator
    text_encoder: TextEncoder
    image_encoder: ImageEncoder
    parser: FaceParser
    identity_embedder: IdentityEmbedder
    inverter: Inverter
    dims: Dims

    def __post_init__(self):
        for name in ("generator", "text_encoder", "image_encoder", "parser", "identity_embedder", "inverter"):
            comp = getattr(self, name)
            comp_dims = getattr(comp, "dims", None)
            if comp_dims is not None and comp_dims != self.dims:
                raise ConfigError(f"backend '{name}' built for {comp_dims}, bundle declares {self.dims}")


def toy_bundle(dims: Dims, seed: int) -> BackendBundle:
    """Build the full deterministic toy stack from a single seed.

    The image encoder and identity embedder are calibrated on the generator's
    output distribution; the inverter is the generator's matched
    pseudo-inverse.
    """
    # Components get well-separated seed offsets so their RNG streams never overlap.
    gen = ToyGenerator(dims, seed)
    return BackendBundle(
        generator=gen,
        text_encoder=ToyTextEncoder(dims, seed + 10),
        image_encoder=ToyImageEncoder(dims, seed + 20, calibrate_on=gen),
        parser=ToyFaceParser(dims),
        identity_embedder=ToyIdentityEmbedder(dims, seed + 30, calibrate_on=gen),
        inverter=ToyInverter(dims, seed + 40, generator=gen),
        dims=dims,
    )


def sample_latent(rng: np.random.Generator, dims: Dims) -> LatentCode:
    """Standard-normal latent draw, the toy-mode stand-in for dataset inversion."""
    return LatentCode(torch.from_numpy(rng.standard_normal((dims.n_layers, dims.latent_dim))).to(DTYPE))

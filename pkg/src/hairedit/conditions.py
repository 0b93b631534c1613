"""Unified condition representation for hairstyle and hair color edits.

A condition comes from a text prompt, from the hair region of a reference
image, or is explicitly absent.  Absence is a tagged variant, never a zero
vector, so no real embedding can collide with "no condition"; the mapper
interprets absence as identity modulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .core import (
    Embedding,
    Image,
    InputError,
    check_embedding,
)
from .backends import FaceParser, ImageEncoder, TextEncoder

KIND_TEXT = "text"
KIND_IMAGE = "image"
KIND_NONE = "none"

EMPTY_HAIR_MASK = "empty_hair_mask"


@dataclass(frozen=True)
class Condition:
    """One side (style or color) of a conditioning pair."""

    kind: str
    embedding: Embedding | None = None
    source: str = ""
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (KIND_TEXT, KIND_IMAGE, KIND_NONE):
            raise InputError(f"unknown condition kind {self.kind!r}")
        if self.kind == KIND_NONE:
            if self.embedding is not None:
                raise InputError("absent condition must not carry an embedding")
        else:
            if self.embedding is None:
                raise InputError(f"{self.kind} condition requires an embedding")
            check_embedding(self.embedding, unit=True)

    @property
    def present(self) -> bool:
        return self.kind != KIND_NONE


@dataclass(frozen=True)
class ConditionPair:
    """Style condition plus color condition; either side may be absent."""

    style: Condition
    color: Condition

    @property
    def task_type(self) -> str:
        if self.style.present and self.color.present:
            return "both"
        if self.style.present:
            return "style_only"
        if self.color.present:
            return "color_only"
        return "none"

    @property
    def any_present(self) -> bool:
        return self.style.present or self.color.present


def absent_condition() -> Condition:
    return Condition(kind=KIND_NONE)


def condition_from_text(text: str, encoder: TextEncoder) -> Condition:
    if not isinstance(text, str) or not text.strip():
        raise InputError("text condition must be a non-empty string")
    return Condition(kind=KIND_TEXT, embedding=encoder.encode(text), source=f"text:{text}")


def hair_masked(img: Image, parser: FaceParser) -> tuple[Image, bool]:
    """Zero out everything outside the hair region; report whether the mask is empty.

    The mask is treated as a constant (no gradient flows through it).
    """
    mask = parser.hair_mask(img)
    mask = mask.detach()
    return img * mask.unsqueeze(0), bool(mask.sum() == 0)


def condition_from_reference(
    img: Image,
    parser: FaceParser,
    encoder: ImageEncoder,
    source_id: str = "",
) -> Condition:
    """Encode the hair-masked reference image as a condition embedding.

    Reference conditions always encode the masked image (zero background,
    full frame) for both style and color roles.
    """
    masked, empty = hair_masked(img, parser)
    emb = encoder.encode(masked)
    flags = (EMPTY_HAIR_MASK,) if empty else ()
    label = source_id or "unnamed"
    return Condition(kind=KIND_IMAGE, embedding=emb, source=f"image:{label}", flags=flags)


@dataclass(frozen=True)
class PromptCorpus:
    """Curated hairstyle and hair color prompt lists shipped as package data."""

    hairstyles: tuple[str, ...]
    colors: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.hairstyles or not self.colors:
            raise InputError("prompt corpus needs both hairstyle and color sections")


def parse_prompt_corpus(text: str) -> PromptCorpus:
    sections: dict[str, list[str]] = {"hairstyle": [], "color": []}
    current: list[str] | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in sections:
                raise InputError(f"unknown corpus section {name!r}")
            current = sections[name]
            continue
        if current is None:
            raise InputError("corpus entries must appear under a [hairstyle] or [color] header")
        current.append(line)
    return PromptCorpus(hairstyles=tuple(sections["hairstyle"]), colors=tuple(sections["color"]))


def load_prompt_corpus(path: str | Path | None = None) -> PromptCorpus:
    if path is not None:
        return parse_prompt_corpus(Path(path).read_text())
    data = resources.files("hairedit").joinpath("data/prompt_corpus.txt").read_text()
    return parse_prompt_corpus(data)

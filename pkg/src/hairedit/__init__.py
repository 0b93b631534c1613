"""Conditional latent-space hair editing from text and reference images.

A mapper network predicts latent-code edits for a pretrained generator from
hairstyle/color conditions embedded in a shared text-image space.  All
pretrained-network roles are pluggable; the shipped backends are seeded
deterministic toys that make desk-scale training and verification fast and
exact.
"""

from .backends import BackendBundle, toy_bundle
from .conditions import Condition, ConditionPair, absent_condition, condition_from_reference, condition_from_text
from .config import RunConfig, TrainConfig, desk_config, load_config
from .core import Dims, LatentCode, LatentDelta, LatentPartition, interpolate_latent
from .editing import EditResult, edit, interpolation_sequence
from .losses import LossBreakdown, LossWeights
from .mapper import HairMapperParams, apply_edit, init_mapper_params, mapper_forward
from .training import train

__version__ = "0.1.0"

__all__ = [
    "BackendBundle",
    "Condition",
    "ConditionPair",
    "Dims",
    "EditResult",
    "HairMapperParams",
    "LatentCode",
    "LatentDelta",
    "LatentPartition",
    "LossBreakdown",
    "LossWeights",
    "RunConfig",
    "TrainConfig",
    "absent_condition",
    "apply_edit",
    "condition_from_reference",
    "condition_from_text",
    "desk_config",
    "edit",
    "init_mapper_params",
    "interpolate_latent",
    "interpolation_sequence",
    "load_config",
    "mapper_forward",
    "toy_bundle",
    "train",
]

"""Structured 2D latent space: per-identity UV latent maps plus bank utilities."""

from .bank import LatentBank, StructuredLatent
from .masks import (chart_label_map, dilate_mask, edit_mask, owner_label_map,
                    part_mask, parts_mask)
from .normstats import NormStats
from .ops import blend_parts, sample_uv

__all__ = [
    "LatentBank", "StructuredLatent",
    "chart_label_map", "dilate_mask", "edit_mask", "owner_label_map",
    "part_mask", "parts_mask",
    "NormStats",
    "blend_parts", "sample_uv",
]

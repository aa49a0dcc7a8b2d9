"""Synthetic dataset generation and image/latent persistence."""

from .dataset import DatasetManifest, FrameRecord, generate_dataset
from .images import load_png, read_pfm, save_png, to_uint8, write_pfm
from .synthetic import (
    SyntheticIdentity,
    make_identity,
    posed_capsules,
    reference_silhouette,
    render_reference,
    sample_pose,
)

__all__ = [
    "DatasetManifest",
    "FrameRecord",
    "SyntheticIdentity",
    "generate_dataset",
    "load_png",
    "make_identity",
    "posed_capsules",
    "read_pfm",
    "reference_silhouette",
    "render_reference",
    "sample_pose",
    "save_png",
    "to_uint8",
    "write_pfm",
]

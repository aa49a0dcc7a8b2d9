"""Latent-space editing workflows: composition, swaps, style transfer, inversion."""

from .editspec import EditSpec, run_edits
from .inversion import (InversionConfig, InversionDiverged, bank_mean, invert)
from .ops import compose, swap_part, transfer_style

__all__ = [
    "EditSpec", "run_edits",
    "InversionConfig", "InversionDiverged", "bank_mean", "invert",
    "compose", "swap_part", "transfer_style",
]

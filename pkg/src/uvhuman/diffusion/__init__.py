"""Latent diffusion: schedule, denoiser, sampling, part-aware refinement."""

from .denoiser import DenoiserConfig, denoise, init_denoiser, timestep_embedding
from .sampling import (
    ddim_sample,
    diff_render,
    diffusion_loss,
    generation_times,
    interpolate,
    part_refine,
    slerp,
)
from .schedule import NoiseSchedule, forward_noise
from .train import load_diffusion, save_diffusion, train_diffusion

__all__ = [
    "DenoiserConfig",
    "NoiseSchedule",
    "ddim_sample",
    "denoise",
    "diff_render",
    "diffusion_loss",
    "forward_noise",
    "generation_times",
    "init_denoiser",
    "interpolate",
    "part_refine",
    "slerp",
    "timestep_embedding",
    "train_diffusion",
    "save_diffusion",
    "load_diffusion",
]

"""Auto-decoder training: loss suite, discriminator, optimization loop."""

from .autodecoder import (
    FrameContext,
    TrainConfig,
    TrainingDiverged,
    evaluate_psnr,
    evaluate_recon,
    frame_losses,
    load_decoder,
    psnr,
    train_autodecoder,
)
from .discriminator import discriminate, init_discriminator
from .losses import (
    LOSS_REGISTRY,
    LossWeights,
    PerceptualProxy,
    adversarial_losses,
    downsample_area,
    loss_eikonal,
    loss_latent_l2,
    loss_latent_reg,
    loss_latent_tv,
    loss_perceptual,
    loss_pixel,
    loss_vol,
)

__all__ = [
    "LOSS_REGISTRY",
    "FrameContext",
    "LossWeights",
    "PerceptualProxy",
    "TrainConfig",
    "TrainingDiverged",
    "adversarial_losses",
    "discriminate",
    "downsample_area",
    "evaluate_psnr",
    "evaluate_recon",
    "frame_losses",
    "init_discriminator",
    "load_decoder",
    "loss_eikonal",
    "loss_latent_l2",
    "loss_latent_reg",
    "loss_latent_tv",
    "loss_perceptual",
    "loss_pixel",
    "loss_vol",
    "psnr",
    "train_autodecoder",
]

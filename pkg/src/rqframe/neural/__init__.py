"""Desk-scale U-shaped VAE with wavelet-truncated skip connections."""

from .model import (
    LatentSample,
    VaeConfig,
    VaeModel,
    decode,
    elbo_and_grad,
    elbo_loss,
    encode,
    init_model,
    kl_divergence,
    kl_monte_carlo,
    reparameterize,
)
from .smooth import SegmentationResult, VaeSmoother, segment_predict, vae_smooth
from .train import AdamConfig, TrainResult, calibrate, segment_train, train

__all__ = [
    "AdamConfig",
    "LatentSample",
    "SegmentationResult",
    "TrainResult",
    "VaeConfig",
    "VaeModel",
    "VaeSmoother",
    "calibrate",
    "decode",
    "elbo_and_grad",
    "elbo_loss",
    "encode",
    "init_model",
    "kl_divergence",
    "kl_monte_carlo",
    "reparameterize",
    "segment_predict",
    "segment_train",
    "train",
    "vae_smooth",
]

"""Riesz-Quincunx non-subsampled wavelet frames, framelets and RQ UNet-VAE."""

__version__ = "0.1.0"

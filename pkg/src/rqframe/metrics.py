"""Image quality metrics and noise injection."""

from __future__ import annotations

import numpy as np

from .errors import InfinitePsnr, ShapeMismatch
from .tensor import as_multiband

__all__ = ["psnr", "psnr_report", "ssim", "add_gaussian_noise", "mse"]


def _pair(reference, candidate):
    ref = as_multiband(reference)
    cand = as_multiband(candidate)
    if ref.shape != cand.shape:
        raise ShapeMismatch(f"reference {ref.shape} vs candidate {cand.shape}")
    return ref, cand


def mse(reference, candidate) -> float:
    ref, cand = _pair(reference, candidate)
    return float(np.mean((ref - cand) ** 2))


def psnr(reference, candidate, squared_peak: bool = False) -> float:
    """``10 log10(max(f) / MSE)``, or ``max(f)^2 / MSE`` with ``squared_peak``.

    Raises
    ------
    InfinitePsnr
        When the images are identical.
    """
    ref, cand = _pair(reference, candidate)
    err = float(np.mean((ref - cand) ** 2))
    if err == 0.0:
        raise InfinitePsnr("candidate equals reference")
    peak = float(ref.max())
    return 10.0 * np.log10((peak**2 if squared_peak else peak) / err)


def psnr_report(reference, candidate) -> dict[str, float]:
    """Both PSNR variants, with ``inf`` for identical images."""
    try:
        return {"psnr_max": psnr(reference, candidate), "psnr_max2": psnr(reference, candidate, True)}
    except InfinitePsnr:
        return {"psnr_max": float("inf"), "psnr_max2": float("inf")}


def ssim(reference, candidate) -> float:
    """Global-statistics SSIM with ``c1 = (0.01 r)^2`` and ``c2 = (0.03 r)^2``.

    ``r`` is the dynamic range ``max - min`` of the reference, or 1 when the
    reference is constant. ``c2`` enters both the numerator and the
    denominator, so identical images score exactly 1.
    """
    ref, cand = _pair(reference, candidate)
    r = float(ref.max() - ref.min()) or 1.0
    c1, c2 = (0.01 * r) ** 2, (0.03 * r) ** 2
    mx, my = ref.mean(), cand.mean()
    vx, vy = ref.var(), cand.var()
    cov = float(np.mean((ref - mx) * (cand - my)))
    num = (2 * mx * my + c1) * (2 * cov + c2)
    den = (mx**2 + my**2 + c1) * (vx + vy + c2)
    return float(num / den)


def add_gaussian_noise(f, sigma: float, seed: int) -> np.ndarray:
    """``f + sigma * eps`` with seeded standard normal ``eps``; no clipping."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    f = np.asarray(f, dtype=np.float64)
    if sigma == 0:
        return f.copy()
    return f + sigma * np.random.default_rng(seed).standard_normal(f.shape)

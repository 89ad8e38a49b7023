"""Inference with wavelet truncation of the skip planes.

Training never sees the truncation; at inference every skip plane is
replaced by its RQ shrinkage ``S(c, mu)`` before decoding. With ``mu = 0``
the shrinkage is the identity up to the reconstruction error of the bank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernels import KernelConfig
from ..prox import ProximalRule
from ..transform import RQSmoother
from . import layers as ly
from .model import VaeModel, _check_input, _decode, _encode

__all__ = [
    "skip_smoother",
    "vae_smooth",
    "VaeSmoother",
    "SegmentationResult",
    "binomial_accuracy",
    "segment_predict",
]


def skip_smoother(config: KernelConfig | None = None, prox: ProximalRule | None = None) -> RQSmoother:
    """RQ smoother for skip planes; banks are cached per plane resolution."""
    return RQSmoother(config or KernelConfig(), prox)


def _smoothed_skips(model, f, mu, smoother):
    skips, mean, logv = _encode(model, f, False, {})
    if mu > 0:
        skips = [np.stack([smoother(c, mu) for c in plane]) for plane in skips]
    return skips, mean, logv


def _eps(model, batch, rng):
    return rng.standard_normal((batch, model.config.latent_dim))


def vae_smooth(
    model: VaeModel,
    f,
    mu: float,
    seed: int = 0,
    smoother: RQSmoother | None = None,
) -> np.ndarray:
    """Encode, shrink every skip plane at threshold ``mu``, sample ``z`` and decode.

    Returns an array with the shape of ``f`` (batched or not).
    """
    f_in = np.asarray(f, dtype=np.float64)
    x = _check_input(model, f_in)
    if mu < 0:
        raise ValueError("mu must be >= 0")
    smoother = smoother or skip_smoother()
    skips, mean, logv = _smoothed_skips(model, x, mu, smoother)
    eps = _eps(model, x.shape[0], np.random.default_rng(seed))
    out = _decode(model, skips, mean + np.exp(0.5 * logv) * eps, False, {})
    return out[0] if f_in.ndim == 3 else out


class VaeSmoother:
    """Smoother ``S(x, mu) = vae_smooth(model, x, mu, seed)`` for the diffusion schemes.

    Single images ``(P, n1, n2)`` are accepted, so the model must have been
    built for that grid.
    """

    def __init__(self, model: VaeModel, seed: int = 0, smoother: RQSmoother | None = None):
        self.model = model
        self.seed = seed
        self.smoother = smoother or skip_smoother()

    def __call__(self, x, mu: float) -> np.ndarray:
        return vae_smooth(self.model, x, mu, self.seed, self.smoother)


@dataclass(frozen=True)
class SegmentationResult:
    """Prediction over ``n_runs`` latent draws.

    ``class_map`` is the per-pixel majority vote. With a ground truth,
    ``accuracy`` holds the per-pixel fraction of runs that match it and
    ``std`` the Normal-approximation ``sqrt(p (1 - p) / n)``; ``degenerate``
    flags ``n_runs = 1`` where that std carries no information.
    """

    class_map: np.ndarray
    runs: np.ndarray
    accuracy: np.ndarray | None
    std: np.ndarray | None
    degenerate: bool

    @property
    def mean_accuracy(self) -> float:
        if self.accuracy is None:
            raise ValueError("no ground truth was supplied")
        return float(self.accuracy.mean())

    def class_balanced_accuracy(self, truth) -> float:
        """Per-class mean of the pixel accuracy, averaged over classes present."""
        if self.accuracy is None:
            raise ValueError("no ground truth was supplied")
        truth = np.asarray(truth)
        vals = [self.accuracy[truth == k].mean() for k in np.unique(truth)]
        return float(np.mean(vals))


def binomial_accuracy(runs: np.ndarray, truth) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel hit rate ``p`` over runs (axis 0) and ``sqrt(p (1 - p) / n)``."""
    hits = np.asarray(runs) == np.asarray(truth)[None]
    p = hits.mean(axis=0)
    return p, np.sqrt(p * (1.0 - p) / hits.shape[0])


def segment_predict(
    model: VaeModel,
    f_noisy,
    mu: float,
    n_runs: int = 50,
    seed: int = 0,
    truth=None,
    smoother: RQSmoother | None = None,
) -> SegmentationResult:
    """Segment one image ``(P, n1, n2)`` with ``n_runs`` independent latent draws."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    x = _check_input(model, f_noisy)
    if x.shape[0] != 1:
        raise ValueError("segment_predict takes a single image")
    smoother = smoother or skip_smoother()
    skips, mean, logv = _smoothed_skips(model, x, mu, smoother)
    rng = np.random.default_rng(seed)
    runs = []
    for _ in range(n_runs):
        z = mean + np.exp(0.5 * logv) * _eps(model, 1, rng)
        recon = _decode(model, skips, z, False, {})
        logits, _ = ly.conv_forward(recon, model.params["seg.w"], model.params["seg.b"])
        runs.append(np.argmax(logits[0], axis=0))
    runs = np.stack(runs)
    K = model.config.classes
    votes = np.stack([(runs == k).sum(axis=0) for k in range(K)])
    class_map = np.argmax(votes, axis=0)
    acc = std = None
    if truth is not None:
        acc, std = binomial_accuracy(runs, truth)
        if n_runs == 1:
            std = np.zeros_like(acc)
    return SegmentationResult(class_map, runs, acc, std, n_runs == 1)

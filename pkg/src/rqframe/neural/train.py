"""Adam training of the autoencoder and the segmentation variant."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergedLoss, InvalidMask, ShapeMismatch
from . import layers as ly
from .model import VaeModel, _check_input, backward, elbo_and_grad, forward, kl_divergence

__all__ = [
    "AdamConfig",
    "Adam",
    "TrainResult",
    "train",
    "calibrate",
    "check_masks",
    "segmentation_loss_and_grad",
    "segment_train",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


class Adam:
    def __init__(self, params: dict[str, np.ndarray], cfg: AdamConfig | None = None):
        self.cfg = cfg or AdamConfig()
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        b1t = 1.0 - c.beta1**self.t
        b2t = 1.0 - c.beta2**self.t
        for k in params:
            g = grads[k]
            self.m[k] = c.beta1 * self.m[k] + (1 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1 - c.beta2) * g * g
            params[k] -= c.lr * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + c.eps)


@dataclass
class TrainResult:
    model: VaeModel
    losses: list[float] = field(default_factory=list)


def _dataset(model, data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 4 or arr.shape[0] == 0:
        raise ShapeMismatch(f"dataset must be a non-empty (N, P, n1, n2) array, got {arr.shape}")
    return _check_input(model, arr)


def calibrate(model: VaeModel, data) -> VaeModel:
    """Freeze batchnorm statistics at their population values on ``data``.

    Stages are calibrated in forward order so later stages see the frozen
    statistics of earlier ones. The latent draw uses the mean.
    """
    data = _dataset(model, data)
    eps = np.zeros((data.shape[0], model.config.latent_dim))
    model.bn_stats = {}
    for name in [k[:-2] for k in model.params if k.endswith(".g")]:
        _, caches = forward(model, data, eps, train=False)
        x = caches[name + ":in"]
        model.bn_stats[name] = (x.mean(axis=(0, 2, 3)), x.var(axis=(0, 2, 3)))
    return model


def _check_finite(value: float, epoch: int) -> None:
    if not np.isfinite(value):
        raise DivergedLoss(f"non-finite loss at epoch {epoch}")


def train(
    model: VaeModel,
    data,
    epochs: int,
    batch_size: int = 16,
    optimizer: AdamConfig | None = None,
    seed: int = 0,
) -> TrainResult:
    """Minibatch Adam on the ELBO; returns a trained copy and the per-step losses.

    Batches are reshuffled every epoch with a generator seeded by ``seed``,
    which also draws the latent noise. Batchnorm statistics are frozen on
    the full dataset at the end.
    """
    data = _dataset(model, data)
    model = model.copy()
    if epochs <= 0:
        return TrainResult(model)
    rng = np.random.default_rng(seed)
    opt = Adam(model.params, optimizer)
    losses: list[float] = []
    n = data.shape[0]
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = data[order[start : start + batch_size]]
            eps = rng.standard_normal((batch.shape[0], model.config.latent_dim))
            (total, recon, kl), grads, _ = elbo_and_grad(model, batch, eps)
            _check_finite(total, epoch)
            opt.step(model.params, grads)
            losses.append(total / batch.shape[0])
        log.debug("epoch %d loss %.4f", epoch, losses[-1])
    calibrate(model, data)
    return TrainResult(model, losses)


def check_masks(masks) -> np.ndarray:
    """Validate one-hot masks of shape ``(N, K, n1, n2)``."""
    m = np.asarray(masks, dtype=np.float64)
    if m.ndim != 4:
        raise InvalidMask(f"masks must have shape (N, K, n1, n2), got {m.shape}")
    if not (np.all((m == 0) | (m == 1)) and np.allclose(m.sum(axis=1), 1.0)):
        raise InvalidMask("mask entries must be one-hot over the class axis")
    return m


def segmentation_loss_and_grad(model: VaeModel, batch, masks, eps, n_total: int, train: bool = True):
    """``sum KL - H(mask, logits) / (2 sigma^2 n_total)`` and its gradient.

    ``H`` is the summed log-softmax probability of the true class, so the
    second term is a scaled cross-entropy (nonnegative).
    """
    f = _check_input(model, batch)
    out, caches = forward(model, f, eps, train, segment=True)
    logp = ly.log_softmax(out["logits"], axis=1)
    scale = 1.0 / (2.0 * model.config.sigma**2 * n_total)
    H = float(np.sum(masks * logp))
    kl = float(np.sum(kl_divergence(out["mean"], out["logv"])))
    total = kl - scale * H
    # d(-H)/dlogits = softmax - mask (masks sum to one per pixel)
    dlogits = scale * (np.exp(logp) - masks)
    grads = backward(
        model, out, caches, None, out["mean"], 0.5 * (np.exp(out["logv"]) - 1.0), dlogits
    )
    return (total, kl, -H), grads, out


def segment_train(
    model: VaeModel,
    data,
    masks,
    epochs: int,
    batch_size: int = 16,
    optimizer: AdamConfig | None = None,
    seed: int = 0,
) -> TrainResult:
    """Train encoder, decoder and segmentation head on ``(image, one-hot mask)`` pairs."""
    data = _dataset(model, data)
    masks = check_masks(masks)
    if masks.shape[0] != data.shape[0] or masks.shape[1] != model.config.classes:
        raise ShapeMismatch(f"masks {masks.shape} vs data {data.shape} and K={model.config.classes}")
    model = model.copy()
    if epochs <= 0:
        return TrainResult(model)
    rng = np.random.default_rng(seed)
    opt = Adam(model.params, optimizer)
    losses: list[float] = []
    n = data.shape[0]
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            eps = rng.standard_normal((idx.size, model.config.latent_dim))
            (total, _, _), grads, _ = segmentation_loss_and_grad(model, data[idx], masks[idx], eps, n)
            _check_finite(total, epoch)
            opt.step(model.params, grads)
            losses.append(total)
    calibrate(model, data)
    return TrainResult(model, losses)

"""Desk-scale U-shaped variational autoencoder in plain numpy.

Layout at scale ``i = 1..I`` (channels ``C_i = 2**(i-1) * L``)::

    encoder  x -> conv -> relu -> conv -> relu -> batchnorm = skip c_i -> pool
    latent   vec(bottom) -> (mean, log_variance) -> z
    decoder  s_I = uvec(W_s z + b_s);  for j = I..1:
             [c_j, batchnorm(unpool(s_j))] -> conv -> relu -> conv -> relu = s_{j-1}
    head     relu(conv(s_0))            (P output bands)
    segment  conv(head output)          (K logits, optional)

Gradients are hand-written reverse mode, see :func:`backward`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import BadConfig, BadShape, NonPositiveSigma
from . import layers as ly

__all__ = [
    "VaeConfig",
    "VaeModel",
    "init_model",
    "encode",
    "reparameterize",
    "decode",
    "forward",
    "backward",
    "kl_divergence",
    "kl_monte_carlo",
    "elbo_loss",
    "elbo_and_grad",
    "LatentSample",
]


@dataclass(frozen=True)
class VaeConfig:
    """Network hyperparameters.

    ``sigma`` is the observation noise of the likelihood and ``classes``
    the number of segmentation classes (0 disables the segmentation head).
    """

    bands: int = 3
    depth: int = 2
    base_channels: int = 4
    latent_dim: int = 16
    n1: int = 32
    n2: int = 32
    kernel_size: int = 3
    sigma: float = 0.1
    classes: int = 0
    head_bias: float = 0.5

    def __post_init__(self):
        if self.sigma <= 0:
            raise NonPositiveSigma(f"sigma must be > 0, got {self.sigma}")
        for name in ("bands", "depth", "base_channels", "latent_dim", "kernel_size"):
            if getattr(self, name) < 1:
                raise BadConfig(f"{name} must be >= 1")
        if self.classes < 0:
            raise BadConfig("classes must be >= 0")
        step = 2 ** (self.depth + 1)
        if self.n1 % step or self.n2 % step:
            raise BadShape(f"image dims {(self.n1, self.n2)} must be divisible by 2^(I+1) = {step}")

    def channels(self, i: int) -> int:
        return 2 ** (i - 1) * self.base_channels

    @property
    def bottom_shape(self) -> tuple[int, int, int]:
        s = 2**self.depth
        return (self.channels(self.depth), self.n1 // s, self.n2 // s)

    @property
    def bottom_size(self) -> int:
        c, a, b = self.bottom_shape
        return c * a * b


@dataclass
class VaeModel:
    """Parameters plus frozen batchnorm statistics (set by calibration)."""

    config: VaeConfig
    params: dict[str, np.ndarray]
    bn_stats: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def copy(self) -> "VaeModel":
        return VaeModel(
            self.config,
            {k: v.copy() for k, v in self.params.items()},
            {k: (m.copy(), v.copy()) for k, (m, v) in self.bn_stats.items()},
        )

    def config_dict(self) -> dict:
        return asdict(self.config)


@dataclass(frozen=True)
class LatentSample:
    z: np.ndarray
    mean: np.ndarray
    log_variance: np.ndarray
    epsilon_seed: int | None


def _glorot(rng, shape, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)


def init_model(config: VaeConfig, seed: int = 0) -> VaeModel:
    """Glorot-uniform weights, zero biases, unit batchnorm scales."""
    rng = np.random.default_rng(seed)
    k = config.kernel_size
    p: dict[str, np.ndarray] = {}

    def conv(name, q, c):
        p[name + ".w"] = _glorot(rng, (q, c, k, k), c * k * k, q * k * k)
        p[name + ".b"] = np.zeros(q)

    def bn(name, c):
        p[name + ".g"] = np.ones(c)
        p[name + ".b"] = np.zeros(c)

    c_in = config.bands
    for i in range(1, config.depth + 1):
        c = config.channels(i)
        conv(f"enc{i}.c1", c, c_in)
        conv(f"enc{i}.c2", c, c)
        bn(f"enc{i}.bn", c)
        c_in = c
    F, d = config.bottom_size, config.latent_dim
    for name in ("lat.mu", "lat.lv"):
        p[name + ".W"] = _glorot(rng, (d, F), F, d)
        p[name + ".b"] = np.zeros(d)
    p["dec.s.W"] = _glorot(rng, (F, d), d, F)
    p["dec.s.b"] = np.zeros(F)
    for j in range(config.depth, 0, -1):
        c = config.channels(j)
        out = config.channels(max(j - 1, 1))
        bn(f"dec{j}.bn", c)
        conv(f"dec{j}.c2", c, 2 * c)
        conv(f"dec{j}.c1", out, c)
    conv("head", config.bands, config.base_channels)
    # a positive bias keeps the final relu active at initialization
    p["head.b"] = np.full(config.bands, config.head_bias)
    if config.classes:
        conv("seg", config.classes, config.bands)
    return VaeModel(config, p)


def _check_input(model: VaeModel, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 3:
        f = f[None]
    cfg = model.config
    if f.ndim != 4 or f.shape[1:] != (cfg.bands, cfg.n1, cfg.n2):
        raise BadShape(f"expected (B, {cfg.bands}, {cfg.n1}, {cfg.n2}), got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("input contains NaN or Inf")
    return f


def _bn(model, name, x, train, caches):
    stats = None
    if not train:
        c = x.shape[1]
        stats = model.bn_stats.get(name, (np.zeros(c), np.ones(c)))
    out, cache = ly.batchnorm_forward(x, model.params[name + ".g"], model.params[name + ".b"], stats)
    caches[name] = cache
    caches[name + ":in"] = x
    return out


def _conv_relu(model, name, x, caches):
    h, c = ly.conv_forward(x, model.params[name + ".w"], model.params[name + ".b"])
    a, m = ly.relu_forward(h)
    caches[name] = (c, m)
    return a


def _encode(model, f, train, caches):
    cfg = model.config
    skips = []
    x = f
    for i in range(1, cfg.depth + 1):
        x = _conv_relu(model, f"enc{i}.c1", x, caches)
        x = _conv_relu(model, f"enc{i}.c2", x, caches)
        x = _bn(model, f"enc{i}.bn", x, train, caches)
        skips.append(x)
        x = ly.pool_forward(x)
    mean, caches["lat.mu"] = ly.affine_forward(x, model.params["lat.mu.W"], model.params["lat.mu.b"])
    logv, caches["lat.lv"] = ly.affine_forward(x, model.params["lat.lv.W"], model.params["lat.lv.b"])
    return skips, mean, logv


def _decode(model, skips, z, train, caches):
    cfg = model.config
    s, caches["dec.s"] = ly.affine_forward(z, model.params["dec.s.W"], model.params["dec.s.b"])
    s = s.reshape((z.shape[0],) + cfg.bottom_shape)
    for j in range(cfg.depth, 0, -1):
        u = _bn(model, f"dec{j}.bn", ly.unpool_forward(s), train, caches)
        x = np.concatenate([skips[j - 1], u], axis=1)
        x = _conv_relu(model, f"dec{j}.c2", x, caches)
        s = _conv_relu(model, f"dec{j}.c1", x, caches)
    return _conv_relu(model, "head", s, caches)


def encode(model: VaeModel, f, train: bool = False):
    """Skip planes ``[c_1..c_I]`` (each ``(B, C_i, ., .)``), latent mean and log-variance."""
    return _encode(model, _check_input(model, f), train, {})


def reparameterize(mean, log_variance, seed=None, eps=None) -> LatentSample:
    """``z = mean + exp(log_variance / 2) * eps`` with seeded standard normal ``eps``."""
    mean = np.asarray(mean, dtype=np.float64)
    log_variance = np.asarray(log_variance, dtype=np.float64)
    if eps is None:
        eps = np.random.default_rng(seed).standard_normal(mean.shape)
    z = mean + np.exp(0.5 * log_variance) * eps
    return LatentSample(z, mean, log_variance, seed)


def decode(model: VaeModel, skips, z, train: bool = False) -> np.ndarray:
    cfg = model.config
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    for i, c in enumerate(skips, start=1):
        s = 2 ** (i - 1)
        want = (z.shape[0], cfg.channels(i), cfg.n1 // s, cfg.n2 // s)
        if c.shape != want:
            raise BadShape(f"skip {i} has shape {c.shape}, expected {want}")
    if z.shape[1] != cfg.latent_dim:
        raise BadShape(f"latent dim {z.shape[1]} vs {cfg.latent_dim}")
    return _decode(model, list(skips), z, train, {})


def forward(model: VaeModel, f, eps, train: bool = True, skip_map=None, segment: bool = False):
    """Full pass returning ``(outputs, caches)``.

    ``outputs`` holds ``recon``, ``mean``, ``logv``, ``z``, ``eps`` and,
    with ``segment``, the class ``logits``. ``skip_map`` transforms the
    skip planes before decoding (not differentiated).
    """
    f = _check_input(model, f)
    caches: dict = {}
    skips, mean, logv = _encode(model, f, train, caches)
    if skip_map is not None:
        skips = [skip_map(c) for c in skips]
    eps = np.asarray(eps, dtype=np.float64).reshape(mean.shape)
    std = np.exp(0.5 * logv)
    z = mean + std * eps
    recon = _decode(model, skips, z, train, caches)
    out = {"recon": recon, "mean": mean, "logv": logv, "z": z, "eps": eps, "std": std}
    if segment:
        if not model.config.classes:
            raise BadConfig("model has no segmentation head")
        logits, caches["seg"] = ly.conv_forward(recon, model.params["seg.w"], model.params["seg.b"])
        out["logits"] = logits
    return out, caches


def _conv_relu_back(grads, name, dout, caches):
    c, m = caches[name]
    dx, grads[name + ".w"], grads[name + ".b"] = ly.conv_backward(ly.relu_backward(dout, m), c)
    return dx


def _bn_back(grads, name, dout, caches):
    dx, grads[name + ".g"], grads[name + ".b"] = ly.batchnorm_backward(dout, caches[name])
    return dx


def backward(model: VaeModel, out, caches, drecon, dmean=None, dlogv=None, dlogits=None):
    """Reverse pass; returns a gradient per parameter name."""
    cfg = model.config
    grads: dict[str, np.ndarray] = {}
    if dlogits is not None:
        dx, grads["seg.w"], grads["seg.b"] = ly.conv_backward(dlogits, caches["seg"])
        drecon = dx if drecon is None else drecon + dx
    ds = _conv_relu_back(grads, "head", drecon, caches)
    dskips = [None] * cfg.depth
    for j in range(1, cfg.depth + 1):
        dx = _conv_relu_back(grads, f"dec{j}.c1", ds, caches)
        dx = _conv_relu_back(grads, f"dec{j}.c2", dx, caches)
        c = cfg.channels(j)
        dskips[j - 1] = dx[:, :c]
        ds = ly.unpool_backward(_bn_back(grads, f"dec{j}.bn", dx[:, c:], caches))
    dz, grads["dec.s.W"], grads["dec.s.b"] = ly.affine_backward(ds.reshape(ds.shape[0], -1), caches["dec.s"])
    # z = mean + exp(logv / 2) * eps
    dm = dz + (0.0 if dmean is None else dmean)
    dlv = dz * out["eps"] * out["std"] * 0.5 + (0.0 if dlogv is None else dlogv)
    dbot, grads["lat.mu.W"], grads["lat.mu.b"] = ly.affine_backward(dm, caches["lat.mu"])
    dbot2, grads["lat.lv.W"], grads["lat.lv.b"] = ly.affine_backward(dlv, caches["lat.lv"])
    dx = dbot + dbot2
    for i in range(cfg.depth, 0, -1):
        dx = ly.pool_backward(dx) + dskips[i - 1]
        dx = _bn_back(grads, f"enc{i}.bn", dx, caches)
        dx = _conv_relu_back(grads, f"enc{i}.c2", dx, caches)
        dx = _conv_relu_back(grads, f"enc{i}.c1", dx, caches)
    for k, v in model.params.items():
        if k not in grads:
            grads[k] = np.zeros_like(v)
    return grads


def kl_divergence(mean, log_variance) -> np.ndarray:
    """Closed-form ``KL(N(mean, diag(exp(log_variance))) || N(0, I))`` per row."""
    mean = np.atleast_2d(np.asarray(mean, dtype=np.float64))
    lv = np.atleast_2d(np.asarray(log_variance, dtype=np.float64))
    d = mean.shape[1]
    return 0.5 * (np.sum(mean**2, axis=1) - d + np.sum(np.exp(lv) - lv, axis=1))


def kl_monte_carlo(mean, variance, n: int = 10**6, seed: int = 0) -> float:
    """Monte Carlo estimate of ``E_q[log q(z) - log p(z)]`` for one Gaussian."""
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    var = np.atleast_1d(np.asarray(variance, dtype=np.float64))
    rng = np.random.default_rng(seed)
    z = mean + np.sqrt(var) * rng.standard_normal((n, mean.size))
    log_q = -0.5 * np.sum((z - mean) ** 2 / var + np.log(2 * np.pi * var), axis=1)
    log_p = -0.5 * np.sum(z**2 + np.log(2 * np.pi), axis=1)
    return float(np.mean(log_q - log_p))


def _elbo_terms(model, f, out):
    sigma = model.config.sigma
    resid = f - out["recon"]
    recon = 0.5 / sigma**2 * float(np.sum(resid**2))
    kl = float(np.sum(kl_divergence(out["mean"], out["logv"])))
    return recon, kl, resid


def elbo_loss(model: VaeModel, batch, eps=None, seed=None, train: bool = True):
    """``(total, recon_term, kl_term)`` summed over the batch.

    ``recon_term = ||f - D||^2 / (2 sigma^2)`` with a single draw of ``eps``
    (given, or drawn from ``seed``).
    """
    f = _check_input(model, batch)
    if eps is None:
        eps = np.random.default_rng(seed).standard_normal((f.shape[0], model.config.latent_dim))
    out, _ = forward(model, f, eps, train)
    recon, kl, _ = _elbo_terms(model, f, out)
    return recon + kl, recon, kl


def elbo_and_grad(model: VaeModel, batch, eps, train: bool = True):
    """Loss terms and the gradient of the total for a fixed ``eps``."""
    f = _check_input(model, batch)
    out, caches = forward(model, f, eps, train)
    recon, kl, resid = _elbo_terms(model, f, out)
    drecon = -resid / model.config.sigma**2
    dmean = out["mean"]
    dlogv = 0.5 * (np.exp(out["logv"]) - 1.0)
    grads = backward(model, out, caches, drecon, dmean, dlogv)
    return (recon + kl, recon, kl), grads, out

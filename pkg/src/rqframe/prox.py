"""Proximal operators and the Moreau-Yosida envelope.

The rules cover the penalties used by the smoothing schemes: the l1 norm
(soft threshold), the l0 count (hard threshold), the implicit penalty whose
prox is ReLU, and the zero penalty (identity).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroMu

__all__ = [
    "ProximalRule",
    "prox_apply",
    "moreau_gradient",
    "moreau_envelope",
    "PROX_KINDS",
]

PROX_KINDS = ("soft", "hard", "relu", "identity")
_ALIASES = {"soft_threshold": "soft", "hard_threshold": "hard"}


@dataclass(frozen=True)
class ProximalRule:
    """Elementwise proximal rule.

    Parameters
    ----------
    kind : {'soft', 'hard', 'relu', 'identity'}
        ``'soft_threshold'`` and ``'hard_threshold'`` are accepted aliases.
    threshold : float
        Non-negative threshold mu; ignored by ``relu`` and ``identity``.
    """

    kind: str = "soft"
    threshold: float = 0.0

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in PROX_KINDS:
            raise ValueError(f"unknown prox kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not np.isfinite(self.threshold) or self.threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")
        object.__setattr__(self, "threshold", float(self.threshold))

    def with_threshold(self, mu: float) -> "ProximalRule":
        return ProximalRule(self.kind, mu)


def prox_apply(rule: ProximalRule, x) -> np.ndarray:
    """Apply ``rule`` elementwise to ``x``."""
    x = np.asarray(x, dtype=np.float64)
    mu = rule.threshold
    if rule.kind == "soft":
        return np.sign(x) * np.maximum(np.abs(x) - mu, 0.0)
    if rule.kind == "hard":
        return np.where(np.abs(x) > mu, x, 0.0)
    if rule.kind == "relu":
        return np.maximum(x, 0.0)
    return x.copy()


def moreau_gradient(rule: ProximalRule, mu: float, x) -> np.ndarray:
    """Gradient ``(x - prox_{mu P}(x)) / mu`` of the Moreau envelope."""
    if mu <= 0:
        raise ZeroMu("moreau_gradient needs mu > 0")
    x = np.asarray(x, dtype=np.float64)
    return (x - prox_apply(rule.with_threshold(mu), x)) / mu


def _penalty(kind: str, u: np.ndarray) -> np.ndarray:
    if kind == "soft":
        return np.abs(u)
    if kind == "hard":
        # the scaled l0 penalty mu/2 * 1[u != 0] has prox = hard threshold at mu;
        # returned unscaled here, moreau_envelope applies the factor
        return (u != 0).astype(np.float64)
    if kind == "relu":
        # indicator of the non-negative orthant
        return np.where(u >= 0, 0.0, np.inf)
    return np.zeros_like(u)


def moreau_envelope(rule: ProximalRule, mu: float, x) -> np.ndarray:
    """Envelope value ``P(p) + |p - x|^2 / (2 mu)`` at ``p = prox(x)``."""
    if mu <= 0:
        raise ZeroMu("moreau_envelope needs mu > 0")
    x = np.asarray(x, dtype=np.float64)
    p = prox_apply(rule.with_threshold(mu), x)
    pen = _penalty(rule.kind, p)
    if rule.kind == "hard":
        pen = pen * mu / 2.0
    return pen + (p - x) ** 2 / (2.0 * mu)

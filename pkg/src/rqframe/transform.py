"""Non-subsampled Riesz-Quincunx analysis, synthesis and shrinkage.

Convolutions are circular and realized by multiplying DFTs with the filter
bank spectra. Analysis correlates with the dual filters
(``c = idft2(conj(phi~) F)``); synthesis convolves with the primal ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BankMismatch, DimensionMismatch
from .kernels import FilterBank, KernelConfig, build_filterbank
from .prox import ProximalRule, prox_apply
from .tensor import as_multiband, idft2

__all__ = [
    "WaveletCoefficients",
    "analyze",
    "synthesize",
    "shrink_smooth",
    "RQSmoother",
]


@dataclass(frozen=True, eq=False)
class WaveletCoefficients:
    """Scaling and wavelet coefficient planes of a multi-band image.

    Attributes
    ----------
    scaling : ndarray, shape (P, n1, n2)
    wavelet : ndarray, shape (I + 1, L + 1, P, n1, n2)
    bank_id : str
    """

    scaling: np.ndarray
    wavelet: np.ndarray
    bank_id: str

    def with_wavelet(self, wavelet: np.ndarray) -> "WaveletCoefficients":
        return WaveletCoefficients(self.scaling, wavelet, self.bank_id)


def _check_dims(f: np.ndarray, bank: FilterBank) -> None:
    if f.shape[-2:] != bank.shape:
        raise DimensionMismatch(f"image {f.shape[-2:]} vs bank {bank.shape}")


def analyze(f, bank: FilterBank) -> WaveletCoefficients:
    """Correlate every band with the dual scaling and wavelet filters."""
    f = as_multiband(f)
    _check_dims(f, bank)
    F = np.fft.fft2(f)
    scaling = idft2(np.conj(bank.scaling_dual) * F)
    wavelet = idft2(np.conj(bank.wavelet_dual)[:, :, None] * F[None, None])
    return WaveletCoefficients(scaling, wavelet, bank.bank_id)


def synthesize(coeffs: WaveletCoefficients, bank: FilterBank) -> np.ndarray:
    """Reassemble ``phi * C + sum psi_il * D_il`` in the Fourier domain."""
    if coeffs.bank_id != bank.bank_id:
        raise BankMismatch("coefficients were produced by a different bank")
    if coeffs.scaling.shape[-2:] != bank.shape or coeffs.wavelet.shape[-2:] != bank.shape:
        raise DimensionMismatch("coefficient planes do not match the bank grid")
    if coeffs.wavelet.shape[:2] != bank.wavelet_primal.shape[:2]:
        raise BankMismatch("coefficient scale/channel layout differs from the bank")
    spec = bank.scaling_primal * np.fft.fft2(coeffs.scaling)
    W = np.fft.fft2(coeffs.wavelet)
    spec = spec + np.einsum("ilxy,ilpxy->pxy", bank.wavelet_primal, W)
    return idft2(spec)


def shrink_smooth(f, bank: FilterBank, mu: float, prox: ProximalRule | None = None) -> np.ndarray:
    """Shrink wavelet coefficients with ``prox`` at threshold ``mu``.

    Scaling coefficients pass through unchanged. ``mu = 0`` reproduces
    ``f`` up to the reconstruction error of the bank.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    rule = (prox or ProximalRule("soft")).with_threshold(mu)
    c = analyze(f, bank)
    return synthesize(c.with_wavelet(prox_apply(rule, c.wavelet)), bank)


class RQSmoother:
    """Smoother ``S(x, mu)`` backed by a cached RQ filter bank per grid size.

    Parameters
    ----------
    config : KernelConfig
    prox : ProximalRule, optional
        Rule whose kind is used; the threshold comes from ``mu``.
    """

    def __init__(self, config: KernelConfig | None = None, prox: ProximalRule | None = None):
        self.config = config or KernelConfig()
        self.prox = prox or ProximalRule("soft")
        self._banks: dict[tuple[int, int], FilterBank] = {}

    def bank(self, n1: int, n2: int) -> FilterBank:
        key = (n1, n2)
        if key not in self._banks:
            self._banks[key] = build_filterbank(self.config, n1, n2)
        return self._banks[key]

    def __call__(self, x, mu: float) -> np.ndarray:
        x = as_multiband(x)
        return shrink_smooth(x, self.bank(*x.shape[-2:]), mu, self.prox)

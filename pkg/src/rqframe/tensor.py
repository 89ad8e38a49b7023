"""Raster containers, validators and the 2D DFT.

Arrays are plain ``numpy.float64`` arrays with these conventions:

* ``Image2D``        shape ``(n1, n2)``
* ``MultiBandImage`` shape ``(P, n1, n2)``  (band first)
* ``ImageSeries``    shape ``(T, P, n1, n2)``
* ``Spectrum2D``     complex ``(n1, n2)`` on the standard DFT grid

The validators return a read-only float64 copy so values behave as
immutable once they enter the library.
"""

from __future__ import annotations

import numpy as np

from .errors import NonHermitianSpectrum, ShapeMismatch

__all__ = [
    "as_image",
    "as_multiband",
    "as_series",
    "dft2",
    "idft2",
    "frequency_grid",
    "hermitian_part",
    "enforce_hermitian",
    "HERMITIAN_RTOL",
]

# imaginary residue allowed by idft2, relative to max|real| + 1
HERMITIAN_RTOL = 1e-9


def _finite_float(x, ndim: int, name: str) -> np.ndarray:
    arr = np.array(x, dtype=np.float64)
    if arr.ndim != ndim:
        raise ShapeMismatch(f"{name} must have {ndim} dims, got shape {arr.shape}")
    if arr.size == 0 or min(arr.shape) < 1:
        raise ShapeMismatch(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    arr.flags.writeable = False
    return arr


def as_image(x) -> np.ndarray:
    """Validate a gray image of shape ``(n1, n2)``."""
    return _finite_float(x, 2, "Image2D")


def as_multiband(x) -> np.ndarray:
    """Validate a multi-band image; a 2D array is promoted to one band."""
    arr = np.asarray(x)
    if arr.ndim == 2:
        arr = arr[None]
    return _finite_float(arr, 3, "MultiBandImage")


def as_series(x) -> np.ndarray:
    """Validate an image series of shape ``(T, P, n1, n2)``."""
    return _finite_float(x, 4, "ImageSeries")


def dft2(img) -> np.ndarray:
    """2D DFT over the last two axes (unnormalized forward transform)."""
    return np.fft.fft2(np.asarray(img, dtype=np.float64))


def idft2(spec, check: bool = True) -> np.ndarray:
    """Inverse 2D DFT over the last two axes, returning the real part.

    Raises
    ------
    NonHermitianSpectrum
        If ``check`` and the imaginary residue exceeds
        ``HERMITIAN_RTOL * (max|real| + 1)``.
    """
    out = np.fft.ifft2(spec)
    if check:
        bound = HERMITIAN_RTOL * (np.max(np.abs(out.real), initial=0.0) + 1.0)
        resid = np.max(np.abs(out.imag), initial=0.0)
        if resid > bound:
            raise NonHermitianSpectrum(
                f"imaginary residue {resid:.3e} exceeds {bound:.3e}"
            )
    return np.ascontiguousarray(out.real)


def frequency_grid(n1: int, n2: int) -> tuple[np.ndarray, np.ndarray]:
    """Angular DFT frequencies ``(w1, w2)`` with shape ``(n1, n2)``.

    Bin ``k`` along an axis of length ``n`` maps to ``2*pi*k/n`` folded
    into ``(-pi, pi]``; the Nyquist bin of an even axis is ``+pi``.
    """
    def axis(n):
        w = 2.0 * np.pi * np.fft.fftfreq(n)
        w[np.isclose(w, -np.pi)] = np.pi
        return w

    return np.meshgrid(axis(n1), axis(n2), indexing="ij")


def hermitian_part(spec: np.ndarray) -> np.ndarray:
    """Project a spectrum onto conjugate-symmetric spectra.

    Returns ``(F[k] + conj(F[-k])) / 2`` over the last two axes, whose
    inverse DFT is exactly real.
    """
    flipped = np.roll(np.flip(spec, axis=(-2, -1)), 1, axis=(-2, -1))
    return 0.5 * (spec + np.conj(flipped))


def _mirror_index(n1: int, n2: int):
    k1, k2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    return k1, k2, (-k1) % n1, (-k2) % n2


def enforce_hermitian(spec: np.ndarray) -> np.ndarray:
    """Make a sampled spectrum exactly conjugate-symmetric without averaging.

    Of each bin pair ``(k, -k)`` the lexicographically smaller bin keeps its
    value and the mirror gets its conjugate. Self-conjugate bins (DC and the
    Nyquist corners) get the real value ``sign(Re F) |F|``, with sign +1
    when ``Re F`` is zero, so magnitudes are never cancelled.

    This matters on even-sized grids where the Nyquist line samples ``+pi``
    for both members of a pair: averaging there can cancel a filter whose
    phase is not 2 pi-periodic.
    """
    spec = np.asarray(spec, dtype=np.complex128)
    n1, n2 = spec.shape[-2:]
    k1, k2, m1, m2 = _mirror_index(n1, n2)
    lin, mir = k1 * n2 + k2, m1 * n2 + m2
    out = np.where(lin <= mir, spec, np.conj(spec[..., m1, m2]))
    self_conj = lin == mir
    sgn = np.where(np.real(spec) < 0, -1.0, 1.0)
    return np.where(self_conj, sgn * np.abs(spec), out)

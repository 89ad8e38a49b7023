"""Periodic Hankel lifts, Hankel-matrix convolutions and framelets.

Index conventions are 0-based and periodic:

* ``H_d(f_i)[k, j] = f_i[(k + j) mod n1]`` for a column ``f_i``;
* the extended lift stacks the per-column blocks side by side,
  ``lift[k, i * d1 + j] = f[(k + j) mod n1, i]``;
* vectorization is column-major, ``vec(f)[i * n1 + j] = f[j, i]``.

The Hankel path is the reference realization of the algebra (cost
``O(n1 n2 d1 d2)``); the network and the transform use the equivalent
fast paths that are cross-checked against it in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadPatchSize, BandCountMismatch, ShapeMismatch, UnityViolation
from .tensor import as_image

__all__ = [
    "hankel_lift",
    "hankel_pinv",
    "filter_matrix",
    "conv2_via_hankel",
    "conv2_direct",
    "conv_family",
    "conv_family_adjoint",
    "conv_iso",
    "conv_iso_adjoint",
    "conv_iso_kernel_grad",
    "FrameletBases",
    "framelet_decompose",
    "framelet_reconstruct",
    "operator_matrix",
    "rq_framelet_bases",
    "rq_matrix_unity",
]


def hankel_lift(f, d1: int) -> np.ndarray:
    """Extended periodic Hankel lift of shape ``(n1, n2 * d1)``."""
    f = as_image(f)
    n1, n2 = f.shape
    if not 1 <= d1 <= n1:
        raise BadPatchSize(f"patch width {d1} outside 1..{n1}")
    rows = (np.arange(n1)[:, None] + np.arange(d1)[None, :]) % n1  # (n1, d1)
    blocks = f[rows]  # (n1, d1, n2)
    return np.ascontiguousarray(blocks.transpose(0, 2, 1).reshape(n1, n2 * d1))


def hankel_pinv(g, d1: int) -> np.ndarray:
    """Least-squares inverse of :func:`hankel_lift`: average the anti-diagonals.

    Equals ``(1/sqrt(d1)) <e~_k, g_i>_F`` with the orthonormal Hankel basis
    ``e~_k = H_d1(e_k) / sqrt(d1)``, i.e. the mean of the ``d1`` entries of
    block ``i`` with ``(row + col) mod n1 = k``.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or d1 < 1 or g.shape[1] % d1:
        raise ShapeMismatch(f"cannot split shape {g.shape} into blocks of width {d1}")
    n1 = g.shape[0]
    if d1 > n1:
        raise ShapeMismatch(f"block width {d1} exceeds {n1} rows")
    n2 = g.shape[1] // d1
    blocks = g.reshape(n1, n2, d1)
    out = np.zeros((n1, n2))
    k = np.arange(n1)
    for j in range(d1):
        np.add.at(out, (k + j) % n1, blocks[:, :, j])
    return out / d1


def filter_matrix(kernel, n2: int) -> np.ndarray:
    """Matrix ``Phi`` of shape ``(n2 * d1, n2)`` with ``lift(f) @ Phi = f * kernel``.

    ``Phi[i * d1 + j1, r2] = kernel[j1, (i - r2) mod n2]`` when that column
    offset is below ``d2``, else 0.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    d1, d2 = kernel.shape
    if d2 > n2:
        raise BadPatchSize(f"kernel width {d2} exceeds image width {n2}")
    Phi = np.zeros((n2 * d1, n2))
    for r2 in range(n2):
        for j2 in range(d2):
            i = (r2 + j2) % n2
            Phi[i * d1 : (i + 1) * d1, r2] += kernel[:, j2]
    return Phi


def _check_kernel(f, kernel):
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] > f.shape[0] or kernel.shape[1] > f.shape[1]:
        raise BadPatchSize(f"kernel {kernel.shape} does not fit image {f.shape}")
    return kernel


def conv2_via_hankel(f, kernel, anchor: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Circular 2D filtering ``out[r] = sum_j kernel[j] f[r + j - anchor]``.

    Computed as ``H_{d1|n2}(f) @ Phi``; the output has the image's shape.
    ``anchor`` shifts the kernel origin (``(d1 // 2, d2 // 2)`` centres it).
    """
    f = as_image(f)
    kernel = _check_kernel(f, kernel)
    a1, a2 = anchor
    shifted = np.roll(f, (a1, a2), axis=(0, 1))
    return hankel_lift(shifted, kernel.shape[0]) @ filter_matrix(kernel, f.shape[1])


def conv2_direct(f, kernel, anchor: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Brute-force double sum with the same convention as :func:`conv2_via_hankel`."""
    f = as_image(f)
    kernel = _check_kernel(f, kernel)
    n1, n2 = f.shape
    out = np.zeros((n1, n2))
    for r1 in range(n1):
        for r2 in range(n2):
            acc = 0.0
            for j1 in range(kernel.shape[0]):
                for j2 in range(kernel.shape[1]):
                    acc += kernel[j1, j2] * f[(r1 + j1 - anchor[0]) % n1, (r2 + j2 - anchor[1]) % n2]
            out[r1, r2] = acc
    return out


def conv_family(f, kernels, anchor: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Apply every kernel of a family to one image; returns ``(P, n1, n2)``."""
    f = as_image(f)
    return np.stack([conv2_via_hankel(f, k, anchor) for k in kernels])


def _reversed(kernel, anchor):
    # adjoint of out[r] = sum_j k[j] f[r + j - a] is g -> sum_j k[j] g[r - j + a]
    kernel = np.asarray(kernel, dtype=np.float64)
    d1, d2 = kernel.shape
    return kernel[::-1, ::-1], (d1 - 1 - anchor[0], d2 - 1 - anchor[1])


def conv_family_adjoint(g, kernels, anchor: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Adjoint of :func:`conv_family`, using time-reversed kernels."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape[0] != len(kernels):
        raise BandCountMismatch(f"{g.shape[0]} planes vs {len(kernels)} kernels")
    out = np.zeros(g.shape[1:])
    for plane, k in zip(g, kernels):
        kr, ar = _reversed(k, anchor)
        out += conv2_via_hankel(plane, kr, ar)
    return out


# ---------------------------------------------------------------------------
# multi-channel convolution (fast path shared with the network)


def _patches(x: np.ndarray, d1: int, d2: int, anchor) -> np.ndarray:
    """Shifted copies ``x[..., r + j - anchor]`` stacked on a new axis -3/-4.

    ``x`` has shape ``(..., C, n1, n2)``; returns ``(..., C, d1, d2, n1, n2)``.
    """
    a1, a2 = anchor
    rows = []
    for j1 in range(d1):
        cols = []
        for j2 in range(d2):
            cols.append(np.roll(x, (a1 - j1, a2 - j2), axis=(-2, -1)))
        rows.append(np.stack(cols, axis=-3))
    return np.stack(rows, axis=-4)


def conv_iso(f, kernels, anchor: tuple[int, int] | None = None) -> np.ndarray:
    """Multi-channel circular convolution ``out_q = sum_p C_{theta_qp}(f_p)``.

    Parameters
    ----------
    f : ndarray, shape (P, n1, n2) or (B, P, n1, n2)
    kernels : ndarray, shape (Q, P, d1, d2)
    anchor : (int, int), optional
        Kernel origin; defaults to ``(0, 0)``.
    """
    f = np.asarray(f, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.ndim != 4:
        raise BadPatchSize("kernel family must have shape (Q, P, d1, d2)")
    Q, P, d1, d2 = kernels.shape
    if f.ndim not in (3, 4) or f.shape[-3] != P:
        raise BandCountMismatch(f"image bands {f.shape[-3:-2]} vs kernel family P={P}")
    if d1 > f.shape[-2] or d2 > f.shape[-1]:
        raise BadPatchSize(f"kernel {d1}x{d2} does not fit image {f.shape[-2:]}")
    anchor = (0, 0) if anchor is None else anchor
    pat = _patches(f, d1, d2, anchor)
    return np.einsum("qpab,...pabxy->...qxy", kernels, pat, optimize=True)


def conv_iso_adjoint(g, kernels, anchor: tuple[int, int] | None = None) -> np.ndarray:
    """Adjoint of :func:`conv_iso` with respect to the input image."""
    g = np.asarray(g, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    Q, P, d1, d2 = kernels.shape
    anchor = (0, 0) if anchor is None else anchor
    rev = kernels[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    return conv_iso(g, rev, (d1 - 1 - anchor[0], d2 - 1 - anchor[1]))


def conv_iso_kernel_grad(f, g, shape, anchor: tuple[int, int] | None = None) -> np.ndarray:
    """Gradient of ``<conv_iso(f, K), g>`` with respect to ``K`` (shape ``(Q, P, d1, d2)``)."""
    Q, P, d1, d2 = shape
    anchor = (0, 0) if anchor is None else anchor
    pat = _patches(np.asarray(f, dtype=np.float64), d1, d2, anchor)
    return np.einsum("...qxy,...pabxy->qpab", g, pat, optimize=True)


# ---------------------------------------------------------------------------
# framelets


@dataclass(frozen=True, eq=False)
class FrameletBases:
    """Local bases ``Xi, Xi~`` (n1 x d) and filter matrices ``Phi, Phi~``.

    ``Phi`` and ``Phi~`` have ``n2 * d1`` rows; the patch width is implied.
    """

    local_primal: np.ndarray
    local_dual: np.ndarray
    filter_primal: np.ndarray
    filter_dual: np.ndarray
    n2: int

    @property
    def d1(self) -> int:
        return self.filter_primal.shape[0] // self.n2

    @property
    def n1(self) -> int:
        return self.local_primal.shape[0]

    def unity_errors(self) -> tuple[float, float]:
        """Max deviations of ``Xi~ Xi^T`` and ``Phi Phi~^T`` from identity."""
        a = self.local_dual @ self.local_primal.T
        b = self.filter_primal @ self.filter_dual.T
        return (
            float(np.max(np.abs(a - np.eye(a.shape[0])))),
            float(np.max(np.abs(b - np.eye(b.shape[0])))),
        )

    def check(self, tol: float = 1e-8) -> None:
        ea, eb = self.unity_errors()
        if ea > tol or eb > tol:
            raise UnityViolation(f"framelet unity errors {ea:.2e}, {eb:.2e} exceed {tol:g}")


def framelet_decompose(f, bases: FrameletBases, tol: float = 1e-8) -> np.ndarray:
    """Framelet coefficients ``Xi^T H_{d1|n2}(f) Phi``."""
    f = as_image(f)
    if f.shape != (bases.n1, bases.n2):
        raise ShapeMismatch(f"image {f.shape} vs bases ({bases.n1}, {bases.n2})")
    bases.check(tol)
    return bases.local_primal.T @ hankel_lift(f, bases.d1) @ bases.filter_primal


def framelet_reconstruct(c, bases: FrameletBases) -> np.ndarray:
    """Inverse ``H^dagger(Xi~ c Phi~^T)``."""
    c = np.asarray(c, dtype=np.float64)
    d = bases.local_dual.shape[1]
    if c.shape != (d, bases.filter_dual.shape[1]):
        raise ShapeMismatch(f"coefficients {c.shape} vs ({d}, {bases.filter_dual.shape[1]})")
    return hankel_pinv(bases.local_dual @ c @ bases.filter_dual.T, bases.d1)


# ---------------------------------------------------------------------------
# the RQ bank as a framelet


def operator_matrix(response: np.ndarray) -> np.ndarray:
    """Matrix of the circular multiplier ``f -> idft2(response * dft2(f))``.

    Acts on column-major vectorized images; shape ``(n1 n2, n1 n2)``.
    """
    n1, n2 = response.shape
    N = n1 * n2
    eye = np.eye(N).reshape(N, n2, n1).transpose(0, 2, 1)  # impulses as images
    out = np.fft.ifft2(response[None] * np.fft.fft2(eye)).real
    return out.transpose(0, 2, 1).reshape(N, N).T


def _bank_pairs(bank):
    yield bank.scaling_dual, bank.scaling_primal
    I1, L1 = bank.wavelet_primal.shape[:2]
    for i in range(I1):
        for l in range(L1):
            yield bank.wavelet_dual[i, l], bank.wavelet_primal[i, l]


def rq_framelet_bases(bank) -> FrameletBases:
    """Framelet bases realizing the RQ bank with ``Xi = Id`` and ``d1 = n1``.

    Row ``k`` of the lift is ``vec(f)`` shifted by ``k`` rows, so block ``p``
    of ``lift(f) @ Phi`` holds the analysis coefficients of every row shift;
    row 0 equals the plain analysis coefficients. ``Phi Phi~^T = Id`` is the
    operator form of the unity condition.
    """
    n1, n2 = bank.shape
    primal, dual = [], []
    for fd, fp in _bank_pairs(bank):
        primal.append(operator_matrix(np.conj(fd)).T)  # analysis: correlation with dual
        dual.append(operator_matrix(fp))  # synthesis: convolution with primal
    eye = np.eye(n1)
    return FrameletBases(eye, eye, np.hstack(primal), np.hstack(dual), n2=n2)


def rq_matrix_unity(bank) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(Phi, Psi~, Psi_check)`` with ``Phi + Psi~ Psi_check^T = Id / n1``.

    With ``d1 = n1`` every operator is an ``n1 n2`` square matrix.
    ``Phi`` is the scaling synthesis-after-analysis operator over ``n1``;
    ``Psi~`` stacks the wavelet synthesis operators and ``Psi_check`` the
    transposed wavelet analysis operators, both scaled by ``1 / sqrt(n1)``.
    """
    n1, n2 = bank.shape
    pairs = list(_bank_pairs(bank))
    Cs_dual = operator_matrix(np.conj(pairs[0][0]))
    Cs = operator_matrix(pairs[0][1])
    Phi = Cs @ Cs_dual / n1
    Psi_t = np.hstack([operator_matrix(fp) for _, fp in pairs[1:]]) / np.sqrt(n1)
    Psi_c = np.hstack([operator_matrix(np.conj(fd)).T for fd, _ in pairs[1:]]) / np.sqrt(n1)
    return Phi, Psi_t, Psi_c

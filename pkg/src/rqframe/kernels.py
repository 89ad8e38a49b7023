"""Frequency-domain kernels of the Riesz-Quincunx filter bank.

All functions take frequencies as a pair ``omega = (w1, w2)`` of
broadcastable arrays (angular frequency, radians per sample) and are
evaluated from closed forms, so they can be sampled on the DFT grid or on
any warped copy of it without interpolation.

The construction chains

* the isotropic localization operator ``V``,
* the fractional polyharmonic B-spline ``beta_gamma = V^(g/2) / |w|^g``,
* its autocorrelation ``A = sum_m beta_2g(w + 2 pi m)``,
* the L-th order Riesz channels,
* the quincunx refinement / highpass filters,

into a non-subsampled multi-scale bank whose scale-0 wavelet is
compensated so that the discrete unity condition holds to rounding.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np
from scipy import special

from .errors import DegenerateDenominator, UnityViolation
from .tensor import enforce_hermitian, frequency_grid

__all__ = [
    "KernelConfig",
    "FilterBank",
    "localization",
    "bspline_hat",
    "autocorrelation_hat",
    "riesz_hat",
    "dyadic_matrix",
    "warp",
    "refinement_hat",
    "quincunx_filters",
    "build_filterbank",
    "unity_residual",
]

SQRT2 = np.sqrt(2.0)
UNITY_TOL = 1e-9


@dataclass(frozen=True)
class KernelConfig:
    """Parameters of the polyharmonic Riesz-Quincunx bank.

    Attributes
    ----------
    gamma : float
        Fractional B-spline order. The autocorrelation series converges
        only for ``gamma > 1``.
    riesz_order : int
        Riesz order L; each scale has ``L + 1`` channels.
    scales : int
        Number of scales I (wavelet scales ``0..I``).
    alias_radius : int
        Radius M of the lattice sums used for the autocorrelation.
    dc_epsilon : float
        Guard for divisions at and near the DC bin.
    alias_method : {'ewald', 'truncated'}
        ``'ewald'`` evaluates the periodized sum exactly (exponentially
        convergent in M); ``'truncated'`` is the plain box sum
        ``|m1|, |m2| <= M``, which converges only algebraically.
    literal_scale_factors : bool
        Multiply scale-i filters by ``2^(i/2)`` as in the continuous
        definition. The default drops the factor, which is the
        normalization under which the non-subsampled bank telescopes.
    """

    gamma: float = 1.2
    riesz_order: int = 3
    scales: int = 3
    alias_radius: int = 3
    dc_epsilon: float = 1e-8
    alias_method: str = "ewald"
    literal_scale_factors: bool = False

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.riesz_order < 0:
            raise ValueError("riesz_order must be >= 0")
        if self.scales < 1:
            raise ValueError("scales must be >= 1")
        if self.alias_radius < 0:
            raise ValueError("alias_radius must be >= 0")
        if not self.dc_epsilon > 0:
            raise ValueError("dc_epsilon must be positive")
        if self.alias_method not in ("ewald", "truncated"):
            raise ValueError(f"unknown alias_method {self.alias_method!r}")
        if self.alias_method == "ewald" and self.gamma <= 1:
            raise ValueError(
                "the autocorrelation series diverges for gamma <= 1; "
                "use gamma > 1 (or alias_method='truncated' for a finite sum)"
            )


# ---------------------------------------------------------------------------
# elementary kernels


def localization(omega) -> np.ndarray:
    """Isotropic localization operator.

    ``10/3 - (4 cos w1 + 4 cos w2 + cos(w1 + w2) + cos(w1 - w2)) / 3``,
    evaluated through half-angle sines to avoid cancellation near DC.
    """
    w1, w2 = (np.asarray(w, dtype=np.float64) for w in omega)
    s = lambda x: np.sin(0.5 * x) ** 2  # noqa: E731
    return (2.0 / 3.0) * (4 * s(w1) + 4 * s(w2) + s(w1 + w2) + s(w1 - w2))


def _bspline(gamma: float, w1, w2, eps: float) -> np.ndarray:
    r2 = w1 * w1 + w2 * w2
    v = np.maximum(localization((w1, w2)), 0.0)
    dc = r2 <= eps * eps
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (v / np.where(dc, 1.0, r2)) ** (gamma / 2.0)
    return np.where(dc, 1.0, out)


def bspline_hat(cfg: KernelConfig, omega, order: float | None = None) -> np.ndarray:
    """Fourier transform of the polyharmonic B-spline of order ``gamma``.

    ``order`` overrides ``cfg.gamma`` (the autocorrelation needs ``2 gamma``).
    The value at ``|w| <= dc_epsilon`` is the limit 1.
    """
    w1, w2 = np.broadcast_arrays(*(np.asarray(w, dtype=np.float64) for w in omega))
    g = cfg.gamma if order is None else order
    return _bspline(g, w1, w2, cfg.dc_epsilon)


def _wrap(w):
    """Map angles into ``[-pi, pi)``."""
    return (np.asarray(w, dtype=np.float64) + np.pi) % (2 * np.pi) - np.pi


def _upper_gamma(a: float, x: np.ndarray) -> np.ndarray:
    """Non-normalized upper incomplete gamma ``Gamma(a, x)`` for real ``a``."""
    x = np.asarray(x, dtype=np.float64)
    if a > 0:
        return special.gammaincc(a, x) * special.gamma(a)
    if abs(a - round(a)) < 1e-12 and round(a) == 0:
        return special.exp1(x)
    # Gamma(a, x) = (Gamma(a + 1, x) - x^a e^{-x}) / a
    return (_upper_gamma(a + 1.0, x) - x**a * np.exp(-x)) / a


def _lattice(M: int) -> np.ndarray:
    r = np.arange(-M, M + 1)
    m1, m2 = np.meshgrid(r, r, indexing="ij")
    return np.stack([m1.ravel(), m2.ravel()], axis=1).astype(np.float64)


def _zeta_rest(s: float, w1, w2, M: int, eta: float) -> np.ndarray:
    """``sum_m |w + 2 pi m|^(-2s)`` minus its ``m = 0`` term (Ewald split).

    ``w`` must already be wrapped into ``[-pi, pi)``. The split parameter
    ``eta`` trades real-space against reciprocal-space decay; with
    ``eta = 1/(4 pi)`` both tails decay like ``exp(-pi M^2)``.
    """
    lat = _lattice(M)
    nz = np.any(lat != 0, axis=1)
    shape = w1.shape
    w = np.stack([w1.ravel(), w2.ravel()], axis=1)

    # real space, m != 0
    x = w[:, None, :] + 2 * np.pi * lat[None, nz, :]
    r2 = np.sum(x * x, axis=2)
    real = np.sum(special.gammaincc(s, eta * r2) * r2 ** (-s), axis=1)

    # real space, m = 0 with the bare |w|^(-2s) removed: -P(s, eta r^2) r^(-2s)
    r02 = np.sum(w * w, axis=1)
    small = r02 < 1e-20
    safe = np.where(small, 1.0, r02)
    m0 = -special.gammainc(s, eta * safe) * safe ** (-s)
    m0 = np.where(small, -(eta**s) / (s * special.gamma(s)), m0)

    # reciprocal space: coefficients depend only on k
    k = lat[nz]
    k2 = np.sum(k * k, axis=1)
    ck = (k2 / 4.0) ** (s - 1.0) * _upper_gamma(1.0 - s, k2 / (4 * eta)) / (4 * np.pi)
    recip = eta ** (s - 1.0) / ((s - 1.0) * 4 * np.pi) + np.cos(w @ k.T) @ ck
    recip = recip / special.gamma(s)
    return (real + m0 + recip).reshape(shape)


def autocorrelation_hat(cfg: KernelConfig, omega, eta: float | None = None) -> np.ndarray:
    """Autocorrelation ``A(w) = sum_m beta_2g(w + 2 pi m)`` of the B-spline.

    ``A`` is 2 pi-periodic, even and at least its ``m = 0`` term. With
    ``alias_method='ewald'`` the lattice sum is evaluated exactly by an
    Ewald split of ``V(w)^g * sum_m |w + 2 pi m|^(-2g)``; ``alias_radius``
    is then the radius of both lattice sums. ``eta`` overrides the split
    parameter (the result must not depend on it).
    """
    w1, w2 = np.broadcast_arrays(*(np.asarray(w, dtype=np.float64) for w in omega))
    g2 = 2.0 * cfg.gamma
    M = cfg.alias_radius
    if cfg.alias_method == "truncated":
        out = np.zeros(w1.shape)
        for m1, m2 in _lattice(M):
            out += _bspline(g2, w1 + 2 * np.pi * m1, w2 + 2 * np.pi * m2, cfg.dc_epsilon)
        return out
    u1, u2 = _wrap(w1), _wrap(w2)
    base = _bspline(g2, u1, u2, cfg.dc_epsilon)
    v = np.maximum(localization((u1, u2)), 0.0)
    eta = 1.0 / (4 * np.pi) if eta is None else eta
    rest = _zeta_rest(cfg.gamma, u1, u2, max(M, 1), eta)
    return base + v**cfg.gamma * rest


def riesz_hat(l: int, L: int, omega) -> np.ndarray:
    """Channel ``l`` of the order-``L`` Riesz transform; 0 at DC.

    ``(-j)^L sqrt(C(L, l)) w1^l w2^(L-l) / |w|^L``. The squared magnitudes
    of the ``L + 1`` channels sum to one away from DC.
    """
    if not 0 <= l <= L:
        raise ValueError(f"channel {l} out of range 0..{L}")
    w1, w2 = np.broadcast_arrays(*(np.asarray(w, dtype=np.float64) for w in omega))
    r = np.hypot(w1, w2)
    dc = r == 0
    rs = np.where(dc, 1.0, r)
    val = np.sqrt(comb(L, l)) * (w1 / rs) ** l * (w2 / rs) ** (L - l)
    out = (-1j) ** L * val
    return np.where(dc, 0.0, out)


# ---------------------------------------------------------------------------
# quincunx sampling


_D = np.array([[1, 1], [1, -1]])


def dyadic_matrix(k: int) -> np.ndarray:
    """Power ``D^k`` of the quincunx matrix ``D = [[1, 1], [1, -1]]``.

    Uses ``D^2 = 2 Id``; integer-valued for ``k >= 0``, float otherwise.
    """
    if k % 2 == 0:
        m = np.eye(2, dtype=np.int64)
    else:
        m = _D.copy()
    half = (k - (k % 2)) // 2
    if half >= 0:
        return m * (2**half)
    return m.astype(np.float64) * 2.0**half


def warp(k: int, omega) -> tuple[np.ndarray, np.ndarray]:
    """Return ``D^(kT) w``; ``D`` is symmetric so this is ``D^k w``."""
    w1, w2 = (np.asarray(w, dtype=np.float64) for w in omega)
    m = dyadic_matrix(k)
    return m[0, 0] * w1 + m[0, 1] * w2, m[1, 0] * w1 + m[1, 1] * w2


def refinement_hat(cfg: KernelConfig, omega) -> np.ndarray:
    """Quincunx refinement filter ``sqrt(2) beta(D^T w) / beta(w)``.

    Written in the equivalent periodic form
    ``sqrt(2) 2^(-g/2) (V(D^T w) / V(w))^(g/2)`` (``|D^T w| = sqrt(2) |w|``);
    equals ``sqrt(2)`` on the lattice ``2 pi Z^2`` and 0 at ``(pi, pi)``.
    """
    w1, w2 = np.broadcast_arrays(*(np.asarray(w, dtype=np.float64) for w in omega))
    u1, u2 = _wrap(w1), _wrap(w2)
    v = localization((u1, u2))
    vd = localization(warp(1, (u1, u2)))
    dc = np.hypot(u1, u2) <= cfg.dc_epsilon
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.maximum(vd, 0.0) / np.where(dc, 1.0, v)
    out = SQRT2 * 2.0 ** (-cfg.gamma / 2) * ratio ** (cfg.gamma / 2)
    return np.where(dc, SQRT2, out)


def _check_denominator(cfg: KernelConfig, omega) -> None:
    # the periodic filters divide by beta at the wrapped frequency
    w1, w2 = _wrap(omega[0]), _wrap(omega[1])
    b = bspline_hat(cfg, (w1, w2))
    off = np.hypot(w1, w2) > cfg.dc_epsilon
    if np.any(np.abs(b[off]) < cfg.dc_epsilon):
        raise DegenerateDenominator("B-spline vanishes away from DC on this grid")


def quincunx_filters(cfg: KernelConfig, omega):
    """Refinement, dual refinement, highpass, dual highpass, ``A(D^T w)``.

    Returns
    -------
    H, H_dual, G, G_dual, A_scaled : ndarray
        ``H_dual = A(w)/A(D^T w) H(w)``,
        ``G = -exp(-j w1) H(-(w + pi)) A(w + pi)``,
        ``G_dual = -exp(-j w1) H(-(w + pi)) / A(D^T w)``,
        ``A_scaled = A(D^T w)``.
    """
    w1, w2 = np.broadcast_arrays(*(np.asarray(w, dtype=np.float64) for w in omega))
    _check_denominator(cfg, (w1, w2))
    H = refinement_hat(cfg, (w1, w2))
    A = autocorrelation_hat(cfg, (w1, w2))
    A_scaled = autocorrelation_hat(cfg, warp(1, (w1, w2)))
    Hpi = refinement_hat(cfg, (-(w1 + np.pi), -(w2 + np.pi)))
    Api = autocorrelation_hat(cfg, (w1 + np.pi, w2 + np.pi))
    mod = -np.exp(-1j * w1)
    H_dual = A / A_scaled * H
    G = mod * Hpi * Api
    G_dual = mod * Hpi / A_scaled
    return H, H_dual, G, G_dual, A_scaled


def _mother_wavelets(cfg: KernelConfig, wp):
    """Primal and dual mother wavelets at ``xi = D^T wp``, given ``wp``.

    ``psi(xi) = 2^(-1/2) G(wp) beta(wp)`` and the dual with ``G_dual`` and
    ``beta / A``; evaluated from ``wp = D^(-T) xi`` directly so no grid
    resampling is involved.
    """
    w1, w2 = wp
    _, _, G, G_dual, _ = quincunx_filters(cfg, wp)
    b = bspline_hat(cfg, wp)
    A = autocorrelation_hat(cfg, wp)
    psi = G * b / SQRT2
    psi_dual = G_dual * b / A / SQRT2
    return psi, psi_dual


# ---------------------------------------------------------------------------
# filter bank


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Primal/dual scaling and wavelet spectra on an ``n1 x n2`` DFT grid.

    ``wavelet_primal[i, l]`` is the scale-``i``, channel-``l`` filter
    (``i = 0..I``, ``l = 0..L``). Analysis uses the conjugated dual
    filters, synthesis the primal ones.
    """

    n1: int
    n2: int
    config: KernelConfig
    scaling_primal: np.ndarray
    scaling_dual: np.ndarray
    wavelet_primal: np.ndarray
    wavelet_dual: np.ndarray
    dyadic: tuple = field(repr=False)
    bank_id: str = ""

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    def unity_residual(self) -> np.ndarray:
        return unity_residual(self)

    def spatial_kernels(self) -> dict[str, np.ndarray]:
        """Real impulse responses of every filter, keyed by name."""
        from .tensor import idft2

        out = {
            "scaling_primal": idft2(self.scaling_primal),
            "scaling_dual": idft2(self.scaling_dual),
        }
        I1, L1 = self.wavelet_primal.shape[:2]
        for i in range(I1):
            for l in range(L1):
                out[f"wavelet_primal_s{i}_l{l}"] = idft2(self.wavelet_primal[i, l])
                out[f"wavelet_dual_s{i}_l{l}"] = idft2(self.wavelet_dual[i, l])
        return out


def unity_residual(bank: FilterBank) -> np.ndarray:
    """Pointwise ``|conj(phi~) phi + sum conj(psi~) psi - 1|``."""
    total = np.conj(bank.scaling_dual) * bank.scaling_primal
    total = total + np.sum(np.conj(bank.wavelet_dual) * bank.wavelet_primal, axis=(0, 1))
    return np.abs(total - 1.0)


def _bank_id(cfg: KernelConfig, n1: int, n2: int) -> str:
    key = repr(sorted(asdict(cfg).items())) + f"|{n1}x{n2}"
    return hashlib.sha1(key.encode()).hexdigest()[:16]


def build_filterbank(cfg: KernelConfig, n1: int, n2: int) -> FilterBank:
    """Construct the compensated non-subsampled RQ filter bank.

    Scales ``i = 1..I`` and the scaling filter are sampled from the closed
    forms at ``D^(iT) w``. The scale-0 primal wavelet is then solved from
    the unity condition: with residual ``r = 1 - conj(phi~) phi -
    sum_{i>=1} conj(psi~) psi`` it is set to the minimum-norm solution
    ``psi_0l = psi~_0l r / sum_l |psi~_0l|^2``, which coincides with
    ``R^l r / conj(psi~_0)`` for Riesz-factored duals. Bins where the dual
    scale-0 energy is below ``dc_epsilon`` (the DC bin) fold ``r`` into the
    primal scaling filter instead.

    Raises
    ------
    UnityViolation
        If the compensated residual exceeds 1e-9 anywhere.
    """
    if n1 < 4 or n2 < 4:
        raise ValueError("filter bank grids must be at least 4 x 4")
    I, L = cfg.scales, cfg.riesz_order
    omega = frequency_grid(n1, n2)
    _check_denominator(cfg, omega)

    def factor(i):
        return 2.0 ** (i / 2) if cfg.literal_scale_factors else 1.0

    xi = warp(I, omega)
    b = bspline_hat(cfg, xi)
    phi = factor(I) * b
    phi_dual = factor(I) * b / autocorrelation_hat(cfg, xi)

    psi = np.zeros((I + 1, L + 1, n1, n2), dtype=np.complex128)
    psi_dual = np.zeros_like(psi)
    for i in range(I + 1):
        wp = warp(i - 1, omega)  # D^{(i-1)T} w; the mother wavelet sits at D^T wp
        mother, mother_dual = _mother_wavelets(cfg, wp)
        xi = warp(i, omega)
        for l in range(L + 1):
            R = riesz_hat(l, L, xi)
            psi[i, l] = factor(i) * R * mother
            psi_dual[i, l] = factor(i) * R * mother_dual

    # the closed forms are Hermitian in w, but on the Nyquist lines the grid
    # samples +pi for both w and its mirror; pin those bins to be conjugate pairs
    phi = enforce_hermitian(phi)
    phi_dual = enforce_hermitian(phi_dual)
    psi = enforce_hermitian(psi)
    psi_dual = enforce_hermitian(psi_dual)

    # scale-0 compensation
    r = 1.0 - np.conj(phi_dual) * phi
    r = r - np.sum(np.conj(psi_dual[1:]) * psi[1:], axis=(0, 1))
    energy = np.sum(np.abs(psi_dual[0]) ** 2, axis=0)
    take = np.sqrt(energy) > cfg.dc_epsilon
    safe = np.where(take, energy, 1.0)
    psi[0] = np.where(take, psi_dual[0] * r / safe, 0.0)
    fold = ~take
    if np.any(fold):
        if np.any(np.abs(phi_dual[fold]) <= cfg.dc_epsilon):
            raise UnityViolation("cannot fold residual: dual scaling filter vanishes")
        phi = phi.copy()
        phi[fold] = phi[fold] + r[fold] / np.conj(phi_dual[fold])

    bank = FilterBank(
        n1=n1,
        n2=n2,
        config=cfg,
        scaling_primal=phi,
        scaling_dual=phi_dual,
        wavelet_primal=psi,
        wavelet_dual=psi_dual,
        dyadic=tuple(dyadic_matrix(i) for i in range(I + 1)),
        bank_id=_bank_id(cfg, n1, n2),
    )
    for arr in (phi, phi_dual, psi, psi_dual):
        if not np.all(np.isfinite(arr)):
            raise UnityViolation("non-finite filter value")
        arr.flags.writeable = False
    res = float(np.max(unity_residual(bank)))
    if res > UNITY_TOL:
        raise UnityViolation(f"unity residual {res:.3e} exceeds {UNITY_TOL:g}")
    return bank

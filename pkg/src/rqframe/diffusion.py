"""Iterative shrinkage, diffusion scale space and TV-like spectral filtering.

A *smoother* is any callable ``S(x, mu) -> array`` mapping a multi-band
image to one of the same shape. :class:`rqframe.transform.RQSmoother`
(the identity at ``mu = 0``) and :class:`rqframe.neural.smooth.VaeSmoother`
both qualify.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .errors import BadLength, BadThresholds, DimensionMismatch
from .prox import ProximalRule, prox_apply
from .tensor import as_multiband, as_series

__all__ = [
    "Smoother",
    "IterState",
    "DiffusionRecord",
    "SpectralFilter",
    "k_map",
    "scheme2_denoise",
    "diffuse",
    "filter_weights",
    "spectral_filter",
    "pick_thresholds",
    "haar_matrix",
    "haar_time_smooth",
    "SeriesDecomposition",
    "scheme2_series",
    "pad_series",
]


class Smoother(Protocol):
    def __call__(self, x: np.ndarray, mu: float) -> np.ndarray: ...


def identity_smoother(x, mu):
    return np.array(x, dtype=np.float64)


@dataclass(frozen=True)
class IterState:
    """Current estimate ``u``, multiplier ``lam`` and iteration counter."""

    u: np.ndarray
    lam: np.ndarray
    tau: int = 0

    @classmethod
    def start(cls, f) -> "IterState":
        f = np.asarray(f, dtype=np.float64)
        return cls(f.copy(), np.zeros_like(f), 0)


def k_map(f, state: IterState, mu: float, smoother: Smoother) -> IterState:
    """One augmented-Lagrangian step.

    ``u = S(f + lam, mu)`` and ``lam <- lam + (f - u)``.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape != state.u.shape or f.shape != state.lam.shape:
        raise DimensionMismatch(f"anchor {f.shape} vs state {state.u.shape}")
    u = np.asarray(smoother(f + state.lam, mu), dtype=np.float64)
    if u.shape != f.shape:
        raise DimensionMismatch("smoother changed the image shape")
    return IterState(u, state.lam + (f - u), state.tau + 1)


def scheme2_denoise(f, N: int, mu: float, smoother: Smoother, return_trace: bool = False):
    """Iterate :func:`k_map` ``N`` times with the anchor ``f`` fixed.

    Returns ``u^(N)``; with ``return_trace`` also the list ``u^(1..N)``.
    ``N = 1`` is a single smoothing pass of ``f``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    f = as_multiband(f)
    state = IterState.start(f)
    trace = []
    for _ in range(N):
        state = k_map(f, state, mu, smoother)
        trace.append(state.u)
    return (state.u, trace) if return_trace else state.u


@dataclass(frozen=True, eq=False)
class DiffusionRecord:
    """States ``u^(0..N+1)``, bands ``phi^(1..N)`` and spectrum ``S^(1..N)``."""

    states: list
    bands: list
    spectrum: np.ndarray
    beta: float

    @property
    def N(self) -> int:
        return len(self.bands)

    @property
    def residual_image(self) -> np.ndarray:
        """``f~^(N) = (1 + N) u^(N) - N u^(N+1)``."""
        N = self.N
        return (1 + N) * self.states[N] - N * self.states[N + 1]

    def reconstruct(self) -> np.ndarray:
        """Exact inverse ``f~^(N) + beta * sum_tau phi^(tau)``."""
        return self.residual_image + self.beta * np.sum(self.bands, axis=0)


def tv_bands(states, beta: float) -> list:
    """``phi^(tau) = tau / beta * (u^(tau+1) - 2 u^(tau) + u^(tau-1))``."""
    N = len(states) - 2
    return [
        (tau / beta) * (states[tau + 1] - 2 * states[tau] + states[tau - 1])
        for tau in range(1, N + 1)
    ]


def diffuse(
    f,
    N: int,
    mu: float,
    beta: float,
    smoother: Smoother,
    multiplier: str = "reset",
) -> DiffusionRecord:
    """Self-anchored diffusion ``u^(0) = f``, ``u^(tau) = K(u^(tau-1))``.

    Parameters
    ----------
    multiplier : {'reset', 'carry'}
        ``'carry'`` keeps the Lagrange multiplier across steps exactly as
        in :func:`k_map`. With a self anchor this collapses: ``u + lam`` is
        invariant, so every step returns ``S(f)``. ``'reset'`` (default)
        starts each step from ``lam = 0``, giving the iterated-smoothing
        scale space ``u^(tau) = S(u^(tau-1))``.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if multiplier not in ("reset", "carry"):
        raise ValueError(f"unknown multiplier mode {multiplier!r}")
    f = np.asarray(f, dtype=np.float64)
    states = [f.copy()]
    state = IterState.start(f)
    for _ in range(N + 1):
        anchor = state.u
        if multiplier == "reset":
            state = IterState(state.u, np.zeros_like(f), state.tau)
        state = k_map(anchor, state, mu, smoother)
        states.append(state.u)
    bands = tv_bands(states, beta)
    spectrum = np.array([np.sum(np.abs(b)) for b in bands])
    return DiffusionRecord(states, bands, spectrum, float(beta))


_KINDS = ("lowpass", "highpass", "bandpass", "bandstop", "allpass")


@dataclass(frozen=True)
class SpectralFilter:
    """Ideal indicator filter over the diffusion time ``tau``.

    Case boundaries that overlap at ``tau1``/``tau2`` resolve to the later
    case: lowpass keeps ``tau >= tau1``, highpass ``tau < tau1``, bandpass
    ``tau1 <= tau < tau2`` and bandstop the complement of bandpass.
    """

    kind: str
    tau1: int = 0
    tau2: int = 0

    def __post_init__(self):
        aliases = {"low": "lowpass", "high": "highpass", "band": "bandpass",
                   "stop": "bandstop", "all": "allpass"}
        kind = aliases.get(self.kind, self.kind)
        if kind not in _KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)


def filter_weights(filt: SpectralFilter, N: int) -> np.ndarray:
    """Indicator ``H^(tau)`` for ``tau = 0..N``; index N also weights ``f~^(N)``."""
    if not (0 <= filt.tau1 <= N) or (
        filt.kind in ("bandpass", "bandstop") and not filt.tau1 <= filt.tau2 <= N
    ):
        raise BadThresholds(f"need 0 <= tau1 <= tau2 <= {N}, got {filt.tau1}, {filt.tau2}")
    tau = np.arange(N + 1)
    if filt.kind == "allpass":
        h = np.ones(N + 1, dtype=bool)
    elif filt.kind == "lowpass":
        h = tau >= filt.tau1
    elif filt.kind == "highpass":
        h = tau < filt.tau1
    else:
        h = (tau >= filt.tau1) & (tau < filt.tau2)
        if filt.kind == "bandstop":
            h = ~h
    return h.astype(np.float64)


def spectral_filter(rec: DiffusionRecord, filt: SpectralFilter) -> np.ndarray:
    """``H^(N) f~^(N) + beta * sum_tau H^(tau) phi^(tau)``."""
    N = rec.N
    h = filter_weights(filt, N)
    out = h[N] * rec.residual_image
    for tau in range(1, N + 1):
        if h[tau]:
            out = out + rec.beta * h[tau] * rec.bands[tau - 1]
    return out


def pick_thresholds(spectrum, n_gaps: int = 2) -> tuple[int, ...]:
    """Thresholds at the ``n_gaps`` largest jumps of the sorted spectrum.

    The spectrum values are sorted; the largest gaps between neighbours
    split them into groups, and each split level is mapped back to the
    first ``tau`` (1-based) whose ``S`` is at or below it. Returned sorted
    ascending, duplicates removed.
    """
    s = np.asarray(spectrum, dtype=np.float64)
    if s.size < 2 or n_gaps < 1:
        return ()
    order = np.sort(s)
    gaps = np.diff(order)
    cut_idx = np.sort(np.argsort(gaps, kind="stable")[::-1][:n_gaps])
    taus = []
    for c in cut_idx:
        level = 0.5 * (order[c] + order[c + 1])
        # first tau whose spectrum drops to the level; order[c] <= level always exists
        taus.append(int(np.nonzero(s <= level)[0][0] + 1))
    return tuple(sorted(set(taus)))


# ---------------------------------------------------------------------------
# time series


def haar_matrix(T: int, levels: int) -> np.ndarray:
    """Orthonormal Haar analysis matrix of size ``T x T``.

    Rows are ordered: detail functions of scale 1 (``T/2`` rows), scale 2,
    ..., scale ``levels``, then the ``T / 2^levels`` scaling functions.
    Scale-``i`` rows are ``2^(-i/2)`` times the +1/-1 Haar pattern.
    """
    if levels < 0 or T % (2**levels):
        raise BadLength(f"T={T} is not divisible by 2^{levels}")
    rows = []
    t = np.arange(T)
    for i in range(1, levels + 1):
        w = 2**i
        for m in range(T // w):
            r = np.zeros(T)
            r[(t >= w * m) & (t < w * m + w // 2)] = 1.0
            r[(t >= w * m + w // 2) & (t < w * (m + 1))] = -1.0
            rows.append(r / np.sqrt(w))
    w = 2**levels
    for m in range(T // w):
        r = np.zeros(T)
        r[(t >= w * m) & (t < w * (m + 1))] = 1.0
        rows.append(r / np.sqrt(w))
    return np.array(rows)


def haar_time_smooth(v, levels: int, mu: float, prox: ProximalRule | None = None) -> np.ndarray:
    """Shrink the temporal Haar detail coefficients of a series ``(T, ...)``.

    The scaling coefficients are kept; ``mu = 0`` (soft or hard) is the
    identity.
    """
    v = np.asarray(v, dtype=np.float64)
    T = v.shape[0]
    W = haar_matrix(T, levels)
    n_detail = T - T // 2**levels
    coef = np.tensordot(W, v, axes=(1, 0))
    rule = (prox or ProximalRule("soft")).with_threshold(mu)
    coef[:n_detail] = prox_apply(rule, coef[:n_detail])
    return np.tensordot(W.T, coef, axes=(1, 0))


@dataclass(frozen=True, eq=False)
class SeriesDecomposition:
    """Low/band/high split of a series and the underlying diffusion record."""

    lowpass: np.ndarray
    bandpass: np.ndarray
    highpass: np.ndarray
    record: DiffusionRecord
    tau1: int
    tau2: int


def _series_smoother(
    spatial: Smoother, mu_spatial: float, mu_time: float, levels: int,
    prox: ProximalRule, order: str,
) -> Callable:
    def S(v, _mu):
        def space(x):
            return np.stack([spatial(frame, mu_spatial) for frame in x])

        def time(x):
            return haar_time_smooth(x, levels, mu_time, prox)

        if order == "space-time":
            return time(space(v))
        return space(time(v))

    return S


def scheme2_series(
    v,
    N: int,
    mu_spatial: float,
    mu_time: float,
    beta: float,
    spatial: Smoother,
    time_levels: int = 1,
    prox: ProximalRule | None = None,
    tau1: int | None = None,
    tau2: int | None = None,
    order: str = "space-time",
) -> SeriesDecomposition:
    """Diffusion decomposition of a series with a space-then-time smoother.

    Each step smooths every frame spatially and then the temporal Haar
    details (``order='time-space'`` swaps them). The record is split into
    ``lowpass(tau2)``, ``bandpass(tau1, tau2)`` and ``highpass(tau1)``,
    which add back to the series exactly. Thresholds default to the
    largest-gap picker.
    """
    v = as_series(v)
    T = v.shape[0]
    if T % (2**time_levels):
        raise BadLength(f"T={T} is not divisible by 2^{time_levels}")
    if order not in ("space-time", "time-space"):
        raise ValueError(f"unknown order {order!r}")
    prox = prox or ProximalRule("soft")
    S = _series_smoother(spatial, mu_spatial, mu_time, time_levels, prox, order)
    rec = diffuse(v, N, 1.0, beta, S)
    if tau1 is None or tau2 is None:
        picked = pick_thresholds(rec.spectrum, 2)
        picked = (picked + (N, N))[:2]
        tau1 = picked[0] if tau1 is None else tau1
        tau2 = max(picked[1], tau1) if tau2 is None else tau2
    low = spectral_filter(rec, SpectralFilter("lowpass", tau2))
    band = spectral_filter(rec, SpectralFilter("bandpass", tau1, tau2))
    high = spectral_filter(rec, SpectralFilter("highpass", tau1))
    return SeriesDecomposition(low, band, high, rec, int(tau1), int(tau2))


def pad_series(v, T: int, n1: int, n2: int, mode: str = "reflect") -> np.ndarray:
    """Pad a ``(T0, P, h, w)`` series to ``(T, P, n1, n2)`` at the trailing ends."""
    v = as_series(v)
    T0, _, h, w = v.shape
    if T < T0 or n1 < h or n2 < w:
        raise BadLength("target shape must not be smaller than the series")
    return np.pad(v, ((0, T - T0), (0, 0), (0, n1 - h), (0, n2 - w)), mode=mode)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rqframe.errors import BankMismatch, DimensionMismatch
from rqframe.kernels import KernelConfig, build_filterbank
from rqframe.prox import ProximalRule
from rqframe.transform import RQSmoother, WaveletCoefficients, analyze, shrink_smooth, synthesize


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_zero_image(bank16):
    c = analyze(np.zeros((2, 16, 16)), bank16)
    assert np.all(c.scaling == 0) and np.all(c.wavelet == 0)
    assert np.all(synthesize(c, bank16) == 0)


def test_constant_image(bank16):
    c = analyze(np.full((16, 16), 0.7), bank16)
    assert np.abs(c.wavelet[1:]).max() < 1e-10


def test_roundtrip_gray(bank16, rng):
    f = rng.standard_normal((16, 16))
    assert rel(synthesize(analyze(f, bank16), bank16), f[None]) < 1e-8


def test_roundtrip_multiband(bank32, rng):
    for _ in range(10):
        f = rng.random((3, 32, 32))
        assert rel(synthesize(analyze(f, bank32), bank32), f) < 1e-8


def test_linearity(bank16, rng):
    f, g = rng.standard_normal((2, 1, 16, 16))
    a = analyze(2 * f - g, bank16)
    b, c = analyze(f, bank16), analyze(g, bank16)
    assert np.allclose(a.wavelet, 2 * b.wavelet - c.wavelet)


def test_scaling_only_is_blur(bank32, rng):
    f = rng.standard_normal((1, 32, 32))
    c = analyze(f, bank32)
    out = synthesize(c.with_wavelet(np.zeros_like(c.wavelet)), bank32)
    F = np.fft.fft2(f)
    expect = np.fft.ifft2(bank32.scaling_primal * np.conj(bank32.scaling_dual) * F).real
    assert np.allclose(out, expect)
    w = np.hypot(*np.meshgrid(np.fft.fftfreq(32), np.fft.fftfreq(32), indexing="ij"))
    hi = w > 0.25
    assert np.sum(np.abs(np.fft.fft2(out)[:, hi]) ** 2) <= np.sum(np.abs(F[:, hi]) ** 2)


def test_shrink_mu_zero(bank16, rng):
    f = rng.random((3, 16, 16))
    assert rel(shrink_smooth(f, bank16, 0.0), f) < 1e-8


def test_shrink_large_mu_is_scaling_only(bank16, rng):
    f = rng.random((2, 16, 16))
    c = analyze(f, bank16)
    mu = np.abs(c.wavelet).max() + 1
    expect = synthesize(c.with_wavelet(np.zeros_like(c.wavelet)), bank16)
    assert np.allclose(shrink_smooth(f, bank16, mu), expect)


def test_shrink_hard_rule(bank16, rng):
    f = rng.random((1, 16, 16))
    out = shrink_smooth(f, bank16, 0.05, ProximalRule("hard"))
    assert out.shape == f.shape and np.isfinite(out).all()


def test_bank_mismatch(bank16, rng):
    other = build_filterbank(KernelConfig(scales=1, riesz_order=1), 16, 16)
    c = analyze(rng.random((16, 16)), bank16)
    with pytest.raises(BankMismatch):
        synthesize(c, other)
    with pytest.raises(DimensionMismatch):
        analyze(np.zeros((8, 8)), bank16)


def test_smoother_caches_bank(rng):
    S = RQSmoother(KernelConfig(scales=1, riesz_order=0))
    f = rng.random((1, 8, 8))
    S(f, 0.1)
    assert S.bank(8, 8) is S.bank(8, 8)
    assert np.allclose(S(f, 0.0), f)


@given(st.sampled_from([8, 16]), st.integers(1, 3), st.integers(0, 2**31))
@settings(max_examples=10, deadline=None)
def test_roundtrip_property(n, P, seed):
    bank = build_filterbank(KernelConfig(scales=2, riesz_order=1), n, n)
    f = np.random.default_rng(seed).standard_normal((P, n, n))
    assert rel(synthesize(analyze(f, bank), bank), f) < 1e-8

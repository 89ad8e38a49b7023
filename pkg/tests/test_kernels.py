import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rqframe.kernels import (
    KernelConfig,
    autocorrelation_hat,
    bspline_hat,
    build_filterbank,
    dyadic_matrix,
    localization,
    quincunx_filters,
    refinement_hat,
    riesz_hat,
    unity_residual,
    warp,
)
from rqframe.tensor import frequency_grid


class TestElementary:

    def test_localization_values(self):
        assert localization((0.0, 0.0)) == 0
        assert np.isclose(localization((np.pi, np.pi)), 16 / 3)
        assert np.isclose(localization((np.pi, 0.0)), 4)

    def test_localization_nonnegative(self):
        w = frequency_grid(32, 32)
        assert localization(w).min() >= 0

    def test_bspline_dc_limit(self):
        cfg = KernelConfig()
        assert bspline_hat(cfg, (0.0, 0.0)) == 1
        for t in (1e-3, 1e-4, 1e-5):
            assert abs(bspline_hat(cfg, (t, t)) - 1) < 10 * t**2

    def test_bspline_gamma2(self):
        v = bspline_hat(KernelConfig(gamma=2.0), (np.pi, 0.0))
        assert np.isclose(v, 4 / np.pi**2)

    def test_bspline_positive(self):
        w = frequency_grid(16, 16)
        assert bspline_hat(KernelConfig(), w).min() > 0

    def test_riesz_values(self):
        assert riesz_hat(0, 0, (0.3, -1.2)) == 1
        assert riesz_hat(1, 1, (1.0, 0.0)) == -1j
        assert riesz_hat(2, 3, (0.0, 0.0)) == 0

    @given(st.integers(0, 6), st.floats(-3, 3), st.floats(-3, 3))
    def test_riesz_partition(self, L, a, b):
        if np.hypot(a, b) < 1e-6:
            return
        s = sum(abs(riesz_hat(l, L, (a, b))) ** 2 for l in range(L + 1))
        assert abs(s - 1) < 1e-12

    def test_dyadic(self):
        assert np.array_equal(dyadic_matrix(2), 2 * np.eye(2))
        assert np.array_equal(dyadic_matrix(3), 2 * np.array([[1, 1], [1, -1]]))
        assert np.allclose(dyadic_matrix(-1) @ dyadic_matrix(1), np.eye(2))
        w = warp(2, (0.5, 0.25))
        assert np.allclose(w, (1.0, 0.5))


class TestAutocorrelation:

    def test_at_least_base_term(self):
        cfg = KernelConfig()
        w = frequency_grid(16, 16)
        assert autocorrelation_hat(cfg, (0.0, 0.0)) >= 1
        assert np.all(autocorrelation_hat(cfg, w) >= bspline_hat(cfg, w, 2 * cfg.gamma) - 1e-12)

    def test_even(self):
        cfg = KernelConfig()
        w1, w2 = frequency_grid(16, 16)
        assert np.allclose(autocorrelation_hat(cfg, (w1, w2)), autocorrelation_hat(cfg, (-w1, -w2)))

    def test_periodic(self):
        cfg = KernelConfig()
        w1, w2 = frequency_grid(8, 8)
        a = autocorrelation_hat(cfg, (w1, w2))
        assert np.allclose(a, autocorrelation_hat(cfg, (w1 + 2 * np.pi, w2 - 4 * np.pi)))

    def test_ewald_independent_of_split(self):
        cfg = KernelConfig(alias_radius=5)
        w = frequency_grid(8, 8)
        a = autocorrelation_hat(cfg, w)
        for eta in (0.05, 0.2):
            assert np.abs(autocorrelation_hat(cfg, w, eta=eta) - a).max() < 1e-10

    def test_ewald_converged(self):
        w = frequency_grid(16, 16)
        a3 = autocorrelation_hat(KernelConfig(alias_radius=3), w)
        a5 = autocorrelation_hat(KernelConfig(alias_radius=5), w)
        assert np.abs(a3 - a5).max() < 1e-12

    def test_truncated_increases_to_ewald(self):
        w = frequency_grid(8, 8)
        exact = autocorrelation_hat(KernelConfig(alias_radius=4), w)
        prev = None
        for M in (1, 2, 4, 8):
            t = autocorrelation_hat(KernelConfig(alias_radius=M, alias_method="truncated"), w)
            assert np.all(t <= exact + 1e-12)
            if prev is not None:
                assert np.all(t >= prev)
            prev = t

    def test_gamma_one_rejected(self):
        with pytest.raises(ValueError):
            KernelConfig(gamma=1.0)
        KernelConfig(gamma=1.0, alias_method="truncated")


class TestQuincunx:

    def test_refinement_dc(self):
        assert np.isclose(refinement_hat(KernelConfig(), (0.0, 0.0)), np.sqrt(2))
        assert abs(refinement_hat(KernelConfig(), (np.pi, np.pi))) < 1e-12

    def test_two_scale_identity(self):
        cfg = KernelConfig(gamma=1.2, alias_radius=3)
        w1, w2 = frequency_grid(16, 16)
        H, _, _, _, As = quincunx_filters(cfg, (w1, w2))
        A = autocorrelation_hat(cfg, (w1, w2))
        Hp = refinement_hat(cfg, (w1 + np.pi, w2 + np.pi))
        Ap = autocorrelation_hat(cfg, (w1 + np.pi, w2 + np.pi))
        rhs = 0.5 * np.abs(H) ** 2 * A + 0.5 * np.abs(Hp) ** 2 * Ap
        assert np.abs(As - rhs).max() < 1e-8

    def test_modulation(self):
        cfg = KernelConfig()
        w1, w2 = frequency_grid(16, 16)
        _, _, G, _, _ = quincunx_filters(cfg, (w1, w2))
        Hm = refinement_hat(cfg, (-(w1 + np.pi), -(w2 + np.pi)))
        Ap = autocorrelation_hat(cfg, (w1 + np.pi, w2 + np.pi))
        assert np.allclose(G, -np.exp(-1j * w1) * Hm * Ap)


class TestFilterBank:

    @pytest.mark.parametrize("I,L,n", [(1, 0, 16), (2, 1, 32), (3, 3, 64)])
    def test_unity(self, I, L, n):
        bank = build_filterbank(KernelConfig(scales=I, riesz_order=L), n, n)
        assert np.abs(unity_residual(bank)).max() < 1e-9

    def test_unity_small(self):
        bank = build_filterbank(KernelConfig(scales=1, riesz_order=0), 16, 16)
        assert np.abs(bank.unity_residual()).max() < 1e-12

    def test_shapes(self, bank16):
        assert bank16.wavelet_primal.shape == (3, 2, 16, 16)
        assert bank16.scaling_dual.shape == (16, 16)
        assert bank16.shape == (16, 16)

    def test_wavelets_vanish_at_dc(self, bank16):
        assert np.abs(bank16.wavelet_dual[1:, :, 0, 0]).max() < 1e-10

    def test_spatial_kernels_real(self, bank16):
        k = bank16.spatial_kernels()
        assert "wavelet_primal_s1_l0" in k
        assert all(np.isrealobj(v) for v in k.values())

    def test_literal_factors_still_unity(self):
        bank = build_filterbank(KernelConfig(scales=2, riesz_order=1, literal_scale_factors=True), 16, 16)
        assert np.abs(unity_residual(bank)).max() < 1e-9

    def test_deterministic(self):
        a = build_filterbank(KernelConfig(scales=2), 16, 16)
        b = build_filterbank(KernelConfig(scales=2), 16, 16)
        assert np.array_equal(a.wavelet_primal, b.wavelet_primal)
        assert a.bank_id == b.bank_id

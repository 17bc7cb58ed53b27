import math

import numpy as np
import pytest

from dksim.grid import GridSpec, RealField, convolve, divergence, lp_norm, upsample
from dksim.kernels import (
    KernelSchedule,
    KernelSpec,
    apply,
    biot_savart,
    check_lps,
    divergence_of,
    load_kernel_table,
    mollify,
    save_kernel_table,
    single_mode_kernel,
    zero_kernel,
)

INF = math.inf


class TestLpsCheck:
    def test_a1_passes_for_bounded_kernel(self):
        # d/p + 2/p* = 0 + 1 <= 1
        report = check_lps(2, INF, 2.0, INF, INF)
        assert report.a1_pass
        assert report.a1_lhs == 1.0

    def test_a1_fails_when_p_not_above_d(self):
        report = check_lps(2, 2.0, INF, INF, INF)
        assert not report.a1_pass
        assert not report.checks["a1_p_range"]

    def test_a2_direct_evaluation(self):
        # d/(2q) + 1/q* = 1/2 + 1/2 <= 1 and q > d/2
        report = check_lps(2, INF, 2.0, 2.0, 2.0)
        assert report.a2_pass
        assert report.a2_lhs == 1.0

    def test_rejects_exponent_below_one(self):
        with pytest.raises(ValueError):
            check_lps(2, 0.5, 2.0, 2.0, 2.0)


class TestBiotSavart:
    def test_spectral_divergence_vanishes(self):
        g = GridSpec(2, 64)
        kern = biot_savart(g, 20)
        assert np.abs(divergence_of(kern).coefficients).max() <= 1e-12

    def test_constant_field_maps_to_zero(self):
        g = GridSpec(2, 32)
        kern = biot_savart(g, 10)
        out = apply(kern, RealField.constant(g, 5.0))
        for comp in out.components:
            assert np.abs(comp.values).max() < 1e-12

    def test_lps_audit_a1_fail_a2_pass(self):
        g = GridSpec(2, 32)
        report = biot_savart(g, 10).lps_report()
        assert not report.a1_pass
        assert report.a2_pass

    def test_requires_two_dimensions(self):
        with pytest.raises(ValueError):
            biot_savart(GridSpec(1, 32), 4)

    def test_truncation_bound(self):
        with pytest.raises(ValueError):
            biot_savart(GridSpec(2, 16), 9)


class TestMollify:
    def test_l2_contraction(self):
        g = GridSpec(2, 32)
        kern = biot_savart(g, 10)
        moll = mollify(kern, 0.2)
        for c_orig, c_moll in zip(kern.fourier_coefficients, moll.fourier_coefficients):
            norm = lambda c: np.sqrt(np.sum(np.abs(c) ** 2))
            assert norm(c_moll) <= norm(c_orig) + 1e-15

    @pytest.mark.parametrize("p", [1.0, 1.5])
    def test_lp_young_inequality_on_biot_savart(self, p):
        g = GridSpec(2, 64)
        kern = biot_savart(g, 20)
        for gamma in (0.1, 0.2):
            moll = mollify(kern, gamma)
            mag = lambda k: RealField(
                g, np.sqrt(sum(c.values**2 for c in k.component_fields().components))
            )
            assert lp_norm(mag(moll), p) <= lp_norm(mag(kern), p)

    def test_small_gamma_limit(self):
        # eta_hat deficit bound 1 - exp(-gamma^2 4pi^2 |k|^2 / 2), evaluated at the band edge
        g = GridSpec(1, 32)
        kern = single_mode_kernel(g, (3,), 1.0)
        gamma = 1e-6
        moll = mollify(kern, gamma)
        bound = 1.0 - math.exp(-0.5 * gamma**2 * 4 * math.pi**2 * 9)
        assert bound < 1e-9
        diff = max(
            np.abs(a - b).max()
            for a, b in zip(kern.fourier_coefficients, moll.fourier_coefficients)
        )
        assert diff <= bound + 1e-15

    def test_gamma_range(self):
        g = GridSpec(1, 16)
        with pytest.raises(ValueError):
            mollify(zero_kernel(g), 0.0)
        with pytest.raises(ValueError):
            mollify(zero_kernel(g), 1.5)


class TestApply:
    def test_single_mode_pair_closed_form(self):
        # V = a sin(2 pi x), rho = cos(2 pi x):
        # (V * rho)(x) = a/2 integral identity -> (a/2) sin(2 pi x)
        g = GridSpec(1, 64)
        kern = single_mode_kernel(g, (1,), 0.8)
        rho = RealField.from_function(g, lambda x: np.cos(2 * np.pi * x))
        out = apply(kern, rho).components[0]
        expected = RealField.from_function(g, lambda x: 0.4 * np.sin(2 * np.pi * x))
        assert np.abs(out.values - expected.values).max() < 1e-12

    def test_matches_direct_quadrature(self):
        g = GridSpec(1, 8)
        rng = np.random.default_rng(1)
        vvals = rng.normal(size=8)
        kern = KernelSpec(g, (np.fft.fft(vvals) / 8,))
        rho = RealField(g, rng.normal(size=8))
        direct = np.array(
            [sum(vvals[(i - j) % 8] * rho.values[j] for j in range(8)) / 8 for i in range(8)]
        )
        out = apply(kern, rho).components[0]
        assert np.abs(out.values - direct).max() < 1e-12

    def test_linearity_in_rho(self):
        g = GridSpec(2, 16)
        kern = biot_savart(g, 5)
        rng = np.random.default_rng(2)
        f = RealField(g, rng.normal(size=g.shape))
        h = RealField(g, rng.normal(size=g.shape))
        combo = RealField(g, 3.0 * f.values + 2.0 * h.values)
        lhs = apply(kern, combo)
        for a in range(2):
            rhs = 3.0 * apply(kern, f).components[a].values + 2.0 * apply(kern, h).components[a].values
            assert np.abs(lhs.components[a].values - rhs).max() < 1e-12

    def test_grid_mismatch(self):
        kern = biot_savart(GridSpec(2, 16), 5)
        with pytest.raises(ValueError):
            apply(kern, RealField.constant(GridSpec(2, 32), 1.0))


class TestDivergenceIdentity:
    def test_leibniz_with_constant_density(self):
        # with f = 1: div(V * rho) == (div V) * rho as spectral identity
        g = GridSpec(2, 32)
        kern = single_mode_kernel(g, (1, 2), 0.5)
        rng = np.random.default_rng(3)
        rho = RealField(g, rng.normal(size=g.shape))
        via_field = divergence(apply(kern, rho))
        via_kernel = convolve(divergence_of(kern), rho)
        assert np.abs(via_field.values - via_kernel.values).max() < 1e-12


class TestYoungInequality:
    def test_infinity_bound_on_samples(self):
        # ||V * rho||_inf <= ||V||_inf ||rho||_1; sup norms certified on a refined grid
        g = GridSpec(1, 32)
        kern = single_mode_kernel(g, (2,), 0.7)
        rho = RealField.from_function(g, lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x))
        out = apply(kern, rho).components[0]
        vmag = kern.component_fields().components[0]
        lhs = lp_norm(upsample(out, 4), np.inf)
        rhs = lp_norm(upsample(vmag, 4), np.inf) * lp_norm(rho, 1)
        assert lhs <= rhs * (1 + 1e-9)


class TestKernelTable:
    def test_round_trip(self, tmp_path):
        g = GridSpec(2, 16)
        kern = biot_savart(g, 4)
        path = tmp_path / "kernel.txt"
        save_kernel_table(kern, path)
        loaded = load_kernel_table(path, g)
        for a, b in zip(kern.fourier_coefficients, loaded.fourier_coefficients):
            assert np.abs(a - b).max() < 1e-15
        assert loaded.exponents == kern.exponents

    def test_rejects_out_of_band_wavevector(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("40 0 1.0 0.0 0.0 0.0\n")
        with pytest.raises(ValueError):
            load_kernel_table(path, GridSpec(2, 16))


class TestSchedule:
    def test_piecewise_lookup(self):
        g = GridSpec(1, 16)
        k1 = single_mode_kernel(g, (1,), 1.0)
        k2 = single_mode_kernel(g, (2,), 1.0)
        sched = KernelSchedule([(0.0, k1), (0.5, k2)])
        assert sched.at(0.2) is k1
        assert sched.at(0.5) is k2
        assert sched.at(0.9) is k2

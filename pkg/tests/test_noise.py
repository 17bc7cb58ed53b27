import numpy as np
import pytest
import sympy as sp

from dksim.grid import GridSpec, RealField
from dksim.noise import (
    NoiseDiagnosticWarning,
    NoiseMode,
    NoiseSpec,
    compute_F,
    gaussian_block,
    harmonic_mode,
    sample_path,
    uv_noise,
    uv_wavevectors,
)


class TestUvNoise:
    def test_k1_d1_modes_are_the_sin_cos_pair(self):
        g = GridSpec(1, 64)
        spec = uv_noise(g, 1, 1.0)
        assert spec.n_modes == 2
        x = np.arange(64) / 64
        assert np.abs(spec.modes[0].field.values - np.sin(2 * np.pi * x)).max() < 1e-15
        assert np.abs(spec.modes[1].field.values - np.cos(2 * np.pi * x)).max() < 1e-15

    def test_wavevector_enumeration_counts(self):
        assert uv_wavevectors(1, 3) == [(1,), (2,), (3,)]
        kv = uv_wavevectors(2, 8)
        assert len(kv) == 98  # half of the 196 nonzero |k| <= 8 lattice points
        assert all(k1 > 0 or (k1 == 0 and k2 > 0) for k1, k2 in kv)

    def test_amplitude_sequence_too_short(self):
        g = GridSpec(1, 64)
        with pytest.raises(ValueError):
            uv_noise(g, 3, [1.0, 1.0])

    def test_truncation_outside_dealiased_band(self):
        with pytest.raises(ValueError):
            uv_noise(GridSpec(1, 16), 6, 1.0)


class TestFCoefficients:
    def test_paired_family_f1_f2_f3(self):
        g = GridSpec(1, 64)
        spec = uv_noise(g, 1, 1.0)
        F = compute_F(spec)
        assert np.abs(F.f1.values - 1.0).max() < 1e-14
        assert max(np.abs(c.values).max() for c in F.f2.components) == 0.0
        assert np.abs(F.f3.values - 4 * np.pi**2).max() < 1e-10

    def test_f3_matches_wavenumber_convention(self):
        # integer-wavevector |k|^2 a_k^2 scales to (2 pi)^2 |k|^2 a_k^2 on the volume-1 torus
        g = GridSpec(2, 32)
        amps = [0.5, 0.25, 0.125, 1.0]
        kv = uv_wavevectors(2, 1)
        assert len(kv) == 2
        spec = uv_noise(g, 1, amps[: len(kv)])
        F = compute_F(spec)
        expected = sum(
            a**2 * 4 * np.pi**2 * (k[0] ** 2 + k[1] ** 2) for a, k in zip(amps, kv)
        )
        assert np.abs(F.f3.values - expected).max() < 1e-10 * expected

    def test_f1_equals_amplitude_sum(self):
        g = GridSpec(2, 64)
        spec = uv_noise(g, 4, 0.3)
        F = compute_F(spec)
        expected = 0.3**2 * len(uv_wavevectors(2, 4))
        assert np.abs(F.f1.values - expected).max() < 1e-12

    def test_standing_assumption_defects_vanish_for_pairs(self):
        g = GridSpec(2, 32)
        F = compute_F(uv_noise(g, 3, 1.0))
        assert F.div_f2_defect <= 1e-10
        assert F.lap_f1_defect <= 1e-10
        assert F.standing_assumption_ok

    def test_unpaired_mode_raises_diagnostic(self):
        g = GridSpec(1, 64)
        spec = NoiseSpec(g, (harmonic_mode(g, (1,), 1.0, "sin"),))
        with pytest.warns(NoiseDiagnosticWarning):
            F = compute_F(spec)
        # symbolic oracle: F2 = (1/2) d/dx sin^2(2 pi x) = pi sin(4 pi x)
        x = sp.symbols("x")
        oracle = sp.lambdify(x, sp.diff(sp.sin(2 * sp.pi * x) ** 2, x) / 2, "numpy")
        xs = np.arange(64) / 64
        assert np.abs(F.f2.components[0].values - oracle(xs)).max() < 1e-12
        assert not F.standing_assumption_ok

    def test_quadratic_amplitude_scaling(self):
        g = GridSpec(1, 32)
        spec = uv_noise(g, 2, 1.0)
        F1 = compute_F(spec)
        F2 = compute_F(spec.scaled(3.0))
        assert np.abs(F2.f1.values - 9.0 * F1.f1.values).max() < 1e-12
        assert np.abs(F2.f3.values - 9.0 * F1.f3.values).max() < 1e-8

    def test_f1_f3_nonnegative_for_generic_modes(self):
        g = GridSpec(1, 32)
        rng = np.random.default_rng(0)
        vals = np.fft.ifft(np.fft.fft(rng.normal(size=32)) * (np.abs(np.fft.fftfreq(32, 1 / 32)) <= 4)).real
        spec = NoiseSpec(g, (NoiseMode(RealField(g, vals)),))
        with pytest.warns(NoiseDiagnosticWarning):
            F = compute_F(spec)
        assert F.f1.values.min() >= 0.0
        assert F.f3.values.min() >= 0.0

    def test_paired_f1_f3_spatially_constant(self):
        g = GridSpec(2, 32)
        F = compute_F(uv_noise(g, 2, 0.7))
        for field in (F.f1, F.f3):
            spread = field.values.max() - field.values.min()
            assert spread <= 1e-14 * abs(field.values.max())


class TestNoisePath:
    def test_seed_repeat_is_bit_identical(self):
        g = GridSpec(1, 32)
        spec = uv_noise(g, 2, 1.0)
        p1 = sample_path(spec, 1e-3, 50, seed=9)
        p2 = sample_path(spec, 1e-3, 50, seed=9)
        assert np.array_equal(p1.increments, p2.increments)
        assert not np.array_equal(p1.increments, sample_path(spec, 1e-3, 50, seed=10).increments)

    def test_moments_match_brownian_increments(self):
        g = GridSpec(1, 32)
        spec = uv_noise(g, 2, 1.0)
        dt = 1e-3
        path = sample_path(spec, dt, 6250, seed=4)  # 6250*4*1 = 25000 draws per mode set
        draws = path.increments.ravel()
        n = draws.size
        assert n >= 10**5 // 4
        assert abs(draws.mean()) <= 4 * np.sqrt(dt / n)
        assert abs(draws.var() - dt) <= 0.05 * dt

    def test_replica_streams_differ(self):
        g = GridSpec(1, 32)
        spec = uv_noise(g, 1, 1.0)
        p0 = sample_path(spec, 1e-3, 10, seed=1, replica=0)
        p1 = sample_path(spec, 1e-3, 10, seed=1, replica=1)
        assert not np.array_equal(p0.increments, p1.increments)

    def test_coarsening_sums_pairs(self):
        g = GridSpec(1, 32)
        spec = uv_noise(g, 2, 1.0)
        fine = sample_path(spec, 1e-3, 8, seed=2)
        coarse = fine.coarsened()
        assert coarse.steps == 4
        assert coarse.dt == 2e-3
        manual = fine.increments[0] + fine.increments[1]
        assert np.array_equal(coarse.increments[0], manual)

    def test_rejects_bad_dt(self):
        g = GridSpec(1, 32)
        with pytest.raises(ValueError):
            sample_path(uv_noise(g, 1, 1.0), 0.0, 10, seed=0)

    def test_gaussian_block_is_traversal_order_independent(self):
        a5 = gaussian_block(3, 5, (4,), 1.0)
        _ = gaussian_block(3, 6, (4,), 1.0)
        again5 = gaussian_block(3, 5, (4,), 1.0)
        assert np.array_equal(a5, again5)

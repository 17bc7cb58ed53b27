import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dksim.grid import (
    GridSpec,
    RealField,
    SpectralField,
    VectorField,
    convolve,
    dealias,
    divergence,
    forward,
    gradient,
    integrate,
    inverse,
    laplacian,
    lp_norm,
    upsample,
)


def random_field(grid, seed, band=None):
    """Band-limited random field: fills modes |k| <= band with a seeded spectrum."""
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=grid.shape)
    if band is not None:
        fhat = np.fft.fftn(vals)
        mask = np.ones(grid.shape, dtype=bool)
        for k in grid.wavevectors:
            mask &= np.abs(k) <= band
        fhat[~mask] = 0.0
        vals = np.fft.ifftn(fhat).real
    return RealField(grid, vals)


class TestGridSpec:
    def test_spacing_and_size(self):
        g = GridSpec(2, 16)
        assert g.spacing == 1 / 16
        assert g.size == 256
        assert g.shape == (16, 16)

    @pytest.mark.parametrize("n", [3, 5, 6, 12, 2])
    def test_rejects_non_power_of_two(self, n):
        with pytest.raises(ValueError):
            GridSpec(1, n)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            GridSpec(0, 8)


class TestIntegrate:
    def test_constant_is_one(self):
        g = GridSpec(2, 8)
        assert integrate(RealField.constant(g, 1.0)) == 1.0

    def test_mean_zero_mode(self):
        g = GridSpec(1, 64)
        f = RealField.from_function(g, lambda x: np.sin(2 * np.pi * x))
        assert abs(integrate(f)) < 1e-15

    def test_matches_direct_summation(self):
        g = GridSpec(2, 8)
        f = random_field(g, 11)
        direct = 0.0
        for idx in np.ndindex(*g.shape):
            direct += f.values[idx]
        direct /= g.size
        assert abs(integrate(f) - direct) < 1e-12


class TestLpNorm:
    def test_constant_any_p(self):
        g = GridSpec(1, 16)
        f = RealField.constant(g, -2.5)
        for p in (1, 2, 3.5, np.inf):
            assert abs(lp_norm(f, p) - 2.5) < 1e-14

    def test_sine_l2(self):
        g = GridSpec(1, 64)
        f = RealField.from_function(g, lambda x: np.sin(2 * np.pi * x))
        assert abs(lp_norm(f, 2) - 1 / np.sqrt(2)) < 1e-14

    def test_matches_quadrature_oracle(self):
        g = GridSpec(1, 32)
        f = random_field(g, 5)
        direct = (np.sum(np.abs(f.values) ** 3) / g.size) ** (1 / 3)
        assert abs(lp_norm(f, 3) - direct) < 1e-13

    def test_rejects_p_below_one(self):
        g = GridSpec(1, 16)
        with pytest.raises(ValueError):
            lp_norm(RealField.constant(g, 1.0), 0.5)


class TestDifferentialOperators:
    def test_gradient_of_constant(self):
        g = GridSpec(2, 16)
        grad = gradient(RealField.constant(g, 3.0))
        for comp in grad.components:
            assert np.abs(comp.values).max() == 0.0

    def test_gradient_of_sine(self):
        g = GridSpec(2, 32)
        f = RealField.from_function(g, lambda x, y: np.sin(2 * np.pi * x))
        grad = gradient(f)
        expected = RealField.from_function(g, lambda x, y: 2 * np.pi * np.cos(2 * np.pi * x))
        assert np.abs(grad.components[0].values - expected.values).max() < 1e-12
        assert np.abs(grad.components[1].values).max() < 1e-12

    def test_gradient_matches_finite_differences(self):
        # centered differences converge at O(h^2): error ratio ~4 per refinement
        errors = []
        for n in (32, 64):
            g = GridSpec(1, n)
            f = random_field(g, 7, band=3)
            spectral = gradient(f).components[0].values
            h = g.spacing
            fd = (np.roll(f.values, -1) - np.roll(f.values, 1)) / (2 * h)
            errors.append(np.abs(spectral - fd).max())
        assert errors[0] / errors[1] > 3.0

    def test_laplacian_eigenfunction(self):
        g = GridSpec(2, 32)
        f = RealField.from_function(g, lambda x, y: np.sin(2 * np.pi * x))
        lap = laplacian(f)
        assert np.abs(lap.values + 4 * np.pi**2 * f.values).max() < 1e-10

    def test_divergence_of_constant_vector(self):
        g = GridSpec(2, 16)
        v = VectorField((RealField.constant(g, 1.0), RealField.constant(g, -2.0)))
        assert np.abs(divergence(v).values).max() == 0.0

    def test_divergence_matches_finite_differences(self):
        errors = []
        for n in (32, 64):
            g = GridSpec(2, n)
            v = VectorField((random_field(g, 1, band=3), random_field(g, 2, band=3)))
            spectral = divergence(v).values
            h = g.spacing
            fd = (np.roll(v.components[0].values, -1, 0) - np.roll(v.components[0].values, 1, 0)) / (2 * h)
            fd += (np.roll(v.components[1].values, -1, 1) - np.roll(v.components[1].values, 1, 1)) / (2 * h)
            errors.append(np.abs(spectral - fd).max())
        assert errors[0] / errors[1] > 3.0

    def test_div_grad_is_laplacian_bitwise(self):
        g = GridSpec(2, 16)
        f = random_field(g, 9)
        via_composition = divergence(gradient(f))
        assert np.array_equal(via_composition.values, laplacian(f).values)


class TestConvolve:
    def test_identity_kernel(self):
        g = GridSpec(1, 32)
        f = random_field(g, 3)
        ident = SpectralField(g, np.ones(g.shape, dtype=np.complex128))
        assert np.abs(convolve(ident, f).values - f.values).max() < 1e-12

    def test_mean_zero_kernel_annihilates_constants(self):
        g = GridSpec(1, 32)
        coeff = np.ones(g.shape, dtype=np.complex128)
        coeff[0] = 0.0
        kern = SpectralField(g, coeff)
        out = convolve(kern, RealField.constant(g, 4.0))
        assert np.abs(out.values).max() < 1e-12

    def test_matches_direct_periodic_convolution(self):
        # (K*f)(x_i) = (1/n) sum_j K(x_i - x_j) f(x_j) for grid-sampled kernels
        g = GridSpec(1, 8)
        rng = np.random.default_rng(0)
        kvals = rng.normal(size=8)
        f = RealField(g, rng.normal(size=8))
        khat = SpectralField(g, np.fft.fft(kvals) / 8)
        direct = np.array(
            [sum(kvals[(i - j) % 8] * f.values[j] for j in range(8)) / 8 for i in range(8)]
        )
        assert np.abs(convolve(khat, f).values - direct).max() < 1e-12

    def test_grid_mismatch_rejected(self):
        kern = SpectralField(GridSpec(1, 16), np.ones(16, dtype=np.complex128))
        with pytest.raises(ValueError):
            convolve(kern, RealField.constant(GridSpec(1, 32), 1.0))

    @given(st.integers(0, 2**31 - 1), st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_bilinearity(self, seed_a, seed_b):
        g = GridSpec(1, 16)
        f = random_field(g, seed_a)
        h = random_field(g, seed_b)
        kern = forward(random_field(g, 123))
        lhs = convolve(kern, RealField(g, 2.0 * f.values - 0.5 * h.values)).values
        rhs = 2.0 * convolve(kern, f).values - 0.5 * convolve(kern, h).values
        assert np.abs(lhs - rhs).max() < 1e-12


class TestSpectralRepresentation:
    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_round_trip(self, seed):
        g = GridSpec(2, 16)
        f = random_field(g, seed)
        back = inverse(forward(f))
        assert np.abs(back.values - f.values).max() < 1e-12

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_parseval(self, seed):
        g = GridSpec(1, 64)
        f = random_field(g, seed)
        coeff = forward(f).coefficients
        assert abs(lp_norm(f, 2) ** 2 - np.sum(np.abs(coeff) ** 2)) < 1e-12

    def test_conjugate_symmetry_of_real_fields(self):
        g = GridSpec(2, 16)
        assert forward(random_field(g, 2)).conjugate_symmetry_defect() < 1e-12

    def test_dealias_keeps_low_band(self):
        g = GridSpec(1, 32)
        f = random_field(g, 4, band=5)
        assert np.abs(dealias(f).values - f.values).max() < 1e-12

    def test_upsample_is_exact_on_band_limited_fields(self):
        g = GridSpec(1, 16)
        f = RealField.from_function(g, lambda x: np.cos(2 * np.pi * 3 * x))
        fine = upsample(f, 4)
        expected = RealField.from_function(fine.grid, lambda x: np.cos(2 * np.pi * 3 * x))
        assert np.abs(fine.values - expected.values).max() < 1e-12


class TestFieldValidation:
    def test_rejects_non_finite(self):
        g = GridSpec(1, 8)
        vals = np.zeros(8)
        vals[3] = np.nan
        with pytest.raises(ValueError):
            RealField(g, vals)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            RealField(GridSpec(2, 8), np.zeros(8))

    def test_vector_field_requires_shared_grid(self):
        with pytest.raises(ValueError):
            VectorField(
                (RealField.constant(GridSpec(1, 8), 1.0), RealField.constant(GridSpec(1, 16), 1.0))
            )

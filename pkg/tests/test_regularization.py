import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dksim.regularization import (
    d_metric,
    h_delta,
    kappa,
    phi_beta,
    sigma,
    zeta_M,
)

N_SET = (4, 16, 64, 256)


class TestSigmaFamily:
    @pytest.mark.parametrize("n", N_SET)
    def test_vanishes_at_zero(self, n):
        fam = sigma(n)
        assert fam(np.array([0.0]))[0] == 0.0

    @pytest.mark.parametrize("n", N_SET)
    def test_envelope(self, n):
        fam = sigma(n)
        xi = np.linspace(1e-9, 4.0 * n, 20001)
        assert np.all(fam(xi) <= fam.envelope_constant * np.sqrt(xi) + 1e-15)
        assert np.all(fam(xi) >= 0.0)

    @pytest.mark.parametrize("n", N_SET)
    def test_derivative_exact_on_core_interval(self, n):
        fam = sigma(n)
        lo, hi = fam.exact_interval
        xi = np.linspace(lo, hi, 4001)
        assert np.abs(fam.derivative(xi) - 1.0 / (2.0 * np.sqrt(xi))).max() <= 1e-8

    @pytest.mark.parametrize("n", N_SET)
    def test_antiderivative_identity_on_core_interval(self, n):
        # sigma(xi) - sigma(2/n) = sqrt(xi) - sqrt(2/n) wherever sigma' = 1/(2 sqrt)
        fam = sigma(n)
        lo, hi = fam.exact_interval
        xi = np.linspace(lo, hi, 2001)
        drift = fam(xi) - fam(np.array([lo]))[0] - (np.sqrt(xi) - np.sqrt(lo))
        assert np.abs(drift).max() <= 1e-8

    @pytest.mark.parametrize("n", N_SET)
    def test_derivative_compact_support(self, n):
        fam = sigma(n)
        xi = np.array([0.0, 0.5 / n, 1.0 / n, 2.0 * n, 4.0 * n])
        assert np.all(fam.derivative(xi) == 0.0)

    def test_uniform_envelope_constant(self):
        xi = np.geomspace(1e-6, 1e3, 5001)
        worst = max(float((sigma(n)(xi) / np.sqrt(xi)).max()) for n in N_SET)
        assert worst <= 2.0

    def test_uniform_b2_bound(self):
        # [sigma']^4 + |sigma sigma'|^2 <= c_delta on [delta, inf), one c for all n
        delta = 0.1
        xi = np.geomspace(delta, 1e3, 5001)
        worst = 0.0
        for n in N_SET:
            fam = sigma(n)
            val = fam.derivative(xi) ** 4 + (fam(xi) * fam.derivative(xi)) ** 2
            worst = max(worst, float(val.max()))
        # analytic ceiling: sigma' <= 1/(2 sqrt(delta)), sigma sigma' <= 1/2
        assert worst <= 1.0 / (16 * delta**2) + 0.26

    def test_c1_convergence_to_square_root(self):
        # [0.08, 30] enters the covered region at n = 64; sups shrink strictly before
        window = np.linspace(0.08, 30.0, 3001)
        sups = []
        for n in N_SET:
            fam = sigma(n)
            sups.append(float(np.abs(fam.derivative(window) - 1 / (2 * np.sqrt(window))).max()))
        for a, b in zip(sups, sups[1:]):
            assert b <= a
            if a > 0:
                assert b < a
        assert sups[-1] == 0.0  # [0.05, 30] inside [2/256, 256]

    def test_rejects_small_index(self):
        with pytest.raises(ValueError):
            sigma(1)


class TestCutoffs:
    def test_phi_beta_values(self):
        phi = phi_beta(0.3)
        assert phi(0.3) == 1.0
        assert phi(0.15) == 0.0
        assert abs(phi(0.225) - 0.5) < 1e-14

    def test_phi_beta_slope(self):
        phi = phi_beta(0.2)
        assert phi.derivative(0.15) == pytest.approx(10.0)
        assert phi.derivative(0.05) == 0.0

    def test_zeta_values(self):
        zeta = zeta_M(3)
        assert zeta(3.0) == 1.0
        assert zeta(4.0) == 0.0
        assert abs(zeta(3.5) - 0.5) < 1e-14
        assert zeta.derivative(3.5) == -1.0

    def test_parameter_ranges(self):
        with pytest.raises(ValueError):
            phi_beta(1.5)
        with pytest.raises(ValueError):
            zeta_M(0)


class TestHDelta:
    @pytest.mark.parametrize("delta", [0.5, 0.1, 0.01])
    def test_regions(self, delta):
        h = h_delta(delta)
        assert h(2 * delta) == pytest.approx(2 * delta, abs=1e-15)
        assert h(delta / 4) == 0.0
        mid = h(0.75 * delta)
        assert 0.0 <= mid <= 0.75 * delta

    def test_pinch_between_zero_and_identity(self):
        h = h_delta(0.2)
        xi = np.linspace(0, 1, 1001)
        vals = h(xi)
        assert np.all(vals >= 0.0)
        assert np.all(vals <= xi + 1e-15)

    def test_derivative_uniformly_bounded(self):
        # h' = psi' xi + psi <= 15/4 + 1, independent of delta
        for delta in (0.9, 0.3, 0.05, 0.003):
            h = h_delta(delta)
            xi = np.linspace(0, 2.0, 20001)
            assert float(h.derivative(xi).max()) <= 19.0 / 4.0 + 1e-12


class TestMetricD:
    def _random_series(self, seed):
        rng = np.random.default_rng(seed)
        return np.abs(rng.normal(size=(4, 8, 8)))

    def test_identity_and_symmetry(self):
        t = np.linspace(0, 1, 4)
        f = self._random_series(0)
        g = self._random_series(1)
        assert d_metric(t, f, f) == 0.0
        assert d_metric(t, f, g) == d_metric(t, g, f)

    def test_bounded_by_one_minus_tail(self):
        t = np.linspace(0, 1, 4)
        f = 100.0 * self._random_series(2)
        g = np.zeros_like(f)
        assert d_metric(t, f, g, kmax=20) <= 1 - 2.0**-20

    @given(st.integers(0, 10**6))
    @settings(max_examples=30, deadline=None)
    def test_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        t = np.linspace(0, 1, 3)
        f, g, h = (np.abs(rng.normal(size=(3, 6, 6))) for _ in range(3))
        assert d_metric(t, f, h) <= d_metric(t, f, g) + d_metric(t, g, h) + 1e-12

    def test_time_grid_mismatch(self):
        with pytest.raises(ValueError):
            d_metric(np.linspace(0, 1, 3), np.zeros((3, 4)), np.zeros((4, 4)))


class TestKappa:
    def test_velocity_factor_unit_mass(self):
        k = kappa(0.1, 0.2)
        xi = np.linspace(-0.3, 0.3, 200001)
        mass = np.trapezoid(k.velocity(xi), xi)
        assert abs(mass - 1.0) < 1e-8

    def test_velocity_support(self):
        k = kappa(0.1, 0.05)
        assert k.velocity(0.051) == 0.0
        assert k.velocity(-0.06) == 0.0
        assert k.velocity(0.0) > 0.0

    def test_product_mollifier_total_mass(self):
        # integral over (y, eta) of kappa(x, y, xi, eta) is 1 for interior (x, xi)
        k = kappa(0.15, 0.1, dimension=1)
        y = np.linspace(0, 1, 1601)[:-1]
        eta = np.linspace(0.45, 0.95, 1601)
        ygrid, etagrid = np.meshgrid(y, eta, indexing="ij")
        x = np.full(ygrid.shape + (1,), 0.5)
        vals = k(x, ygrid[..., None], 0.7, etagrid)
        total = vals.sum() * (y[1] - y[0]) * (eta[1] - eta[0])
        assert abs(total - 1.0) < 1e-6

    def test_scale_validation(self):
        with pytest.raises(ValueError):
            kappa(0.6, 0.1)
        with pytest.raises(ValueError):
            kappa(0.1, 1.2)

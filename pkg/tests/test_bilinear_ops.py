"""
Tests for truncated products, the M^-eps multiplier and free evolution.
"""

import math

import numpy as np
import pytest

from src.bilinear_ops import (
    InteractionTriple,
    bilinear_product,
    duality_pairing_check,
    dx,
    dx_abs,
    dy_fractional,
    free_evolution,
    free_evolution_samples,
    m_eps_apply,
    schrodinger_factorization_check,
    truncated_convolution,
)
from src.errors import NonMeanZeroError, ShapeError
from src.fourier_field import (
    FreqPoint,
    GridSpec,
    SpaceTimeSpectrum,
    SpatialSpectrum,
    embed_spatial,
    project_mean_zero,
    random_spatial,
    random_spectrum,
    spatial_forward_transform,
    spatial_inverse_transform,
)
from src.phase_resonance import DispersionParams


class TestConvolution:
    """The three convolution paths."""

    def test_paths_agree(self, rng):
        shape = (5, 5, 5, 5)
        a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        b = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        direct = truncated_convolution(a, b, "direct")
        np.testing.assert_allclose(truncated_convolution(a, b, "pairwise"), direct, atol=1e-10)
        np.testing.assert_allclose(truncated_convolution(a, b, "fft"), direct, atol=1e-10)

    def test_spatial_arrays(self, rng):
        a = rng.standard_normal((5, 7, 7)) + 0j
        b = rng.standard_normal((5, 7, 7)) + 0j
        np.testing.assert_allclose(
            truncated_convolution(a, b, "pairwise"), truncated_convolution(a, b, "fft"), atol=1e-10
        )

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            truncated_convolution(np.zeros((3, 3, 3)), np.zeros((5, 3, 3)))


class TestBilinearProduct:
    """uv on the grid, k = 0 outputs dropped."""

    def test_single_modes(self):
        grid = GridSpec(K=3, M=2, J=2)
        u = SpaceTimeSpectrum.from_modes(grid, {(1, 1, 0, 1): 1.0})
        v = SpaceTimeSpectrum.from_modes(grid, {(2, 0, 1, -1): 1.0})
        product = bilinear_product(u, v)
        assert list(product.nonzero_modes()) == [((3, 1, 1, 0), 1.0)]

    def test_zero_k_output_is_dropped(self, small_grid):
        u = SpaceTimeSpectrum.from_modes(small_grid, {(1, 0, 0, 0): 1.0})
        v = SpaceTimeSpectrum.from_modes(small_grid, {(-1, 1, 0, 0): 1.0})
        assert bilinear_product(u, v).is_zero()

    def test_outputs_beyond_the_grid_vanish(self, small_grid):
        u = SpaceTimeSpectrum.from_modes(small_grid, {(2, 0, 0, 0): 1.0})
        assert bilinear_product(u, u).is_zero()

    def test_matches_physical_multiplication(self, rng):
        u = embed_spatial(random_spatial(2, 2, rng), 4, 4)
        v = embed_spatial(random_spatial(2, 2, rng), 4, 4)
        samples = spatial_inverse_transform(u) * spatial_inverse_transform(v)
        expected = project_mean_zero(spatial_forward_transform(samples, 4, 4))
        np.testing.assert_allclose(bilinear_product(u, v).coeffs, expected.coeffs, atol=1e-10)

    def test_grid_mismatch(self, small_grid, rng):
        u = random_spectrum(small_grid, rng)
        v = random_spectrum(GridSpec(K=1, M=2, J=2), rng)
        with pytest.raises(ShapeError):
            bilinear_product(u, v)


class TestMEps:
    """The weight <k1 eta2 - k2 eta1>^-eps."""

    def test_eps_zero_is_the_product(self, small_grid, rng):
        u, v = random_spectrum(small_grid, rng), random_spectrum(small_grid, rng)
        np.testing.assert_allclose(m_eps_apply(u, v, 0.0).coeffs, bilinear_product(u, v).coeffs)

    def test_pairwise_and_dense_agree(self, small_grid, rng):
        u, v = random_spectrum(small_grid, rng), random_spectrum(small_grid, rng)
        pairwise = m_eps_apply(u, v, 0.3, method="pairwise")
        dense = m_eps_apply(u, v, 0.3, method="dense")
        np.testing.assert_allclose(pairwise.coeffs, dense.coeffs, atol=1e-10)

    @pytest.mark.parametrize("method", ["pairwise", "dense"])
    def test_single_interaction_weight(self, method):
        grid = GridSpec(K=2, M=1, J=1)
        u = SpaceTimeSpectrum.from_modes(grid, {(1, 1, 0, 0): 1.0})
        v = SpaceTimeSpectrum.from_modes(grid, {(1, 0, 1, 0): 1.0})
        out = m_eps_apply(u, v, 0.8, method=method)
        triple = InteractionTriple(FreqPoint(1, (1, 0)), FreqPoint(1, (0, 1)))
        assert triple.mixed_vector == (-1, 1)
        assert out.mode(2, (1, 1), 0) == pytest.approx(3.0 ** -0.4)
        assert triple.m_eps_weight(0.8) == pytest.approx(3.0 ** -0.4)

    def test_weight_vanishes_on_zero_output(self):
        assert InteractionTriple(FreqPoint(1, (1, 0)), FreqPoint(-1, (0, 1))).m_eps_weight(1.0) == 0.0

    def test_negative_eps_is_rejected(self, small_grid, rng):
        u = random_spectrum(small_grid, rng)
        with pytest.raises(ValueError):
            m_eps_apply(u, u, -0.1)

    def test_spatial_data(self, rng):
        u, v = random_spatial(2, 2, rng), random_spatial(2, 2, rng)
        pairwise = m_eps_apply(u, v, 0.5, method="pairwise")
        dense = m_eps_apply(u, v, 0.5, method="dense")
        np.testing.assert_allclose(pairwise.coeffs, dense.coeffs, atol=1e-10)


class TestMultipliers:
    """Fourier multipliers in x and y."""

    def test_dx(self, small_grid):
        u = SpaceTimeSpectrum.from_modes(small_grid, {(2, 0, 0, 0): 1.0})
        assert dx(u).mode(2, (0, 0), 0) == 2j

    def test_dx_abs_kills_the_zero_mode(self):
        u = SpatialSpectrum.from_modes(2, 1, {(0, 1, 0): 1.0, (-2, 0, 0): 1.0})
        out = dx_abs(u, 0.5)
        assert out.mode(0, (1, 0)) == 0.0
        assert out.mode(-2, (0, 0)) == pytest.approx(math.sqrt(2.0))

    def test_dy_fractional(self):
        u = SpatialSpectrum.from_modes(1, 2, {(1, 2, 1): 1.0})
        assert dy_fractional(u, -2.0).mode(1, (2, 1)) == pytest.approx(1.0 / 6.0)


class TestFreeEvolution:
    """e^{it phi(D)} u0 and its factorization in y."""

    def test_single_mode_oscillates_at_its_phase(self):
        # phi(1, 0) = 1, so the solution is e^{it} and lands on tau = 1
        u0 = SpatialSpectrum.from_modes(1, 1, {(1, 0, 0): 1.0})
        u = free_evolution(u0, DispersionParams(), GridSpec(K=1, M=1, J=3))
        assert u.mode(1, (0, 0), 1) == pytest.approx(1.0)
        assert u.norm() == pytest.approx(1.0)

    def test_samples_keep_the_l2_norm(self, rng):
        u0 = random_spatial(2, 2, rng)
        samples = free_evolution_samples(u0, DispersionParams(), [0.0, 0.7, 3.0])
        for s in samples:
            assert np.linalg.norm(s) == pytest.approx(u0.norm())

    def test_bounds_mismatch(self, rng):
        with pytest.raises(ShapeError):
            free_evolution(random_spatial(2, 2, rng), DispersionParams(), GridSpec(K=1, M=2, J=2))

    def test_mean_mass_is_rejected(self):
        u0 = SpatialSpectrum.from_modes(1, 1, {(0, 1, 0): 1.0})
        with pytest.raises(NonMeanZeroError):
            free_evolution_samples(u0, DispersionParams(), [0.0])

    @pytest.mark.parametrize("k", [1, -2, 3])
    @pytest.mark.parametrize("t", [0.1, 1.0])
    def test_factorization_into_a_schroedinger_flow(self, rng, k, t):
        u0 = random_spatial(3, 3, rng)
        assert schrodinger_factorization_check(u0, k, t, DispersionParams()) < 1e-10

    def test_factorization_outside_the_grid(self, rng):
        u0 = random_spatial(2, 2, rng)
        with pytest.raises(NonMeanZeroError):
            schrodinger_factorization_check(u0, 0, 0.1, DispersionParams())
        with pytest.raises(ShapeError):
            schrodinger_factorization_check(u0, 3, 0.1, DispersionParams())


class TestDuality:
    """<uv, w> through the adjoint."""

    def test_pairing_identity(self, small_grid, rng):
        u, v, w = (random_spectrum(small_grid, rng) for _ in range(3))
        report = duality_pairing_check(u, v, w, eps0=0.2)
        assert report.relative_error < 1e-10

"""
Tests for the pseudospectral solver and the Picard iteration.
"""

import numpy as np
import pytest

from src.bilinear_ops import free_evolution_samples, truncated_convolution
from src.errors import NonMeanZeroError, PicardDivergenceError, StabilityError
from src.fourier_field import SpatialSpectrum, spatial_mesh
from src.kp_solver import (
    SolverConfig,
    cosine_data,
    duhamel_picard,
    energy_proxy,
    etdrk4_coefficients,
    l2_drift,
    lipschitz_probe,
    periodic_square,
    preflight,
    rhs_nonlinear,
    solve_cauchy,
    step,
    time_step_convergence,
)
from src.phase_resonance import DispersionParams


class TestData:
    """Initial data and the right-hand side."""

    def test_cosine_data_is_real_and_mean_zero(self):
        u0 = cosine_data(3, 2, 0.4)
        assert u0.mode(1, (1, 0)) == pytest.approx(0.2)
        assert u0.mode(-1, (-1, 0)) == pytest.approx(0.2)
        assert u0.mean_mass() == 0.0

    def test_cosine_mode_with_zero_k(self):
        with pytest.raises(NonMeanZeroError):
            cosine_data(2, 2, 1.0, modes=((0, 1, 0),))

    def test_quadratic_term_of_one_cosine(self):
        a = 0.6
        u = cosine_data(6, 6, a, modes=((1, 0, 0),))
        out = rhs_nonlinear(u, SolverConfig(K=6, M=6))
        assert out.mode(2, (0, 0)) == pytest.approx(-1j * a * a / 4.0)
        assert out.mean_mass() == 0.0

    @pytest.mark.parametrize("K, M", [(6, 6), (8, 5)])
    def test_native_grid_square_matches_the_convolution(self, rng, K, M):
        cfg = SolverConfig(K=K, M=M)
        assert cfg.alias_free
        kd, md = cfg.dealias_bounds
        k, e1, e2 = spatial_mesh(K, M)
        mask = (np.abs(k) <= kd) & (np.abs(e1) <= md) & (np.abs(e2) <= md)
        u = (rng.standard_normal(mask.shape) + 1j * rng.standard_normal(mask.shape)) * mask
        np.testing.assert_allclose(periodic_square(u) * mask, truncated_convolution(u, u) * mask, atol=1e-10)

    def test_wide_mask_keeps_the_padded_product(self):
        cfg = SolverConfig(K=6, M=6, dealias=1.0)
        assert not cfg.alias_free
        u = cosine_data(6, 6, 0.6, modes=((5, 0, 0),))
        # 5 + 5 = 10 wraps onto k = -3 on the native grid but lies outside the truncation
        assert np.all(rhs_nonlinear(u, cfg).coeffs == 0)

    def test_energy_proxy(self):
        # |k|^2 - |eta|^2 / k^2 vanishes at (1, 1, 0) and is 3.75 at (2, 1, 0)
        assert energy_proxy(cosine_data(3, 2, 2.0, modes=((1, 1, 0),)), DispersionParams()) == pytest.approx(0.0)
        assert energy_proxy(cosine_data(3, 2, 2.0, modes=((2, 1, 0),)), DispersionParams()) == pytest.approx(3.75)


class TestIntegrators:
    """Time stepping with the integrating factor and ETDRK4."""

    def test_linear_run_is_the_free_evolution(self):
        u0 = cosine_data(4, 4, 1.0)
        cfg = SolverConfig(K=4, M=4, dt=0.01, t_end=0.5, nonlinear=False)
        traj = solve_cauchy(u0, cfg)
        assert l2_drift(traj) < 1e-12
        expected = free_evolution_samples(u0, DispersionParams(), [0.5])[0]
        np.testing.assert_allclose(traj.states[-1].coeffs, expected, atol=1e-10)

    def test_nonlinear_run_conserves_l2(self):
        traj = solve_cauchy(cosine_data(6, 6, 0.1), SolverConfig(K=6, M=6, dt=1e-3, t_end=0.1))
        assert l2_drift(traj) < 1e-6

    def test_schemes_agree(self):
        u0 = cosine_data(6, 6, 0.1)
        cfg = SolverConfig(K=6, M=6, dt=1e-3, t_end=0.05)
        a = solve_cauchy(u0, cfg).states[-1]
        b = solve_cauchy(u0, cfg.model_copy(update={"scheme": "etdrk4"})).states[-1]
        assert (a - b).norm() < 1e-6

    def test_single_step_matches_the_trajectory(self):
        u0 = cosine_data(4, 4, 0.2)
        cfg = SolverConfig(K=4, M=4, dt=1e-3, t_end=1e-3)
        np.testing.assert_allclose(step(u0, cfg).coeffs, solve_cauchy(u0, cfg).states[-1].coeffs)

    def test_fourth_order_convergence(self):
        u0 = cosine_data(6, 6, 0.5)
        cfg = SolverConfig(K=6, M=6, t_end=0.1)
        report = time_step_convergence(u0, cfg, [0.01, 0.005], cfg.model_copy(update={"dt": 0.00125}))
        assert report.reduction_factors[0] >= 8.0
        assert not report.flagged

    def test_roundoff_errors_are_flagged(self):
        u0 = cosine_data(3, 3, 0.2)
        cfg = SolverConfig(K=3, M=3, t_end=0.05, nonlinear=False)
        report = time_step_convergence(u0, cfg, [0.01, 0.005], cfg.model_copy(update={"dt": 0.0025}))
        assert max(report.errors) < 1e-12
        assert report.flagged

    def test_save_points(self):
        cfg = SolverConfig(K=3, M=3, dt=1e-3, t_end=0.01, save_every=4)
        traj = solve_cauchy(cosine_data(3, 3, 0.1), cfg)
        assert traj.times == pytest.approx([0.0, 0.004, 0.008, 0.01])
        assert len(traj.diagnostics_rows()) == 11


class TestEtdrk4Coefficients:
    """Contour averaging near z = 0."""

    def test_limits_at_zero(self):
        h = 0.1
        out = etdrk4_coefficients(np.array([0.0]), h)
        assert out["Q"][0] == pytest.approx(h / 2.0, rel=1e-10)
        for key in ("f1", "f2", "f3"):
            assert out[key][0] == pytest.approx(h / 6.0, rel=1e-10)

    def test_contour_matches_closed_form(self):
        h, z = 0.1, 0.3
        ez = np.exp(z)
        out = etdrk4_coefficients(np.array([z]), h)
        assert out["Q"][0] == pytest.approx(h * (np.exp(z / 2) - 1) / z, rel=1e-10)
        assert out["f1"][0] == pytest.approx(h * (-4 - z + ez * (4 - 3 * z + z * z)) / z ** 3, rel=1e-10)
        assert out["f2"][0] == pytest.approx(h * (2 + z + ez * (z - 2)) / z ** 3, rel=1e-10)
        assert out["f3"][0] == pytest.approx(h * (-4 - 3 * z - z * z + ez * (4 - z)) / z ** 3, rel=1e-10)


class TestPreconditions:
    """Data and step-size checks before a run."""

    def test_preflight_rejects_a_large_step(self):
        u0 = cosine_data(8, 8, 100.0)
        cfg = SolverConfig(K=8, M=8, dt=0.01, t_end=0.1)
        assert not preflight(u0, cfg).ok
        with pytest.raises(StabilityError):
            solve_cauchy(u0, cfg)

    def test_zero_data_has_no_bound(self):
        assert preflight(SpatialSpectrum.zeros(2, 2), SolverConfig(K=2, M=2)).ok

    def test_complex_data_is_rejected(self):
        u0 = SpatialSpectrum.from_modes(2, 2, {(1, 0, 0): 1.0})
        with pytest.raises(ValueError):
            solve_cauchy(u0, SolverConfig(K=2, M=2, t_end=0.01))

    def test_mean_mass_is_rejected(self):
        u0 = SpatialSpectrum.from_modes(2, 2, {(0, 1, 0): 1.0, (0, -1, 0): 1.0})
        with pytest.raises(NonMeanZeroError):
            solve_cauchy(u0, SolverConfig(K=2, M=2, t_end=0.01))

    def test_bounds_mismatch(self):
        with pytest.raises(ValueError):
            solve_cauchy(cosine_data(2, 2, 0.1), SolverConfig(K=3, M=2, t_end=0.01))

    def test_dealias_fraction(self):
        with pytest.raises(ValueError):
            SolverConfig(dealias=1.5)


class TestLipschitz:
    """Difference of two solutions against the difference of their data."""

    def test_linear_flow_is_an_isometry(self):
        cfg = SolverConfig(K=3, M=3, dt=0.01, nonlinear=False)
        u0 = cosine_data(3, 3, 0.2)
        v0 = cosine_data(3, 3, 0.2, modes=((1, 0, 0), (1, 1, 0), (2, 0, 1)))
        report = lipschitz_probe(u0, v0, cfg, T=0.2)
        assert report.ratio == pytest.approx(1.0, rel=1e-10)

    def test_identical_data_is_flagged(self):
        u0 = cosine_data(3, 3, 0.2)
        report = lipschitz_probe(u0, u0, SolverConfig(K=3, M=3, dt=0.01), T=0.1)
        assert report.flagged and report.ratio is None


class TestPicard:
    """Duhamel iterates and their contraction."""

    def test_small_data_contracts(self):
        u0 = cosine_data(6, 6, 0.05, modes=((1, 0, 0),))
        result = duhamel_picard(u0, SolverConfig(K=6, M=6, dt=1e-3), depth=4, T=0.05)
        report = result.report
        assert len(result.iterates) == 4
        assert len(report.ratios_l2) == 3
        assert report.contracting
        assert report.stepper_difference < 1e-5

    def test_first_iterate_is_the_free_evolution(self):
        u0 = cosine_data(4, 4, 0.1)
        result = duhamel_picard(u0, SolverConfig(K=4, M=4, dt=1e-3), depth=1, T=0.02, compare=False)
        expected = free_evolution_samples(u0, DispersionParams(), [0.02])[0]
        np.testing.assert_allclose(result.iterates[0].coeffs, expected, atol=1e-12)

    def test_large_data_diverges(self):
        u0 = cosine_data(4, 4, 200.0, modes=((1, 0, 0),))
        with pytest.raises(PicardDivergenceError) as excinfo:
            duhamel_picard(u0, SolverConfig(K=4, M=4, dt=1e-3), depth=4, T=0.5)
        assert excinfo.value.report.ratios_l2

    def test_depth_must_be_positive(self):
        with pytest.raises(ValueError):
            duhamel_picard(cosine_data(2, 2, 0.1), SolverConfig(K=2, M=2), depth=0, T=0.1)

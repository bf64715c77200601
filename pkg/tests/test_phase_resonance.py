"""
Tests for the phase function and the resonance relation.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import ResonantInteractionError
from src.fourier_field import FreqPoint
from src.phase_resonance import (
    DispersionParams,
    max_sigma_lower_bound,
    phi,
    phi0,
    phi_grid,
    r_term_magnitude_check,
    r_term_value,
    resonance_decomposition,
    resonance_identity_sweep,
    sigma,
    sigma_grid,
)


class TestDispersion:
    """phi0, phi and sigma."""

    def test_kp_phase_is_exact_integer(self):
        p = DispersionParams()
        assert phi0(2, p) == 8 and isinstance(phi0(2, p), int)
        assert phi0(-2, p) == -8

    def test_fractional_phase(self):
        assert phi0(2, DispersionParams(alpha=2.5)) == pytest.approx(2 ** 3.5)

    def test_phi_subtracts_the_transverse_term(self):
        assert phi(FreqPoint(2, (2, 0)), DispersionParams()) == pytest.approx(6.0)
        assert sigma(1.0, FreqPoint(-1, (1, 1)), DispersionParams()) == pytest.approx(1.0 - (-1.0 + 2.0))

    def test_zero_frequency_is_resonant(self):
        with pytest.raises(ResonantInteractionError):
            phi0(0, DispersionParams())
        with pytest.raises(ResonantInteractionError):
            phi(FreqPoint(0, (1, 0)), DispersionParams())

    def test_alpha_below_two_is_rejected(self):
        with pytest.raises(ValidationError):
            DispersionParams(alpha=1.5)

    def test_table_phase_is_extended_oddly(self):
        p = DispersionParams(phi0_table={1: 1.0, 2: 5.0})
        assert phi0(-2, p) == -5.0
        assert not p.exact
        with pytest.raises(KeyError):
            phi0(3, p)

    @pytest.mark.parametrize("table", [{0: 1.0}, {1: 1.0, -1: 2.0}])
    def test_invalid_tables_are_rejected(self, table):
        with pytest.raises(ValidationError):
            DispersionParams(phi0_table=table)

    def test_vectorised_phase_matches_pointwise(self):
        p = DispersionParams(alpha=3.0)
        ks = np.array([-3, -1, 1, 2])
        values = phi_grid(ks, np.array([1, 0, 2, -1]), np.array([0, 2, 1, 1]), p)
        expected = [phi(FreqPoint(int(k), (int(a), int(b))), p) for k, a, b in zip(ks, [1, 0, 2, -1], [0, 2, 1, 1])]
        np.testing.assert_allclose(values, expected)

    def test_vectorised_modulation(self):
        p = DispersionParams()
        ks = np.array([0, -2, 1, 3])
        e1, e2 = np.array([1, 0, 2, -1]), np.array([0, 2, 1, 1])
        taus = np.array([1.5, -4.0, 0.0, 2.0])
        values = sigma_grid(taus, ks, e1, e2, p)
        assert values[0] == 1.5
        expected = [sigma(t, FreqPoint(int(k), (int(a), int(b))), p) for t, k, a, b in zip(taus[1:], ks[1:], e1[1:], e2[1:])]
        np.testing.assert_allclose(values[1:], expected)


class TestResonance:
    """sigma1 + sigma2 - sigma = r(k, k1) + |k eta1 - k1 eta|^2 / (k k1 k2)."""

    def test_kp_r_term_is_three_k_k1_k2(self):
        p = DispersionParams()
        for k1 in range(-6, 7):
            for k2 in range(-6, 7):
                if 0 not in (k1, k2, k1 + k2):
                    assert r_term_value(k1, k2, p) == 3 * (k1 + k2) * k1 * k2

    @pytest.mark.parametrize("alpha", [2.0, 2.5, 4.0])
    def test_decomposition_sums_to_the_modulation_difference(self, alpha):
        p = DispersionParams(alpha=alpha)
        xi1, xi2 = FreqPoint(1, (2, -1)), FreqPoint(2, (0, 3))
        tau1, tau2 = 0.3, -1.7
        split = resonance_decomposition(xi1, xi2, p)
        lhs = sigma(tau1, xi1, p) + sigma(tau2, xi2, p) - sigma(tau1 + tau2, xi1 + xi2, p)
        assert split.total == pytest.approx(lhs, rel=1e-12, abs=1e-9)
        assert split.total == pytest.approx(split.r_term + split.mixed_term)

    def test_null_interaction_is_resonant(self):
        with pytest.raises(ResonantInteractionError):
            resonance_decomposition(FreqPoint(1, (0, 0)), FreqPoint(-1, (2, 0)), DispersionParams())
        with pytest.raises(ResonantInteractionError):
            r_term_value(2, 0, DispersionParams())

    def test_mixed_term_shares_the_sign_of_the_r_term(self):
        p = DispersionParams()
        split = resonance_decomposition(FreqPoint(-2, (1, 1)), FreqPoint(5, (-3, 2)), p)
        assert np.sign(split.mixed_term) in (0.0, np.sign(split.r_term))

    def test_kp_magnitude_bracket(self):
        sample = [(a, b) for a in range(-20, 21) for b in range(-20, 21)]
        report = r_term_magnitude_check(sample, DispersionParams())
        assert report.ratio_min >= 1.5 - 1e-12
        assert report.ratio_max < 3.0

    def test_magnitude_check_needs_admissible_pairs(self):
        with pytest.raises(ValueError):
            r_term_magnitude_check([(1, -1), (0, 2)], DispersionParams())

    def test_largest_modulation_carries_a_third(self):
        p = DispersionParams()
        bound = max_sigma_lower_bound(FreqPoint(3, (1, 2)), FreqPoint(-1, (0, 4)), 5.0, -2.0, p)
        assert bound.holds
        assert bound.max_sigma >= abs(bound.total) / 3.0 - 1e-9


class TestIdentitySweep:
    """Exhaustive sweeps over k pairs with sampled eta and tau."""

    def test_kp_sweep_has_no_failures(self):
        report = resonance_identity_sweep(8, 5, DispersionParams(), seed=1)
        assert report.max_relative_deviation < 1e-10
        assert report.exact_r_term_failures == 0
        assert report.same_sign_failures == 0

    def test_fractional_sweep_has_no_sign_failures(self):
        report = resonance_identity_sweep(6, 4, DispersionParams(alpha=3.5), seed=2)
        assert report.max_relative_deviation < 1e-10
        assert report.same_sign_failures == 0

    def test_rows_are_kept_one_per_k_pair(self):
        report = resonance_identity_sweep(3, 2, DispersionParams(), eta_samples=4, seed=0, keep_rows=True)
        assert len(report.rows) == report.pairs // 4
        k1, k2 = report.rows[0][:2]
        assert 0 not in (k1, k2, k1 + k2)

    def test_sweep_is_reproducible(self):
        a = resonance_identity_sweep(4, 3, DispersionParams(alpha=2.5), seed=7)
        b = resonance_identity_sweep(4, 3, DispersionParams(alpha=2.5), seed=7)
        assert a == b

"""
Tests for lattice point counting.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.counting import (
    Annulus,
    Region,
    annulus_counts,
    count_annulus,
    count_annulus_in_region,
    delta_grid,
    divisor_sum_table,
    dyadic_radii,
    fit_growth_exponent,
    loglog_slope,
    dyadic_class_counts,
    parity_class_counts,
    parity_class_table,
    reduce_delta,
    small_region_max_count,
    sum_two_squares,
    sum_two_squares_table,
)


class TestAnnulusCounts:
    """Counts of r <= |eta - delta|^2 < r + 1."""

    @pytest.mark.parametrize("r, expected", [(0, 1), (1, 4), (2, 4), (3, 0), (5, 8), (25, 12)])
    def test_unshifted_annulus_counts_representations(self, r, expected):
        assert count_annulus(Annulus(r=r)) == expected

    def test_half_shift_puts_four_points_in_the_first_annulus(self):
        assert count_annulus(Annulus(r=0, delta=(0.5, 0.5))) == 4

    def test_integer_part_of_the_shift_is_irrelevant(self):
        assert count_annulus(Annulus(r=10, delta=(1.25, -2.5))) == count_annulus(Annulus(r=10, delta=(0.25, 0.5)))

    @pytest.mark.parametrize("delta", [(0.0, 0.0), (0.25, 0.5), (0.5, 0.5), (0.125, 0.875)])
    def test_single_enumeration_agrees_with_per_annulus_counts(self, delta):
        counts = annulus_counts(60, delta)
        assert len(counts) == 61
        for r in range(0, 61, 7):
            assert counts[r] == count_annulus(Annulus(r=r, delta=delta))

    def test_non_dyadic_shift_matches_brute_force(self):
        delta = (1.0 / 3.0, 0.0)
        brute = sum(
            1 for a in range(-6, 7) for b in range(-6, 7) if 7 <= (a - delta[0]) ** 2 + (b - delta[1]) ** 2 < 8
        )
        assert count_annulus(Annulus(r=7, delta=delta)) == brute

    def test_reduce_delta_splits_fraction_and_integer_part(self):
        assert reduce_delta((1.25, -0.5)) == ((0.25, 0.5), (1, -1))

    def test_negative_r_is_rejected(self):
        with pytest.raises(ValidationError):
            Annulus(r=-1)


class TestRegionCounts:
    """Annulus points inside discs and squares."""

    def test_large_disc_contains_the_whole_annulus(self):
        assert count_annulus_in_region(Annulus(r=25), Region(kind="disc", radius=100.0)) == 12

    def test_square_excludes_points_beyond_its_side(self):
        # every point of |eta|^2 = 25 has a coordinate of size 4 or 5
        assert count_annulus_in_region(Annulus(r=25), Region(kind="square", radius=3.5)) == 0

    def test_region_count_never_exceeds_the_annulus_count(self):
        region = Region(kind="disc", center=(3.0, 4.0), radius=2.0)
        for r in (20, 25, 30):
            assert count_annulus_in_region(Annulus(r=r), region) <= count_annulus(Annulus(r=r))

    @pytest.mark.parametrize("radius", [0.0, -1.0, math.inf])
    def test_unbounded_or_empty_regions_are_rejected(self, radius):
        with pytest.raises(ValidationError):
            Region(radius=radius)

    def test_small_regions_hold_at_most_two_points(self):
        assert small_region_max_count([64, 128, 256, 512], seed=3) <= 2
        assert small_region_max_count([64, 128], kind="square", seed=5) <= 2


class TestSumOfTwoSquares:
    """r_2(n) by divisors, by enumeration and by sieve."""

    @pytest.mark.parametrize("n, expected", [(0, 1), (1, 4), (2, 4), (3, 0), (25, 12), (65, 16)])
    def test_known_values(self, n, expected):
        assert sum_two_squares(n) == expected

    def test_tables_agree(self):
        np.testing.assert_array_equal(sum_two_squares_table(5000), divisor_sum_table(5000))

    def test_divisor_formula_matches_the_table(self):
        table = sum_two_squares_table(200)
        assert [sum_two_squares(n) for n in range(201)] == table.tolist()

    def test_negative_input_is_rejected(self):
        with pytest.raises(ValueError):
            sum_two_squares(-1)


class TestParityClasses:
    """Half-integer shifts concentrate |2 eta - 2 delta|^2 in one residue class."""

    @pytest.mark.parametrize(
        "delta, residue",
        [((0.5, 0.5), 2), ((0.0, 0.5), 1), ((0.5, 0.0), 1), ((0.5, 1.0), 1), ((1.0, 0.5), 1), ((0.0, 0.0), 0)],
    )
    def test_single_residue_class(self, delta, residue):
        for r in range(40):
            counts = parity_class_counts(Annulus(r=r, delta=delta))
            assert set(counts) == {0, 1, 2, 3}
            assert all(count == 0 for cls, count in counts.items() if cls != residue)

    def test_class_counts_sum_to_the_annulus_count(self):
        a = Annulus(r=12, delta=(0.5, 0.5))
        assert sum(parity_class_counts(a).values()) == count_annulus(a)

    def test_non_half_integer_shift_is_rejected(self):
        with pytest.raises(ValueError):
            parity_class_counts(Annulus(r=3, delta=(0.25, 0.0)))

    @pytest.mark.parametrize("delta", [(0.5, 0.5), (0.0, 0.5), (1.0, 0.5)])
    def test_table_matches_single_counts(self, delta):
        table = parity_class_table(60, delta)
        assert table.shape == (61, 4)
        for r in (0, 1, 4, 17, 60):
            counts = parity_class_counts(Annulus(r=r, delta=delta))
            assert [counts[c] for c in range(4)] == table[r].tolist()


class TestDyadicClasses:
    """Shifts with denominator 2^m keep |2^m eta - 2^m delta|^2 in one class mod 2^(m+1)."""

    def test_quarter_shift(self):
        a = Annulus(r=10, delta=(0.25, 0.75))
        report = dyadic_class_counts(a)
        assert report.exponent == 2
        assert report.modulus == 8
        assert report.residue == 10 % 8
        assert len(report.admissible) == 2
        assert report.off_class == 0
        assert report.total == count_annulus(a)
        assert set(report.counts) <= set(report.admissible)
        assert report.total <= report.bound

    @pytest.mark.parametrize("delta", [(0.375, 0.125), (0.125, 1.0), (0.625, 0.5)])
    def test_eighth_shifts(self, delta):
        for r in range(0, 120, 7):
            a = Annulus(r=r, delta=delta)
            report = dyadic_class_counts(a)
            assert report.exponent == 3
            assert len(report.admissible) == 4
            assert report.off_class == 0
            assert report.total == count_annulus(a)
            for l, count in report.counts.items():
                assert count <= sum_two_squares(l)

    def test_half_integer_shift_is_the_mod_four_case(self):
        report = dyadic_class_counts(Annulus(r=4, delta=(0.5, 0.5)))
        assert (report.modulus, report.residue) == (4, 2)
        assert report.admissible == [18]
        assert report.counts == {18: 4}

    def test_non_dyadic_shift_is_rejected(self):
        with pytest.raises(ValueError):
            dyadic_class_counts(Annulus(r=3, delta=(1 / 3, 0.0)))


class TestGrowthFits:
    """Dyadic radii, shift grids and log-log slopes."""

    def test_slope_of_a_power_law(self):
        assert loglog_slope([1, 2, 4, 8], [1, 4, 16, 64]) == pytest.approx(2.0)

    def test_non_positive_points_are_dropped(self):
        assert loglog_slope([1, 2, 4], [0, 2, 4]) == pytest.approx(1.0)

    def test_too_few_points_raise(self):
        with pytest.raises(ValueError):
            loglog_slope([1, 2], [1, 0])

    def test_dyadic_radii(self):
        assert dyadic_radii(100) == [1, 2, 4, 8, 16, 32, 64]

    def test_delta_grid_covers_the_closed_square(self):
        grid = delta_grid(2)
        assert len(grid) == 9
        assert (0.5, 0.5) in grid and (1.0, 1.0) in grid

    def test_fit_rejects_small_r_max_and_empty_shifts(self):
        with pytest.raises(ValueError):
            fit_growth_exponent(50, delta_grid(2))
        with pytest.raises(ValueError):
            fit_growth_exponent(1000, [])

    def test_growth_exponent_is_small(self):
        assert fit_growth_exponent(1024, delta_grid(4)) < 0.5

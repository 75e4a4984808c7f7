import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from itemcat.stats import (
    anova,
    f_sf,
    regularized_incomplete_beta,
    studentized_range_q,
    tukey_hsd,
)


class TestIncompleteBeta:
    def test_boundaries(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0

    def test_closed_form_a_equals_one(self):
        # I_x(1, b) = 1 - (1-x)^b
        for b in (1.0, 2.5, 7.0):
            for x in (0.1, 0.5, 0.9):
                expected = 1.0 - (1.0 - x) ** b
                assert regularized_incomplete_beta(1.0, b, x) == pytest.approx(expected, abs=1e-13)

    def test_against_scipy_grid(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            a, b = rng.uniform(0.2, 40.0, size=2)
            x = float(rng.uniform(0.0, 1.0))
            mine = regularized_incomplete_beta(a, b, x)
            ref = scipy.special.betainc(a, b, x)
            assert mine == pytest.approx(ref, abs=1e-12)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            regularized_incomplete_beta(0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            regularized_incomplete_beta(1.0, 1.0, 1.5)


class TestFSurvival:
    def test_against_scipy(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            d1 = int(rng.integers(1, 40))
            d2 = int(rng.integers(2, 120))
            f = float(rng.uniform(0.0, 12.0))
            assert f_sf(f, d1, d2) == pytest.approx(scipy.stats.f.sf(f, d1, d2), abs=1e-12)

    def test_extremes(self):
        assert f_sf(math.inf, 3, 10) == 0.0
        assert f_sf(-1.0, 3, 10) == 1.0


class TestAnova:
    def test_hand_computed_example(self):
        result = anova([[1, 2, 3], [2, 3, 4], [3, 4, 5]])
        assert result.f == pytest.approx(3.0, abs=1e-12)
        assert result.p == pytest.approx(0.125, abs=1e-12)
        assert (result.df_between, result.df_within) == (2, 6)

    def test_identical_constant_groups(self):
        result = anova([[2.0, 2.0], [2.0, 2.0]])
        assert result.f == 0.0
        assert result.p == 1.0

    def test_zero_within_variance_with_different_means(self):
        result = anova([[1.0, 1.0], [2.0, 2.0]])
        assert math.isinf(result.f)
        assert result.p == 0.0

    def test_against_scipy_random_groups(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            groups = [rng.normal(rng.uniform(-1, 1), 1.0, size=rng.integers(3, 12)) for _ in range(rng.integers(2, 6))]
            mine = anova(groups)
            ref_f, ref_p = scipy.stats.f_oneway(*groups)
            assert mine.f == pytest.approx(ref_f, rel=1e-10)
            assert mine.p == pytest.approx(ref_p, abs=1e-10)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        groups = [rng.normal(size=8).tolist() for _ in range(4)]
        base = anova(groups)
        for _ in range(5):
            shuffled = [list(g) for g in groups]
            for g in shuffled:
                rng.shuffle(g)
            result = anova(shuffled)
            assert result.f == pytest.approx(base.f, rel=1e-12)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            anova([[1, 2]])
        with pytest.raises(ValueError):
            anova([[1.0], [2.0, 3.0]])


class TestStudentizedRange:
    def test_table_values_match_published_entries(self):
        # spot values from standard alpha=0.05 tables
        assert studentized_range_q(3, 10) == pytest.approx(3.88, abs=0.01)
        assert studentized_range_q(4, 20) == pytest.approx(3.96, abs=0.01)
        assert studentized_range_q(2, 60) == pytest.approx(2.83, abs=0.01)

    def test_interpolated_values_stay_close_to_scipy(self):
        for k in (2, 5, 9):
            for df in (13, 33, 47, 111, 155, 199):
                mine = studentized_range_q(k, df)
                ref = scipy.stats.studentized_range.ppf(0.95, k, df)
                assert mine == pytest.approx(ref, abs=5e-3)

    def test_bounds(self):
        with pytest.raises(ValueError):
            studentized_range_q(11, 50)
        with pytest.raises(ValueError):
            studentized_range_q(3, 5)
        # beyond the table df clamps to the last row
        assert studentized_range_q(3, 10_000) == studentized_range_q(3, 200)


class TestTukey:
    # tensile-strength-by-hardwood-concentration data, a classic worked
    # example whose published conclusion rejects every pair except 10% vs 15%
    HARDWOOD = [
        [7, 8, 15, 11, 9, 10],
        [12, 17, 13, 18, 19, 15],
        [14, 18, 19, 17, 16, 18],
        [19, 25, 22, 23, 18, 20],
    ]

    def test_worked_example_reject_pattern(self):
        table = tukey_hsd(self.HARDWOOD, labels=["c5", "c10", "c15", "c20"])
        rejects = {(p.group_a, p.group_b): p.reject for p in table.pairs}
        assert rejects == {
            ("c5", "c10"): True,
            ("c5", "c15"): True,
            ("c5", "c20"): True,
            ("c10", "c15"): False,
            ("c10", "c20"): True,
            ("c15", "c20"): True,
        }
        assert table.anova.f == pytest.approx(19.61, abs=0.01)
        assert table.hsd == pytest.approx(4.12, abs=0.01)

    def test_matches_scipy_reject_pattern_on_random_groups(self):
        rng = np.random.default_rng(4)
        checked = 0
        while checked < 50:
            k = int(rng.integers(2, 7))
            n = int(rng.integers(4, 12))
            if k * (n - 1) < 10:  # bundled table starts at df 10
                continue
            groups = [rng.normal(rng.uniform(-1.5, 1.5), 1.0, size=n) for _ in range(k)]
            table = tukey_hsd(groups)
            ref = scipy.stats.tukey_hsd(*groups)
            for pair in table.pairs:
                i = table.group_labels.index(pair.group_a)
                j = table.group_labels.index(pair.group_b)
                assert pair.reject == (ref.pvalue[i][j] < 0.05), (i, j)
            checked += 1

    def test_identical_groups_nothing_rejected(self):
        table = tukey_hsd([[1.0, 2.0, 3.0, 1.5, 2.5, 3.5]] * 4)
        assert not any(p.reject for p in table.pairs)

    def test_extreme_separation_rejects_everything_against_it(self):
        rng = np.random.default_rng(5)
        base = [rng.normal(0, 0.1, size=6).tolist() for _ in range(3)]
        shifted = (rng.normal(0, 0.1, size=6) + 100.0).tolist()
        table = tukey_hsd(base + [shifted], labels=["a", "b", "c", "far"])
        for p in table.pairs:
            involved = "far" in (p.group_a, p.group_b)
            assert p.reject == involved or not involved

        far_pairs = [p for p in table.pairs if "far" in (p.group_a, p.group_b)]
        assert all(p.reject for p in far_pairs)

    def test_pairs_cover_each_combination_once(self):
        table = tukey_hsd([[1, 2, 3]] * 5)
        assert len(table.pairs) == 10
        seen = {(p.group_a, p.group_b) for p in table.pairs}
        assert len(seen) == 10

    def test_unequal_sizes_rejected(self):
        with pytest.raises(ValueError):
            tukey_hsd([[1, 2, 3], [1, 2]])

    def test_unsupported_alpha_rejected(self):
        with pytest.raises(ValueError):
            tukey_hsd([[1, 2, 3]] * 2, alpha=0.01)

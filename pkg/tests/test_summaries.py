import numpy as np
import pytest

from markedk.intensity import constant_intensity, kernel_intensity
from markedk.pattern import RGrid, default_rgrid
from markedk.simulate import gen_binomial, permute_marks
from markedk.summaries import (
    k_hat,
    kappa_tf_hat,
    ktf_hat,
    local_ktf_hat,
    local_ktf_matrix,
    mark_summary,
)

from conftest import UNIT, make_pattern, random_pattern


class TestMarkSummary:
    def test_worked_example(self, three_point_pattern):
        ms = mark_summary(three_point_pattern)
        assert ms.mu == pytest.approx(2.0)
        assert ms.c_tf == pytest.approx(4.0)
        assert ms.c_tf_i[0] == pytest.approx(2.0)
        assert np.allclose(ms.c_tf_i, [2.0, 4.0, 6.0])

    def test_nonpositive_marks_rejected(self):
        p = make_pattern([(0.1, 0.1), (0.2, 0.2)], [1.0, -1.0])
        grid = default_rgrid(UNIT, k=4)
        with pytest.raises(ValueError):
            ktf_hat(p, grid)


class TestKHat:
    def test_worked_example(self, three_point_pattern, grid_015):
        # one unordered pair within 0.15 => ordered count 2 => K = 2 / 9
        curve = k_hat(three_point_pattern, grid_015)
        assert curve.values[-1] == pytest.approx(2.0 / 9.0, rel=1e-14)

    def test_monotone_nondecreasing(self):
        rng = np.random.default_rng(0)
        p = random_pattern(rng, 60)
        curve = k_hat(p, default_rgrid(UNIT, k=32))
        assert np.all(np.diff(curve.values) >= 0)

    def test_needs_two_points(self):
        p = make_pattern([(0.5, 0.5)])
        with pytest.raises(ValueError):
            k_hat(p, default_rgrid(UNIT, k=4))


class TestKtfHat:
    def test_worked_example(self, three_point_pattern, grid_015):
        # pair (0, 1) contributes m0*m1 = 2 each way; c_tf = 4, area = 1, n = 3
        curve = ktf_hat(three_point_pattern, grid_015)
        assert curve.values[-1] == pytest.approx(1.0 / 9.0, rel=1e-14)

    def test_constant_marks_reduce_to_k_hat_bitwise(self):
        rng = np.random.default_rng(1)
        p = random_pattern(rng, 50, mark_low=1.0, mark_high=1.0)
        grid = default_rgrid(UNIT, k=32)
        for edge in ("none", "translation"):
            a = ktf_hat(p, grid, edge=edge).values
            b = k_hat(p, grid, edge=edge).values
            assert np.array_equal(a, b)

    def test_mark_scale_invariance(self):
        rng = np.random.default_rng(2)
        p = random_pattern(rng, 40)
        grid = default_rgrid(UNIT, k=16)
        a = ktf_hat(p, grid).values
        b = ktf_hat(p.with_marks(7.5 * p.marks), grid).values
        assert np.allclose(a, b, rtol=1e-12)

    def test_kernel_intensity_branch_runs(self):
        p = gen_binomial(80, UNIT, seed=3).with_marks(np.linspace(0.5, 1.5, 80))
        grid = default_rgrid(UNIT, k=16)
        curve = ktf_hat(p, grid, kernel_intensity(p))
        assert curve.values.shape == (16,)
        assert np.all(np.isfinite(curve.values))


class TestLocalKtf:
    def test_worked_example_first_point(self, three_point_pattern, grid_015):
        # n / (c_tf,0 |W|) * m0 * m1 / lambda^2 = 3 / 2 * 2 / 9 = 1 / 3
        curve = local_ktf_hat(three_point_pattern, grid_015, i=0)
        assert curve.values[-1] == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_matrix_rows_match_single_point(self):
        rng = np.random.default_rng(3)
        p = random_pattern(rng, 25)
        grid = default_rgrid(UNIT, k=16)
        matrix = local_ktf_matrix(p, grid)
        for i in range(p.n):
            row = local_ktf_hat(p, grid, i=i).values
            assert np.allclose(matrix[i], row, rtol=1e-12, atol=1e-15)

    def test_aggregation_identity(self):
        # (1/n) sum_i (c_tf,i / c_tf) K_tf,i == K_tf for any intensity
        rng = np.random.default_rng(4)
        p = random_pattern(rng, 30)
        grid = default_rgrid(UNIT, k=16)
        ms = mark_summary(p)
        for intensity in (constant_intensity(p), kernel_intensity(p)):
            matrix = local_ktf_matrix(p, grid, intensity)
            agg = (ms.c_tf_i / ms.c_tf) @ matrix / p.n
            want = ktf_hat(p, grid, intensity).values
            assert np.allclose(agg, want, rtol=1e-10, atol=1e-12)

    def test_index_out_of_range(self, three_point_pattern, grid_015):
        with pytest.raises(IndexError):
            local_ktf_hat(three_point_pattern, grid_015, i=3)


class TestKappaTfHat:
    def test_constant_marks_give_one(self):
        rng = np.random.default_rng(5)
        p = random_pattern(rng, 60, mark_low=2.0, mark_high=2.0)
        grid = default_rgrid(UNIT, k=32)
        assert np.allclose(kappa_tf_hat(p, grid).values, 1.0, atol=1e-12)

    def test_independent_marks_near_one(self):
        rng = np.random.default_rng(6)
        curves = []
        for s in range(40):
            p = gen_binomial(150, UNIT, seed=s).with_marks(
                np.random.default_rng(1000 + s).random(150)
            )
            grid = default_rgrid(UNIT, k=32)
            sel = (grid.values >= 0.05) & (grid.values <= 0.2)
            curves.append(kappa_tf_hat(p, grid).values[sel])
        assert np.mean(curves) == pytest.approx(1.0, abs=0.05)

    def test_mark_scale_invariance(self):
        rng = np.random.default_rng(7)
        p = random_pattern(rng, 40)
        grid = default_rgrid(UNIT, k=16)
        a = kappa_tf_hat(p, grid).values
        b = kappa_tf_hat(p.with_marks(3.0 * p.marks), grid).values
        assert np.allclose(a, b, rtol=1e-12)

    def test_empty_bins_fall_back_to_one(self):
        p = make_pattern([(0.1, 0.1), (0.9, 0.9)], [1.0, 2.0])
        grid = default_rgrid(UNIT, k=8)
        assert np.allclose(kappa_tf_hat(p, grid).values, 1.0)

    def test_bandwidth_validation(self):
        rng = np.random.default_rng(8)
        p = random_pattern(rng, 10)
        with pytest.raises(ValueError):
            kappa_tf_hat(p, default_rgrid(UNIT, k=8), bandwidth=0.0)

    def test_detects_correlated_marks(self):
        # marks equal to a smooth field of the location => kappa > 1 at short r
        rng = np.random.default_rng(9)
        p = random_pattern(rng, 200)
        field = 0.1 + np.exp(2.0 * p.coords[:, 0])
        p = p.with_marks(field)
        grid = default_rgrid(UNIT, k=32)
        curve = kappa_tf_hat(p, grid)
        assert curve.values[:8].mean() > 1.02


class TestPermutationMean:
    def test_small_pattern_enumeration(self):
        # full permutation enumeration: mean K_tf equals
        # K * n (S1^2 - S2) / ((n - 1) S1^2)
        from itertools import permutations

        rng = np.random.default_rng(10)
        p = random_pattern(rng, 5)
        grid = default_rgrid(UNIT, k=8)
        base = k_hat(p, grid).values
        total = np.zeros(len(grid))
        count = 0
        for perm in permutations(range(p.n)):
            total += ktf_hat(p.with_marks(p.marks[list(perm)]), grid).values
            count += 1
        mean_curve = total / count
        s1 = p.marks.sum()
        s2 = (p.marks**2).sum()
        factor = p.n * (s1**2 - s2) / ((p.n - 1) * s1**2)
        assert np.allclose(mean_curve, base * factor, rtol=1e-10, atol=1e-13)

    def test_permute_marks_preserves_k_hat(self):
        rng = np.random.default_rng(11)
        p = random_pattern(rng, 20)
        grid = default_rgrid(UNIT, k=8)
        q = permute_marks(p, seed=2)
        assert np.array_equal(k_hat(p, grid).values, k_hat(q, grid).values)

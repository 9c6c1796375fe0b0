import numpy as np
import pytest
from scipy.stats import chi2

from markedk.pattern import Window, boundary_distances
from markedk.simulate import (
    BoundaryPower,
    HomPoisson,
    ScenarioSpec,
    assign_marks_boundary,
    assign_marks_iid,
    assign_marks_local_centers,
    gen_binomial,
    gen_hom_poisson,
    gen_inhom_poisson_linear,
    gen_thomas_superposition,
    generate,
    permute_marks,
    substream,
)

from conftest import UNIT, make_pattern


class TestSubstream:
    def test_deterministic(self):
        a = substream(42, 1, 2).random(5)
        b = substream(42, 1, 2).random(5)
        assert np.array_equal(a, b)

    def test_distinct_keys_differ(self):
        a = substream(42, 1).random(5)
        b = substream(42, 2).random(5)
        assert not np.array_equal(a, b)


class TestHomPoisson:
    def test_points_inside_window(self):
        p = gen_hom_poisson(100.0, UNIT, seed=0)
        assert np.all(UNIT.contains(p.coords[:, 0], p.coords[:, 1]))

    def test_mean_count(self):
        counts = [gen_hom_poisson(50.0, UNIT, seed=s).n for s in range(400)]
        assert np.mean(counts) == pytest.approx(50.0, abs=1.5)

    def test_rate_scales_with_area(self):
        big = Window(0.0, 2.0, 0.0, 2.0)
        counts = [gen_hom_poisson(25.0, big, seed=s).n for s in range(200)]
        assert np.mean(counts) == pytest.approx(100.0, abs=3.0)

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(ValueError):
            gen_hom_poisson(0.0, UNIT, seed=0)


class TestBinomial:
    def test_exact_count(self):
        assert gen_binomial(37, UNIT, seed=3).n == 37

    def test_deterministic(self):
        a = gen_binomial(20, UNIT, seed=5)
        b = gen_binomial(20, UNIT, seed=5)
        assert np.array_equal(a.coords, b.coords)


class TestInhomPoissonLinear:
    @pytest.mark.parametrize("slope,expected", [(180.0, 100.0), (30.0, 25.0), (0.0, 10.0)])
    def test_expected_count(self, slope, expected):
        counts = [gen_inhom_poisson_linear(slope, UNIT, seed=s).n for s in range(400)]
        se = np.sqrt(expected / 400)
        assert np.mean(counts) == pytest.approx(expected, abs=5 * se + 0.5)

    def test_thinning_profile(self):
        # pool patterns until >= 1e4 points, then chi-square GOF against the
        # lambda(x) = 10 + 180 x profile on 10 equal x-bins at the 1% level
        xs = []
        seed = 0
        while sum(len(v) for v in xs) < 10_000:
            xs.append(gen_inhom_poisson_linear(180.0, UNIT, seed=seed).coords[:, 0])
            seed += 1
        x = np.concatenate(xs)
        observed, edges = np.histogram(x, bins=10, range=(0.0, 1.0))
        centers = 0.5 * (edges[:-1] + edges[1:])
        weights = 10.0 + 180.0 * centers
        expected = x.size * weights / weights.sum()
        stat = float(np.sum((observed - expected) ** 2 / expected))
        assert stat < chi2.ppf(0.99, df=9)

    def test_slope_bound(self):
        with pytest.raises(ValueError):
            gen_inhom_poisson_linear(-10.0, UNIT, seed=0)


class TestThomas:
    def test_truth_flags_offspring(self):
        lab = gen_thomas_superposition(35.0, 5.0, 3.0, 0.03, UNIT, seed=1)
        assert lab.truth.dtype == bool
        assert lab.truth.size == lab.pattern.n

    def test_all_inside_window(self):
        lab = gen_thomas_superposition(35.0, 5.0, 3.0, 0.03, UNIT, seed=2)
        c = lab.pattern.coords
        assert np.all(UNIT.contains(c[:, 0], c[:, 1]))

    def test_rayleigh_displacement_mean(self):
        # isotropic Gaussian displacement => Rayleigh radius, mean sigma*sqrt(pi/2)
        sigma = 0.03
        rng = np.random.default_rng(0)
        radii = np.hypot(*(rng.normal(scale=sigma, size=(2, 200_000))))
        assert radii.mean() == pytest.approx(sigma * np.sqrt(np.pi / 2), rel=0.01)

    def test_clustered_fraction(self):
        from markedk.experiments import thomas_params

        bg, par, off = thomas_params(100.0)
        fracs = []
        for s in range(300):
            lab = gen_thomas_superposition(bg, par, off, 0.03, UNIT, seed=s)
            if lab.pattern.n:
                fracs.append(lab.truth.mean())
        assert np.mean(fracs) == pytest.approx(0.30, abs=0.04)

    def test_nonpositive_params_rejected(self):
        with pytest.raises(ValueError):
            gen_thomas_superposition(0.0, 5.0, 3.0, 0.03, UNIT, seed=0)


class TestMarkSchemes:
    def test_boundary_marks(self):
        p = gen_binomial(50, UNIT, seed=7)
        for h in (1.0, 2.0, 3.0):
            marked = assign_marks_boundary(p, h)
            want = boundary_distances(p.coords, UNIT) ** h
            assert np.array_equal(marked.marks, want)

    def test_boundary_requires_positive_h(self):
        p = gen_binomial(10, UNIT, seed=7)
        with pytest.raises(ValueError):
            assign_marks_boundary(p, 0.0)

    def test_local_centers_truth_radius(self):
        p = gen_binomial(80, UNIT, seed=9)
        lab = assign_marks_local_centers(p, k=3, radius=0.05, mark_mean=5.0, mark_sd=1.0, seed=11)
        c = lab.pattern.coords
        # every flagged point is within the radius of some other flagged point's
        # neighborhood center, i.e. the flagged set is non-empty and marks split
        assert lab.truth.any()
        assert np.all(lab.pattern.marks[~lab.truth] <= 1.0)
        assert np.all(lab.pattern.marks[~lab.truth] >= 0.0)
        assert lab.pattern.marks[lab.truth].mean() > 2.0
        assert c.shape[0] == 80

    def test_local_centers_k_bound(self):
        p = gen_binomial(5, UNIT, seed=9)
        with pytest.raises(ValueError):
            assign_marks_local_centers(p, k=6, radius=0.05, mark_mean=5.0, mark_sd=1.0, seed=0)

    def test_iid_uniform_range(self):
        p = gen_binomial(200, UNIT, seed=13)
        marks = assign_marks_iid(p, seed=1).marks
        assert marks.min() >= 0.0 and marks.max() <= 1.0
        assert 0.4 < marks.mean() < 0.6

    def test_iid_empirical_pool(self):
        p = gen_binomial(50, UNIT, seed=13)
        pool = [2.0, 3.0, 5.0]
        marks = assign_marks_iid(p, seed=1, pool=pool).marks
        assert set(marks.tolist()) <= set(pool)

    def test_permute_marks_multiset(self):
        p = make_pattern([(0.1, 0.1), (0.2, 0.2), (0.3, 0.3)], [1.0, 2.0, 3.0])
        q = permute_marks(p, seed=4)
        assert sorted(q.marks.tolist()) == [1.0, 2.0, 3.0]
        assert np.array_equal(q.coords, p.coords)


class TestScenarioSpec:
    def test_dict_round_trip(self):
        spec = ScenarioSpec(HomPoisson(50.0), BoundaryPower(2.0), UNIT)
        again = ScenarioSpec.from_dict(spec.to_dict())
        assert again.to_dict() == spec.to_dict()

    def test_generate_deterministic(self):
        spec = ScenarioSpec(HomPoisson(50.0), BoundaryPower(2.0), UNIT)
        a = generate(spec, seed=21)
        b = generate(spec, seed=21)
        assert np.array_equal(a.pattern.coords, b.pattern.coords)
        assert np.array_equal(a.pattern.marks, b.pattern.marks)
        assert np.array_equal(a.truth, b.truth)

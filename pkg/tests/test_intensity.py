import numpy as np
import pytest

from markedk.intensity import auto_bandwidth, constant_intensity, kernel_intensity
from markedk.pattern import Window
from markedk.simulate import gen_binomial, gen_hom_poisson

from conftest import UNIT, make_pattern


class TestConstantIntensity:
    def test_census_oracle(self):
        big = Window(0.0, 100.0, 0.0, 100.0)
        p = gen_binomial(504, big, seed=0)
        est = constant_intensity(p)
        assert est.at_points.shape == (504,)
        assert np.all(est.at_points == 504 / 10_000.0)

    def test_rectangle_oracle(self):
        w = Window(0.0, 2.0, 0.0, 1.0)
        p = make_pattern([(0.1, 0.1), (1.0, 0.5), (1.9, 0.9)], window=w)
        assert np.all(constant_intensity(p).at_points == 1.5)

    def test_kind(self):
        p = gen_binomial(10, UNIT, seed=0)
        assert constant_intensity(p).kind == "constant"


class TestAutoBandwidth:
    def test_reference_value(self):
        p = gen_binomial(100, UNIT, seed=1)
        assert auto_bandwidth(p) == pytest.approx(0.15, rel=1e-12)

    def test_shrinks_with_n(self):
        a = auto_bandwidth(gen_binomial(100, UNIT, seed=1))
        b = auto_bandwidth(gen_binomial(400, UNIT, seed=1))
        assert b == pytest.approx(a / 2, rel=1e-12)

    def test_clamped(self):
        lo = auto_bandwidth(gen_binomial(100_000, UNIT, seed=1))
        hi = auto_bandwidth(gen_binomial(2, UNIT, seed=1))
        assert lo >= 0.01
        assert hi <= 0.5


class TestKernelIntensity:
    def test_mean_level_on_dense_csr(self):
        p = gen_hom_poisson(10_000.0, UNIT, seed=3)
        est = kernel_intensity(p)
        assert est.kind == "kernel"
        assert 0.9 <= est.at_points.mean() / 10_000.0 <= 1.1

    def test_mass_conservation_under_csr(self):
        # under CSR the data points sample the window uniformly, so the
        # average of the leave-one-out values times the area approximates
        # the integral of the estimate, which should be close to n
        p = gen_hom_poisson(2000.0, UNIT, seed=5)
        est = kernel_intensity(p)
        integral = est.at_points.mean() * UNIT.area()
        assert integral == pytest.approx(p.n, rel=0.05)

    def test_floor_applied(self):
        # far-apart points with a tiny bandwidth: leave-one-out density would
        # underflow without the floor
        p = make_pattern([(0.05, 0.05), (0.95, 0.95)])
        est = kernel_intensity(p, bandwidth=0.01)
        assert np.all(est.at_points > 0)

    def test_tracks_density_gradient(self):
        # clustered half vs sparse half: higher estimate where points crowd
        rng = np.random.default_rng(7)
        left = np.column_stack([rng.random(300) * 0.4, rng.random(300)])
        right = np.column_stack([0.6 + rng.random(30) * 0.4, rng.random(30)])
        p = make_pattern(np.vstack([left, right]))
        est = kernel_intensity(p)
        assert est.at_points[:300].mean() > 2 * est.at_points[300:].mean()

    def test_bandwidth_must_be_positive(self):
        p = gen_binomial(10, UNIT, seed=0)
        with pytest.raises(ValueError):
            kernel_intensity(p, bandwidth=-0.1)

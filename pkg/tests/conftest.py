import numpy as np
import pytest

from markedk.pattern import MarkedPattern, RGrid, Window

UNIT = Window(0.0, 1.0, 0.0, 1.0)


def make_pattern(coords, marks=None, window=UNIT):
    coords = np.asarray(coords, dtype=float)
    if marks is None:
        marks = np.ones(len(coords))
    return MarkedPattern(coords, np.asarray(marks, dtype=float), window)


def random_pattern(rng, n, window=UNIT, mark_low=0.5, mark_high=2.0):
    coords = np.column_stack(
        [
            window.xmin + rng.random(n) * window.width,
            window.ymin + rng.random(n) * window.height,
        ]
    )
    marks = rng.uniform(mark_low, mark_high, n)
    return MarkedPattern(coords, marks, window)


@pytest.fixture
def three_point_pattern():
    """The worked 3-point example used throughout the estimator tests."""
    return make_pattern([(0.1, 0.1), (0.1, 0.2), (0.5, 0.5)], [1.0, 2.0, 3.0])


@pytest.fixture
def grid_015():
    """Single-purpose grid whose last value is 0.15."""
    return RGrid(np.array([0.075, 0.15]))

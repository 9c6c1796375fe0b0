"""Input validation helpers shared by the estimator API and the CLI."""

from __future__ import annotations

import numpy as np

from .pattern import MarkedPattern, RGrid, Window, default_rgrid

__all__ = ["as_pattern", "check_grid", "check_positive", "check_seed"]


def as_pattern(X, marks=None, window: Window | None = None) -> MarkedPattern:
    """Coerce input to a MarkedPattern.

    Accepts an existing MarkedPattern, an (n, 2) coordinate array with a
    separate mark vector, or an (n, 3) array whose third column holds the
    marks. When no window is given the bounding box of the points is used.
    """
    if isinstance(X, MarkedPattern):
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise ValueError("expected an (n, 2) or (n, 3) array of points")
    coords = arr[:, :2]
    if marks is None:
        if arr.shape[1] == 3:
            marks = arr[:, 2]
        else:
            marks = np.ones(len(arr))
    if window is None:
        if len(coords) == 0:
            raise ValueError("cannot infer a window from an empty pattern")
        window = Window(
            float(coords[:, 0].min()),
            float(coords[:, 0].max()),
            float(coords[:, 1].min()),
            float(coords[:, 1].max()),
        )
    return MarkedPattern(coords, marks, window)


def check_grid(pattern: MarkedPattern, grid: RGrid | None, grid_size: int = 128, rmax: float | None = None) -> RGrid:
    """Resolve an explicit grid, or build the default one for the window."""
    if grid is not None:
        return grid
    if rmax is None:
        return default_rgrid(pattern.window, grid_size)
    if rmax <= 0:
        raise ValueError("rmax must be positive")
    return RGrid(rmax * np.arange(1, grid_size + 1) / grid_size)


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_seed(seed) -> int:
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    return seed

"""Core data model: observation window, marked point pattern, distance grid,
and a fixed-radius grid index for neighbour pair enumeration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Window",
    "MarkedPattern",
    "RGrid",
    "NeighborIndex",
    "distance",
    "boundary_distance",
    "default_rgrid",
    "build_index",
]


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangular observation window."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("window must have xmax > xmin and ymax > ymin")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def min_side(self) -> float:
        return min(self.width, self.height)

    def area(self) -> float:
        return self.width * self.height

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (
            (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)
        )

    def to_dict(self) -> dict:
        return {
            "xmin": self.xmin,
            "xmax": self.xmax,
            "ymin": self.ymin,
            "ymax": self.ymax,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Window":
        return cls(d["xmin"], d["xmax"], d["ymin"], d["ymax"])


UNIT_SQUARE = Window(0.0, 1.0, 0.0, 1.0)


def distance(p, q) -> float:
    """Euclidean distance between two planar points."""
    return math.hypot(p[0] - q[0], p[1] - q[1])


def boundary_distance(p, window: Window) -> float:
    """Shortest distance from a point inside ``window`` to its boundary."""
    x, y = float(p[0]), float(p[1])
    if not window.contains(x, y):
        raise ValueError(f"point ({x}, {y}) lies outside the window")
    return min(x - window.xmin, window.xmax - x, y - window.ymin, window.ymax - y)


def boundary_distances(coords: np.ndarray, window: Window) -> np.ndarray:
    """Vectorized :func:`boundary_distance` for an (n, 2) coordinate array."""
    x = coords[:, 0]
    y = coords[:, 1]
    if not np.all(window.contains(x, y)):
        raise ValueError("some points lie outside the window")
    return np.minimum.reduce(
        [x - window.xmin, window.xmax - x, y - window.ymin, window.ymax - y]
    )


class MarkedPattern:
    """A marked planar point pattern inside a rectangular window.

    Parameters
    ----------
    coords : (n, 2) array
        Point locations. Duplicate coordinates are rejected (the pattern
        is assumed simple).
    marks : (n,) array
        Real-valued marks, one per point. Must be finite.
    window : Window
        Observation window; every point must lie inside or on its boundary.
    """

    def __init__(self, coords, marks, window: Window):
        coords = np.ascontiguousarray(coords, dtype=float).reshape(-1, 2)
        marks = np.ascontiguousarray(marks, dtype=float).reshape(-1)
        if coords.shape[0] != marks.shape[0]:
            raise ValueError("coords and marks must have the same length")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        if not np.all(np.isfinite(marks)):
            raise ValueError("marks must be finite")
        if coords.shape[0] and not np.all(window.contains(coords[:, 0], coords[:, 1])):
            raise ValueError("all points must lie inside the window")
        if coords.shape[0] > 1:
            uniq = np.unique(coords, axis=0)
            if uniq.shape[0] != coords.shape[0]:
                raise ValueError("duplicate coordinates are not allowed")
        coords.setflags(write=False)
        marks.setflags(write=False)
        self.coords = coords
        self.marks = marks
        self.window = window

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def with_marks(self, marks) -> "MarkedPattern":
        return MarkedPattern(self.coords.copy(), marks, self.window)

    def __repr__(self):
        return f"MarkedPattern(n={self.n}, window={self.window})"


@dataclass(frozen=True)
class RGrid:
    """Uniform grid of strictly positive distances at which curves are tabulated."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("grid needs at least two distance values")
        if values[0] <= 0:
            raise ValueError("grid distances must be strictly positive")
        steps = np.diff(values)
        if np.any(steps <= 0):
            raise ValueError("grid distances must be strictly increasing")
        if np.any(np.abs(steps - steps[0]) > 1e-12 * steps[0]):
            raise ValueError("grid spacing must be uniform")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def rmax(self) -> float:
        return float(self.values[-1])

    @property
    def dr(self) -> float:
        return float(self.values[1] - self.values[0])

    def __len__(self):
        return self.values.size

    def to_dict(self) -> dict:
        return {"rmax": self.rmax, "k": len(self)}


def default_rgrid(window: Window, k: int = 128) -> RGrid:
    """Default distance grid: k equal steps up to a quarter of the shorter side."""
    if k < 2:
        raise ValueError("k must be at least 2")
    rmax = 0.25 * window.min_side
    return RGrid(rmax * np.arange(1, k + 1) / k)


class NeighborIndex:
    """Fixed-radius neighbour index over a pattern, bucketed on a square grid.

    Cells have side >= rmax, so every pair at distance <= r (r <= rmax) falls
    within adjacent cells.
    """

    def __init__(self, pattern: MarkedPattern, rmax: float):
        if rmax <= 0:
            raise ValueError("rmax must be positive")
        self.pattern = pattern
        self.rmax = float(rmax)
        coords = pattern.coords
        w = pattern.window
        self._cell = max(self.rmax, 1e-300)
        nx = max(1, int(math.ceil(w.width / self._cell)))
        ny = max(1, int(math.ceil(w.height / self._cell)))
        self._nx, self._ny = nx, ny
        if pattern.n:
            cx = np.minimum(((coords[:, 0] - w.xmin) / self._cell).astype(np.intp), nx - 1)
            cy = np.minimum(((coords[:, 1] - w.ymin) / self._cell).astype(np.intp), ny - 1)
            cell_id = cx * ny + cy
            order = np.argsort(cell_id, kind="stable")
            self._order = order
            self._cell_ids, starts = np.unique(cell_id[order], return_index=True)
            self._starts = np.append(starts, pattern.n)
        else:
            self._order = np.empty(0, dtype=np.intp)
            self._cell_ids = np.empty(0, dtype=np.intp)
            self._starts = np.zeros(1, dtype=np.intp)
        self._pair_cache = None

    def _members(self, cell_pos: int) -> np.ndarray:
        return self._order[self._starts[cell_pos] : self._starts[cell_pos + 1]]

    def _all_pairs(self):
        """All unordered pairs (i < j) with distance <= rmax, plus distances."""
        if self._pair_cache is not None:
            return self._pair_cache
        coords = self.pattern.coords
        ny = self._ny
        lookup = {int(c): k for k, c in enumerate(self._cell_ids)}
        ii, jj, dd = [], [], []
        # forward half-neighbourhood avoids counting a cell pair twice
        offsets = ((1, 0), (1, 1), (0, 1), (-1, 1))
        for pos, cid in enumerate(self._cell_ids):
            a = self._members(pos)
            # within-cell pairs
            if a.size > 1:
                pi, pj = np.triu_indices(a.size, k=1)
                d = np.hypot(
                    coords[a[pi], 0] - coords[a[pj], 0],
                    coords[a[pi], 1] - coords[a[pj], 1],
                )
                keep = d <= self.rmax
                ii.append(np.minimum(a[pi], a[pj])[keep])
                jj.append(np.maximum(a[pi], a[pj])[keep])
                dd.append(d[keep])
            cx, cy = divmod(int(cid), ny)
            for ox, oy in offsets:
                qx, qy = cx + ox, cy + oy
                if not (0 <= qx < self._nx and 0 <= qy < ny):
                    continue
                k = lookup.get(qx * ny + qy)
                if k is None:
                    continue
                b = self._members(k)
                d = np.hypot(
                    coords[a, 0][:, None] - coords[b, 0][None, :],
                    coords[a, 1][:, None] - coords[b, 1][None, :],
                )
                keep = d <= self.rmax
                if np.any(keep):
                    ai, bi = np.nonzero(keep)
                    ia, jb = a[ai], b[bi]
                    ii.append(np.minimum(ia, jb))
                    jj.append(np.maximum(ia, jb))
                    dd.append(d[ai, bi])
        if ii:
            i = np.concatenate(ii)
            j = np.concatenate(jj)
            d = np.concatenate(dd)
        else:
            i = np.empty(0, dtype=np.intp)
            j = np.empty(0, dtype=np.intp)
            d = np.empty(0, dtype=float)
        # canonical order so downstream reductions are reproducible
        key = np.lexsort((j, i))
        self._pair_cache = (i[key], j[key], d[key])
        return self._pair_cache

    def unordered_pairs(self, r: float):
        """Unordered pairs (i < j) with distance <= r, for any r <= rmax."""
        if r > self.rmax * (1 + 1e-12):
            raise ValueError("r exceeds the index radius")
        i, j, d = self._all_pairs()
        keep = d <= r
        return i[keep], j[keep], d[keep]

    def pairs_within(self, r: float):
        """Ordered pairs {(i, j): i != j, d(x_i, x_j) <= r} as two index arrays."""
        i, j, _ = self.unordered_pairs(r)
        return np.concatenate([i, j]), np.concatenate([j, i])


def build_index(pattern: MarkedPattern, rmax: float) -> NeighborIndex:
    """Build a fixed-radius neighbour index for ``pattern``."""
    return NeighborIndex(pattern, rmax)

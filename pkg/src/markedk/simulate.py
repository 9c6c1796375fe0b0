"""Seeded generators for point patterns and mark schemes.

Every generator is a pure function of its parameters and a seed, so
replicates can be produced independently of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pattern import MarkedPattern, Window, boundary_distances

__all__ = [
    "HomPoisson",
    "InhomPoissonLinear",
    "ThomasSuperposition",
    "BinomialFixedN",
    "BoundaryPower",
    "IidUniform01",
    "LocalGaussianCenters",
    "ClusterGaussianMarks",
    "IidEmpirical",
    "ScenarioSpec",
    "LabeledPattern",
    "substream",
    "gen_hom_poisson",
    "gen_binomial",
    "gen_inhom_poisson_linear",
    "gen_thomas_superposition",
    "assign_marks_boundary",
    "assign_marks_local_centers",
    "assign_marks_iid",
    "permute_marks",
    "generate",
]


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator derived from a base seed and integer keys."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))


@dataclass(frozen=True)
class LabeledPattern:
    """A pattern plus per-point ground-truth flags (planted structure)."""

    pattern: MarkedPattern
    truth: np.ndarray

    def __post_init__(self):
        truth = np.ascontiguousarray(self.truth, dtype=bool)
        if truth.shape[0] != self.pattern.n:
            raise ValueError("truth flags must match the number of points")
        truth.setflags(write=False)
        object.__setattr__(self, "truth", truth)


# ---------------------------------------------------------------------------
# point generators
# ---------------------------------------------------------------------------


def _uniform_points(n: int, window: Window, rng: np.random.Generator) -> np.ndarray:
    pts = rng.random((n, 2))
    pts[:, 0] = window.xmin + pts[:, 0] * window.width
    pts[:, 1] = window.ymin + pts[:, 1] * window.height
    return pts


def gen_hom_poisson(rate: float, window: Window, seed) -> MarkedPattern:
    """Homogeneous Poisson pattern with intensity ``rate``; unit marks."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    rng = _as_rng(seed)
    n = rng.poisson(rate * window.area())
    coords = _uniform_points(n, window, rng)
    return MarkedPattern(coords, np.ones(n), window)


def gen_binomial(n: int, window: Window, seed) -> MarkedPattern:
    """Fixed-n binomial process: n i.i.d. uniform points; unit marks."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = _as_rng(seed)
    coords = _uniform_points(int(n), window, rng)
    return MarkedPattern(coords, np.ones(int(n)), window)


def gen_inhom_poisson_linear(slope: float, window: Window, seed) -> MarkedPattern:
    """Inhomogeneous Poisson pattern on the unit square with intensity 10 + slope*x.

    Simulated by thinning a dominating homogeneous process.
    """
    if (window.xmin, window.xmax, window.ymin, window.ymax) != (0.0, 1.0, 0.0, 1.0):
        raise ValueError("the linear intensity 10 + slope*x is defined on the unit square")
    if slope <= -10:
        raise ValueError("slope must exceed -10 so the intensity stays positive")
    rng = _as_rng(seed)
    lam_max = 10.0 + max(slope, 0.0)
    n = rng.poisson(lam_max)
    coords = _uniform_points(n, window, rng)
    accept = rng.random(n) * lam_max <= 10.0 + slope * coords[:, 0]
    coords = coords[accept]
    return MarkedPattern(coords, np.ones(coords.shape[0]), window)


def gen_thomas_superposition(
    background_rate: float,
    parent_rate: float,
    offspring_mean: float,
    sigma: float,
    window: Window,
    seed,
) -> LabeledPattern:
    """Homogeneous background superposed with a Thomas cluster component.

    Offspring are displaced from uniform parents by an isotropic Gaussian and
    discarded if they fall outside the window; parents are not retained.
    Offspring are flagged True in the truth vector.
    """
    if min(background_rate, parent_rate, offspring_mean, sigma) <= 0:
        raise ValueError("all Thomas parameters must be positive")
    rng = _as_rng(seed)
    area = window.area()
    n_bg = rng.poisson(background_rate * area)
    bg = _uniform_points(n_bg, window, rng)
    n_par = rng.poisson(parent_rate * area)
    parents = _uniform_points(n_par, window, rng)
    counts = rng.poisson(offspring_mean, size=n_par)
    centers = np.repeat(parents, counts, axis=0)
    off = centers + rng.normal(scale=sigma, size=centers.shape)
    inside = window.contains(off[:, 0], off[:, 1])
    off = off[inside]
    coords = np.vstack([bg, off])
    truth = np.concatenate([np.zeros(len(bg), bool), np.ones(len(off), bool)])
    pattern = MarkedPattern(coords, np.ones(len(coords)), window)
    return LabeledPattern(pattern, truth)


# ---------------------------------------------------------------------------
# mark schemes
# ---------------------------------------------------------------------------


def assign_marks_boundary(pattern: MarkedPattern, h: float) -> MarkedPattern:
    """Marks equal to the distance to the window boundary raised to power h."""
    if h <= 0:
        raise ValueError("h must be positive")
    marks = boundary_distances(pattern.coords, pattern.window) ** h
    return pattern.with_marks(marks)


def assign_marks_local_centers(
    pattern: MarkedPattern,
    k: int,
    radius: float,
    mark_mean: float,
    mark_sd: float,
    seed,
) -> LabeledPattern:
    """Gaussian marks inside k random center neighbourhoods, uniform elsewhere.

    Points within ``radius`` of any of k randomly chosen data points (centers
    included) form the planted set and receive N(mark_mean, mark_sd^2) marks;
    all remaining points receive Unif(0, 1) marks.
    """
    n = pattern.n
    if k > n:
        raise ValueError("cannot select more centers than points")
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = _as_rng(seed)
    truth = np.zeros(n, bool)
    if k > 0:
        centers = pattern.coords[rng.choice(n, size=k, replace=False)]
        d2 = np.min(
            (pattern.coords[:, 0][:, None] - centers[:, 0][None, :]) ** 2
            + (pattern.coords[:, 1][:, None] - centers[:, 1][None, :]) ** 2,
            axis=1,
        )
        truth = d2 <= radius * radius
    marks = rng.random(n)
    marks[truth] = rng.normal(mark_mean, mark_sd, size=int(truth.sum()))
    return LabeledPattern(pattern.with_marks(marks), truth)


def assign_marks_iid(pattern: MarkedPattern, seed, pool=None) -> MarkedPattern:
    """I.i.d. marks: Unif(0, 1) by default, or resampled from ``pool``."""
    rng = _as_rng(seed)
    if pool is None:
        marks = rng.random(pattern.n)
    else:
        pool = np.asarray(pool, dtype=float)
        if pool.size == 0:
            raise ValueError("empirical mark pool must be nonempty")
        marks = rng.choice(pool, size=pattern.n, replace=True)
    return pattern.with_marks(marks)


def permute_marks(pattern: MarkedPattern, seed) -> MarkedPattern:
    """Same locations, marks shuffled by a uniform random permutation."""
    if pattern.n < 2:
        raise ValueError("need at least two points to permute marks")
    rng = _as_rng(seed)
    return pattern.with_marks(pattern.marks[rng.permutation(pattern.n)])


# ---------------------------------------------------------------------------
# declarative scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomPoisson:
    rate: float


@dataclass(frozen=True)
class InhomPoissonLinear:
    slope: float


@dataclass(frozen=True)
class ThomasSuperposition:
    background_rate: float
    parent_rate: float
    offspring_mean: float
    sigma: float = 0.03


@dataclass(frozen=True)
class BinomialFixedN:
    n: int


@dataclass(frozen=True)
class BoundaryPower:
    h: float


@dataclass(frozen=True)
class IidUniform01:
    pass


@dataclass(frozen=True)
class LocalGaussianCenters:
    k: int = 3
    radius: float = 0.05
    mark_mean: float = 5.0
    mark_sd: float = 1.0


@dataclass(frozen=True)
class ClusterGaussianMarks:
    """Gaussian marks on the planted (clustered) points, uniform background."""

    mark_mean: float = 5.0
    mark_sd: float = 1.0


@dataclass(frozen=True)
class IidEmpirical:
    pool: tuple


_GENERATORS = {
    "hom_poisson": HomPoisson,
    "inhom_poisson_linear": InhomPoissonLinear,
    "thomas_superposition": ThomasSuperposition,
    "binomial": BinomialFixedN,
}
_MARK_SCHEMES = {
    "boundary_power": BoundaryPower,
    "iid_uniform": IidUniform01,
    "local_gaussian_centers": LocalGaussianCenters,
    "cluster_gaussian": ClusterGaussianMarks,
    "iid_empirical": IidEmpirical,
}


@dataclass(frozen=True)
class ScenarioSpec:
    """Declarative simulation scenario: a point generator plus a mark scheme."""

    generator: object
    mark_scheme: object
    window: Window = Window(0.0, 1.0, 0.0, 1.0)

    def to_dict(self) -> dict:
        def enc(obj, table):
            for name, cls in table.items():
                if isinstance(obj, cls):
                    return {"kind": name, **{k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(obj).items()}}
            raise ValueError(f"unknown scenario component: {obj!r}")

        return {
            "generator": enc(self.generator, _GENERATORS),
            "mark_scheme": enc(self.mark_scheme, _MARK_SCHEMES),
            "window": self.window.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        def dec(spec, table):
            spec = dict(spec)
            kind = spec.pop("kind")
            if kind not in table:
                raise ValueError(f"unknown scenario component kind: {kind}")
            if kind == "iid_empirical":
                spec["pool"] = tuple(spec["pool"])
            return table[kind](**spec)

        return cls(
            generator=dec(d["generator"], _GENERATORS),
            mark_scheme=dec(d["mark_scheme"], _MARK_SCHEMES),
            window=Window.from_dict(d["window"]),
        )


def generate(spec: ScenarioSpec, seed) -> LabeledPattern:
    """Realize a scenario. Truth flags are all False for unlabelled scenarios."""
    rng = _as_rng(seed)
    gen = spec.generator
    if isinstance(gen, HomPoisson):
        pat = gen_hom_poisson(gen.rate, spec.window, rng)
        base = LabeledPattern(pat, np.zeros(pat.n, bool))
    elif isinstance(gen, InhomPoissonLinear):
        pat = gen_inhom_poisson_linear(gen.slope, spec.window, rng)
        base = LabeledPattern(pat, np.zeros(pat.n, bool))
    elif isinstance(gen, ThomasSuperposition):
        base = gen_thomas_superposition(
            gen.background_rate, gen.parent_rate, gen.offspring_mean, gen.sigma, spec.window, rng
        )
    elif isinstance(gen, BinomialFixedN):
        pat = gen_binomial(gen.n, spec.window, rng)
        base = LabeledPattern(pat, np.zeros(pat.n, bool))
    else:
        raise ValueError(f"unknown generator: {gen!r}")

    scheme = spec.mark_scheme
    if isinstance(scheme, BoundaryPower):
        return LabeledPattern(assign_marks_boundary(base.pattern, scheme.h), base.truth)
    if isinstance(scheme, IidUniform01):
        return LabeledPattern(assign_marks_iid(base.pattern, rng), base.truth)
    if isinstance(scheme, IidEmpirical):
        return LabeledPattern(assign_marks_iid(base.pattern, rng, pool=scheme.pool), base.truth)
    if isinstance(scheme, LocalGaussianCenters):
        return assign_marks_local_centers(
            base.pattern, scheme.k, scheme.radius, scheme.mark_mean, scheme.mark_sd, rng
        )
    if isinstance(scheme, ClusterGaussianMarks):
        marks = rng.random(base.pattern.n)
        marks[base.truth] = rng.normal(scheme.mark_mean, scheme.mark_sd, size=int(base.truth.sum()))
        return LabeledPattern(base.pattern.with_marks(marks), base.truth)
    raise ValueError(f"unknown mark scheme: {scheme!r}")

"""Replication harness: power of the global tests, classification rates of
the local tests, and the two-sample Kolmogorov-Smirnov comparison."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kolmogorov

from .pattern import Window
from .simulate import (
    BoundaryPower,
    ClusterGaussianMarks,
    HomPoisson,
    IidUniform01,
    InhomPoissonLinear,
    LocalGaussianCenters,
    ScenarioSpec,
    ThomasSuperposition,
    generate,
    substream,
)
from .testing import _map_replicates, global_test, local_test

__all__ = [
    "PowerReport",
    "ClassificationReport",
    "KsResult",
    "power_scenario",
    "local_scenario",
    "run_power",
    "run_classification",
    "ks_two_sample",
]

UNIT_SQUARE = Window(0.0, 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class PowerReport:
    scenario: dict
    hypothesis: str
    replicates: int
    rejections: int
    power: float
    wall_time: float

    def to_dict(self) -> dict:
        # wall_time is deliberately left out: serialized reports must be
        # reproducible byte-for-byte from the same config and seed
        return {
            "scenario": self.scenario,
            "hypothesis": self.hypothesis,
            "replicates": self.replicates,
            "rejections": self.rejections,
            "power": self.power,
        }


@dataclass(frozen=True)
class ClassificationReport:
    """Pooled TP/FP/TN/FN counts across replicates plus the derived rates.

    ``mean_rates`` additionally reports per-replicate averages (replicates
    with undefined TPR excluded from that average).
    """

    counts: dict
    tpr: float
    fpr: float
    acc: float
    replicates: int
    mean_rates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "counts": self.counts,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "acc": self.acc,
            "replicates": self.replicates,
            "mean_rates": self.mean_rates,
        }


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n1: int
    n2: int

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n1": self.n1,
            "n2": self.n2,
        }


def power_scenario(hypothesis: str, expected_n: float, h: float) -> ScenarioSpec:
    """Alternative-hypothesis scenario behind one cell of the power table.

    H1 and H3 cells use homogeneous Poisson locations with boundary-distance
    marks (power h); H2 cells use the linear-intensity inhomogeneous Poisson
    process with matching expected count and the same marks.
    """
    hyp = hypothesis.upper().rstrip("L")
    marks = BoundaryPower(h)
    if hyp in ("H1", "H3"):
        return ScenarioSpec(HomPoisson(expected_n), marks, UNIT_SQUARE)
    if hyp == "H2":
        return ScenarioSpec(InhomPoissonLinear(2.0 * (expected_n - 10.0)), marks, UNIT_SQUARE)
    raise ValueError(f"unknown hypothesis {hypothesis!r}")


def thomas_params(expected_n: float, clustered_fraction: float = 0.3, parent_rate: float = 5.0):
    """Thomas superposition parameters hitting a target clustered share."""
    background = (1.0 - clustered_fraction) * expected_n
    offspring = clustered_fraction * expected_n / parent_rate
    return background, parent_rate, offspring


def local_scenario(kind: str, expected_n: float, k_centers: int = 3) -> ScenarioSpec:
    """Planted local structure scenarios: 'point', 'mark', or 'point_mark'."""
    if kind == "point":
        bg, par, off = thomas_params(expected_n)
        return ScenarioSpec(ThomasSuperposition(bg, par, off), IidUniform01(), UNIT_SQUARE)
    if kind == "mark":
        return ScenarioSpec(HomPoisson(expected_n), LocalGaussianCenters(k=k_centers), UNIT_SQUARE)
    if kind == "point_mark":
        bg, par, off = thomas_params(expected_n)
        return ScenarioSpec(ThomasSuperposition(bg, par, off), ClusterGaussianMarks(), UNIT_SQUARE)
    raise ValueError(f"unknown local scenario kind {kind!r}; expected point, mark or point_mark")


def run_power(
    scenario: ScenarioSpec,
    hypothesis: str,
    n_rep: int = 100,
    n_sim: int = 99,
    alpha: float = 0.05,
    seed: int = 0,
    grid=None,
    threads: int = 1,
) -> PowerReport:
    """Empirical rejection rate of a global test over scenario replicates."""
    if n_rep < 1:
        raise ValueError("need at least one replicate")
    start = time.perf_counter()

    def one(r):
        pattern = generate(scenario, substream(seed, 0, r)).pattern
        result = global_test(
            pattern, hypothesis, n_sim=n_sim, alpha=alpha, seed=_rep_seed(seed, r), grid=grid
        )
        return bool(result.reject)

    flags = _map_replicates(one, n_rep, threads)
    rejections = int(sum(flags))
    return PowerReport(
        scenario=scenario.to_dict(),
        hypothesis=hypothesis.upper(),
        replicates=n_rep,
        rejections=rejections,
        power=rejections / n_rep,
        wall_time=time.perf_counter() - start,
    )


def _rep_seed(seed: int, r: int) -> int:
    # distinct deterministic seed per replicate for the inner Monte Carlo
    return (int(seed) * 1_000_003 + r * 7919 + 1) % (2**63)


def run_classification(
    scenario: ScenarioSpec,
    hypothesis: str = "H1L",
    n_rep: int = 100,
    n_sim: int = 99,
    alpha: float = 0.05,
    seed: int = 0,
    grid=None,
    threads: int = 1,
) -> ClassificationReport:
    """Classification rates of a local test against planted ground truth.

    Counts are pooled across replicates before the rates are computed; the
    per-replicate averages are reported alongside.
    """
    if n_rep < 1:
        raise ValueError("need at least one replicate")

    def one(r):
        lab = generate(scenario, substream(seed, 0, r))
        result = local_test(
            lab.pattern, hypothesis, n_sim=n_sim, alpha=alpha, seed=_rep_seed(seed, r), grid=grid
        )
        flag = result.reject
        truth = lab.truth
        tp = int(np.sum(flag & truth))
        fp = int(np.sum(flag & ~truth))
        fn = int(np.sum(~flag & truth))
        tn = int(np.sum(~flag & ~truth))
        return tp, fp, fn, tn

    rows = np.array(_map_replicates(one, n_rep, threads), dtype=float)
    tp, fp, fn, tn = rows.sum(axis=0)
    n_total = tp + fp + fn + tn
    tpr = tp / (tp + fn) if tp + fn > 0 else float("nan")
    fpr = fp / (fp + tn) if fp + tn > 0 else float("nan")
    acc = (tp + tn) / n_total if n_total > 0 else float("nan")

    with np.errstate(invalid="ignore", divide="ignore"):
        r_tpr = rows[:, 0] / (rows[:, 0] + rows[:, 2])
        r_fpr = rows[:, 1] / (rows[:, 1] + rows[:, 3])
        r_acc = (rows[:, 0] + rows[:, 3]) / rows.sum(axis=1)
    mean_rates = {
        "tpr": float(np.nanmean(r_tpr)) if np.any(np.isfinite(r_tpr)) else float("nan"),
        "fpr": float(np.nanmean(r_fpr)) if np.any(np.isfinite(r_fpr)) else float("nan"),
        "acc": float(np.nanmean(r_acc)) if np.any(np.isfinite(r_acc)) else float("nan"),
    }
    return ClassificationReport(
        counts={"tp": int(tp), "fp": int(fp), "fn": int(fn), "tn": int(tn)},
        tpr=float(tpr),
        fpr=float(fpr),
        acc=float(acc),
        replicates=n_rep,
        mean_rates=mean_rates,
    )


def ks_two_sample(a, b) -> KsResult:
    """Two-sided two-sample Kolmogorov-Smirnov test.

    The statistic is the exact supremum ECDF distance; the p-value uses the
    asymptotic Kolmogorov distribution at effective size sqrt(n1 n2 / (n1+n2)).
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n1, n2 = a.size, b.size
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf1 = np.searchsorted(a, grid, side="right") / n1
    cdf2 = np.searchsorted(b, grid, side="right") / n2
    d = float(np.max(np.abs(cdf1 - cdf2)))
    en = np.sqrt(n1 * n2 / (n1 + n2))
    p = float(min(1.0, max(kolmogorov(d * en), np.finfo(float).tiny)))
    return KsResult(statistic=d, p_value=p, n1=n1, n2=n2)

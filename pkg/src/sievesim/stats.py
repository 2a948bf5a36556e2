"""Distance and accumulation utilities for the Monte Carlo checks.

Thresholds throughout the package are stated directly as distances
(KS, total variation); there is deliberately no p-value machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "McEstimate",
    "Accumulator",
    "mc_accumulate",
    "ks_two_sample",
    "ks_one_sample",
    "tv_distance",
    "ecdf",
    "chi_square",
]


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    count: int


class Accumulator:
    """Single-pass mean/variance (Welford) with an associative merge.

    Merging partial accumulators reproduces sequential accumulation to
    floating precision, which is what makes replicate-parallel runs
    independent of the parallelism degree.
    """

    __slots__ = ("count", "mean", "_m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def add(self, values) -> "Accumulator":
        for x in np.atleast_1d(np.asarray(values, dtype=float)):
            self.count += 1
            delta = x - self.mean
            self.mean += delta / self.count
            self._m2 += delta * (x - self.mean)
        return self

    def merge(self, other: "Accumulator") -> "Accumulator":
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self._m2 = other.count, other.mean, other._m2
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / n
        self._m2 += other._m2 + delta * delta * self.count * other.count / n
        self.count = n
        return self

    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        return self._m2 / (self.count - 1)

    def estimate(self) -> McEstimate:
        if self.count == 0:
            raise ValueError("empty accumulator")
        se = np.sqrt(self.variance() / self.count) if self.count >= 2 else 0.0
        return McEstimate(mean=self.mean, stderr=float(se), count=self.count)


def mc_accumulate(values) -> McEstimate:
    """Mean with standard error from a stream of reals."""
    values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if values.size == 0:
        raise ValueError("mc_accumulate needs at least one value")
    n = values.size
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(n)) if n >= 2 else 0.0
    return McEstimate(mean=mean, stderr=se, count=int(n))


def ks_two_sample(xs, ys) -> float:
    """Exact sup-distance between the two empirical CDFs."""
    xs = np.sort(np.asarray(xs, dtype=float))
    ys = np.sort(np.asarray(ys, dtype=float))
    if xs.size == 0 or ys.size == 0:
        raise ValueError("ks_two_sample requires nonempty samples")
    grid = np.concatenate([xs, ys])
    cdf_x = np.searchsorted(xs, grid, side="right") / xs.size
    cdf_y = np.searchsorted(ys, grid, side="right") / ys.size
    return float(np.max(np.abs(cdf_x - cdf_y)))


def ks_one_sample(xs, cdf) -> float:
    """Sup-distance between the empirical CDF of ``xs`` and a given CDF."""
    xs = np.sort(np.asarray(xs, dtype=float))
    if xs.size == 0:
        raise ValueError("ks_one_sample requires a nonempty sample")
    n = xs.size
    f = np.asarray(cdf(xs), dtype=float)
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))


def _masses_and_deficit(p):
    if hasattr(p, "masses"):
        return np.asarray(p.masses, dtype=float), float(getattr(p, "tail_deficit", 0.0))
    return np.asarray(p, dtype=float), 0.0


def tv_distance(p, q) -> float:
    """Total variation between finite pmfs, charging mismatched tail deficits.

    Accepts plain arrays or Pmf-like objects carrying ``masses`` and
    ``tail_deficit``; shorter supports are zero-padded.
    """
    pm, pd = _masses_and_deficit(p)
    qm, qd = _masses_and_deficit(q)
    width = max(pm.size, qm.size)
    pm = np.pad(pm, (0, width - pm.size))
    qm = np.pad(qm, (0, width - qm.size))
    return float(0.5 * np.abs(pm - qm).sum() + 0.5 * abs(pd - qd))


class Ecdf:
    """Right-continuous empirical CDF."""

    def __init__(self, xs):
        xs = np.asarray(xs, dtype=float)
        if xs.size == 0:
            raise ValueError("ecdf requires a nonempty sample")
        self.points = np.sort(xs)

    def __call__(self, x):
        return np.searchsorted(self.points, x, side="right") / self.points.size


def ecdf(xs) -> Ecdf:
    return Ecdf(xs)


def chi_square(observed, expected):
    """Pearson statistic with its degrees of freedom (#cells - 1)."""
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if observed.size == 0 or observed.shape != expected.shape:
        raise ValueError("observed/expected must be nonempty and aligned")
    if np.any(expected <= 0):
        raise ValueError("expected counts must be positive")
    stat = float(((observed - expected) ** 2 / expected).sum())
    return stat, observed.size - 1

"""Scale-invariant two-sample KS distance between daily infection series."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DimensionError

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class CumulativeDistribution:
    values: np.ndarray
    degenerate: bool = False

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class KsOutcome:
    statistic: float
    critical: float

    @property
    def label(self) -> str:
        return label(self.statistic, self.critical)


def to_cdf(series) -> CumulativeDistribution:
    """Cumulative sum scaled so the last day is 1.

    An all-zero series has no distribution; it comes back as zeros with
    ``degenerate=True``.
    """
    s = np.asarray(series, dtype=float)
    if s.ndim != 1 or len(s) < 1:
        raise ValueError("series must be a non-empty 1-D sequence")
    c = np.cumsum(s)
    total = c[-1]
    if total <= 0:
        return CumulativeDistribution(np.zeros_like(c), degenerate=True)
    return CumulativeDistribution(c / total)


def ks_statistic(actual: CumulativeDistribution, simulated: CumulativeDistribution) -> float:
    if len(actual) != len(simulated):
        raise DimensionError(f"series lengths differ: {len(actual)} vs {len(simulated)}")
    if actual.degenerate or simulated.degenerate:
        return 0.0 if actual.degenerate and simulated.degenerate else 1.0
    return float(np.max(np.abs(actual.values - simulated.values)))


def c_alpha(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(-math.log(alpha) * 0.5)


def critical_value(alpha: float, population: int) -> float:
    """Rejection threshold ``c(alpha) * sqrt(2N / N**2)`` with N the population size."""
    if population < 1:
        raise ValueError("population must be >= 1")
    return c_alpha(alpha) * math.sqrt(2.0 * population / population**2)


def label(statistic: float, critical: float) -> str:
    # rejection needs a strict exceedance, so a tie is still "similar"
    return POSITIVE if statistic <= critical else NEGATIVE


def compare(actual: CumulativeDistribution, series, alpha: float, population: int) -> KsOutcome:
    return KsOutcome(ks_statistic(actual, to_cdf(series)), critical_value(alpha, population))

"""Shared descriptive statistics used across reporting modules.

Conventions, fixed once here so every module agrees:
  - median: middle element for odd n, mean of the two middle elements for
    even n (equivalent to ``quantile(xs, 0.5)``).
  - quantile: linear interpolation between order statistics; the quantile
    ``q`` sits at fractional index ``q * (n - 1)`` of the sorted data.
  - IQR outlier rule: values outside [Q1 - k*IQR, Q3 + k*IQR] with k=1.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def mean(xs) -> float:
    xs = list(xs)
    if not xs:
        raise ValueError("mean of empty sequence")
    return math.fsum(xs) / len(xs)


def quantile(xs, q: float) -> float:
    """Linear-interpolation quantile of an unsorted sequence."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level must be in [0, 1], got {q}")
    s = sorted(xs)
    if not s:
        raise ValueError("quantile of empty sequence")
    if len(s) == 1:
        return float(s[0])
    pos = q * (len(s) - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return float(s[lo])
    frac = pos - lo
    return float(s[lo]) * (1.0 - frac) + float(s[hi]) * frac


def median(xs) -> float:
    return quantile(xs, 0.5)


def iqr_bounds(xs, k: float = 1.5) -> tuple[float, float]:
    """(lower, upper) fences of the k*IQR outlier rule."""
    q1 = quantile(xs, 0.25)
    q3 = quantile(xs, 0.75)
    spread = q3 - q1
    return q1 - k * spread, q3 + k * spread


def split_iqr_outliers(xs, k: float = 1.5) -> tuple[list, list]:
    """Partition xs into (kept, excluded) under the k*IQR rule.

    Order of the input is preserved in both partitions.
    """
    xs = list(xs)
    if len(xs) < 2:
        return xs, []
    lo, hi = iqr_bounds(xs, k)
    kept = [x for x in xs if lo <= x <= hi]
    excluded = [x for x in xs if not lo <= x <= hi]
    return kept, excluded


@dataclass(frozen=True)
class Descriptive:
    """min/max/mean/median summary plus total, mirroring the report tables."""

    n: int
    total: float
    min: float
    max: float
    mean: float
    median: float

    @classmethod
    def of(cls, xs) -> "Descriptive":
        xs = list(xs)
        if not xs:
            raise ValueError("descriptive stats of empty sequence")
        return cls(
            n=len(xs),
            total=math.fsum(xs),
            min=float(min(xs)),
            max=float(max(xs)),
            mean=mean(xs),
            median=median(xs),
        )

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "total": self.total,
            "min": self.min,
            "max": self.max,
            "mean": self.mean,
            "median": self.median,
        }


def empirical_cdf(xs) -> list[tuple[float, float]]:
    """Sorted (value, fraction of sample <= value) pairs over unique values."""
    xs = sorted(xs)
    if not xs:
        raise ValueError("CDF of empty sequence")
    n = len(xs)
    out: list[tuple[float, float]] = []
    for i, v in enumerate(xs):
        if i + 1 < n and xs[i + 1] == v:
            continue  # keep only the last occurrence of each value
        out.append((float(v), (i + 1) / n))
    return out

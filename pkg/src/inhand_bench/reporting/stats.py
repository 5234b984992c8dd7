"""Box-plot statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptySample

QUANTILE_METHOD = "linear"
WHISKER_REACH = 1.5


def quantile(sorted_values, p: float) -> float:
    """Linear interpolation between order statistics (``h = (n - 1) p``)."""
    return float(np.quantile(np.asarray(sorted_values, dtype=np.float64), p, method=QUANTILE_METHOD))


@dataclass(frozen=True)
class BoxStats:
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: list = field(default_factory=list)
    n: int = 0

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def as_dict(self) -> dict:
        return {
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outliers": list(self.outliers),
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, d) -> "BoxStats":
        return cls(
            median=float(d["median"]),
            q1=float(d["q1"]),
            q3=float(d["q3"]),
            whisker_low=float(d["whisker_low"]),
            whisker_high=float(d["whisker_high"]),
            outliers=[float(x) for x in d["outliers"]],
            n=int(d["n"]),
        )


def box_stats(samples) -> BoxStats:
    """Quartiles, whiskers and outliers of a sample.

    Whiskers end at the most extreme data points that still lie within
    1.5 IQR of the box; everything beyond is an outlier.
    """
    values = sorted(float(x) for x in samples)
    if not values:
        raise EmptySample("box statistics need at least one sample")
    if any(math.isnan(x) for x in values):
        raise EmptySample("sample contains NaN")
    q1 = quantile(values, 0.25)
    med = quantile(values, 0.5)
    q3 = quantile(values, 0.75)
    reach = WHISKER_REACH * (q3 - q1)
    lo_fence, hi_fence = q1 - reach, q3 + reach
    inliers = [x for x in values if lo_fence <= x <= hi_fence]
    outliers = [x for x in values if x < lo_fence or x > hi_fence]
    return BoxStats(
        median=med,
        q1=q1,
        q3=q3,
        whisker_low=inliers[0],
        whisker_high=inliers[-1],
        outliers=outliers,
        n=len(values),
    )

"""Monte Carlo estimates with their provenance, plus small regression helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import DomainError


@dataclass(frozen=True)
class McEstimate:
    """Sample mean of per-replica values with its standard error.

    ``stream_range`` is the half-open interval of stream ids that produced
    the replicas. ``upper_bound`` is set when the estimate is censored
    (no exceedances were observed).
    """

    value: float
    stderr: float
    replicas: int
    seed: int
    stream_range: tuple[int, int]
    censored: bool = False
    upper_bound: float | None = None

    @classmethod
    def from_samples(cls, samples, seed: int, stream_range: tuple[int, int]) -> "McEstimate":
        x = np.asarray(samples, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise DomainError("need a non-empty 1-d sample")
        sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        return cls(float(np.mean(x)), sd / np.sqrt(x.size), int(x.size), int(seed), tuple(stream_range))

    @classmethod
    def tail(
        cls, exceed, seed: int, stream_range: tuple[int, int], confidence: float = 0.95
    ) -> "McEstimate":
        """Probability estimate from 0/1 exceedance indicators.

        With no exceedance the estimate is censored at 0 and carries the
        exact one-sided upper bound ``1 - (1 - confidence)^(1/R)``.
        """
        e = np.asarray(exceed, dtype=float)
        est = cls.from_samples(e, seed, stream_range)
        if est.value == 0.0:
            ub = 1.0 - (1.0 - confidence) ** (1.0 / e.size)
            return cls(0.0, 0.0, est.replicas, est.seed, est.stream_range, True, ub)
        return est

    def within(self, target: float, n_se: float = 4.0, floor: float = 0.0) -> bool:
        return abs(self.value - target) <= max(n_se * self.stderr, floor)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float


def loglog_slope(x, y) -> SlopeFit:
    """Ordinary least squares slope of ``log y`` on ``log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise DomainError("need at least two points for a slope")
    res = sps.linregress(lx, ly)
    se = float(res.stderr) if lx.size > 2 else 0.0
    return SlopeFit(float(res.slope), se, float(res.intercept))


def normal_sf(x):
    return sps.norm.sf(x)


def bonferroni_z(level: float, m: int) -> float:
    """One-sided normal quantile giving joint confidence ``level`` over ``m`` tests."""
    return float(sps.norm.isf((1.0 - level) / max(m, 1)))

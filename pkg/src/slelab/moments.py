"""Monte Carlo moment estimators and log-log scaling fits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from slelab.driver import path_rng

__all__ = [
    "MonteCarloError",
    "MomentEstimate",
    "ScalingFit",
    "PLAIN",
    "MEDIAN_OF_MEANS",
    "moment_from_samples",
    "estimate_moment",
    "fit_scaling",
]

PLAIN = "plain-mean"
MEDIAN_OF_MEANS = "median-of-means"
MAX_NONFINITE = 0.01


class MonteCarloError(ArithmeticError):
    """Too many non-finite samples to trust an estimate."""


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    mean_estimate: float
    std_error: float
    n_samples: int
    estimator: str
    blocks: int = 1
    n_nonfinite: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _fmean(x: np.ndarray) -> float:
    return math.fsum(x.tolist()) / x.size


def moment_from_samples(
    samples, p: float, estimator: str = MEDIAN_OF_MEANS, *, max_nonfinite: float = MAX_NONFINITE
) -> MomentEstimate:
    """Estimate ``E|X|**p`` from draws of ``X``.

    Non-finite draws are dropped and counted; more than ``max_nonfinite`` of
    them raises :class:`MonteCarloError`.  Sums are compensated, so the
    result does not depend on how the samples were produced or chunked.
    """
    if p < 1:
        raise ValueError(f"moment order must be >= 1, got {p}")
    x = np.asarray(samples).ravel()
    if x.size < 2:
        raise ValueError("need at least two samples")
    finite = np.isfinite(x)
    bad = int(x.size - finite.sum())
    if bad > max_nonfinite * x.size:
        raise MonteCarloError(f"{bad} of {x.size} samples are non-finite")
    y = np.abs(x[finite]).astype(float) ** p
    n = y.size
    if estimator == PLAIN:
        mean = _fmean(y)
        se = float(np.std(y, ddof=1) / math.sqrt(n))
        return MomentEstimate(p, mean, se, n, PLAIN, 1, bad)
    if estimator == MEDIAN_OF_MEANS:
        k = math.ceil(math.sqrt(n))
        means = np.array([_fmean(b) for b in np.array_split(y, k)])
        # sampling sd of a median of k roughly normal means
        se = math.sqrt(math.pi / 2) * float(np.std(means, ddof=1)) / math.sqrt(k) if k > 1 else 0.0
        return MomentEstimate(p, float(np.median(means)), se, n, MEDIAN_OF_MEANS, k, bad)
    raise ValueError(f"unknown estimator {estimator!r}")


def estimate_moment(
    sampler: Callable[[np.random.Generator], float],
    p: float,
    n: int,
    seed: int,
    estimator: str = MEDIAN_OF_MEANS,
) -> MomentEstimate:
    """``E|X|**p`` where sample ``i`` is ``sampler(path_rng(seed, i))``."""
    if n < 2:
        raise ValueError("need n >= 2")
    x = np.array([sampler(path_rng(seed, i)) for i in range(n)], dtype=float)
    return moment_from_samples(x, p, estimator)


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    slope_ci_halfwidth: float
    xs: tuple[float, ...]
    estimates: tuple[float, ...]
    level: float = 0.99

    def contains(self, value: float) -> bool:
        return abs(value - self.slope) <= self.slope_ci_halfwidth

    def to_dict(self) -> dict:
        return asdict(self)


def fit_scaling(
    xs: Sequence[float], moments: Sequence[MomentEstimate | float], *, level: float = 0.99
) -> ScalingFit:
    """Least-squares slope of ``log m`` on ``log x``.

    The half-width uses the delta method, ``var(log m_i) = (se_i / m_i)**2``,
    propagated through the least-squares weights.
    """
    x = np.asarray(xs, dtype=float)
    if x.size < 3 or np.unique(x).size < 3:
        raise ValueError("need at least three distinct x values")
    if len(moments) != x.size:
        raise ValueError("one moment per x is required")
    if np.any(x <= 0):
        raise ValueError("x values must be positive")
    m = np.array([getattr(e, "mean_estimate", e) for e in moments], dtype=float)
    se = np.array([getattr(e, "std_error", 0.0) for e in moments], dtype=float)
    if np.any(~(m > 0)):
        raise ValueError("all moment estimates must be positive for a log-log fit")
    lx, ly = np.log(x), np.log(m)
    cx = lx - lx.mean()
    sxx = float(cx @ cx)
    slope = float(cx @ (ly - ly.mean()) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    var = float(np.sum((cx / sxx) ** 2 * (se / m) ** 2))
    z = float(stats.norm.ppf(0.5 + level / 2))
    return ScalingFit(slope, intercept, z * math.sqrt(var), tuple(x.tolist()), tuple(m.tolist()), level)

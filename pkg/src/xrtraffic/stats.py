"""Rate distributions, overflow percentiles and (rolling) autocorrelation."""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .errors import DegenerateSeriesError, InsufficientDataError, RangeError
from .trace import FrameTrace, windowed_mean

log = logging.getLogger(__name__)


def rate_series(trace: FrameTrace, T: int) -> np.ndarray:
    """Moving-average bit rate (bits/s) over ``T``-frame forward windows."""
    return windowed_mean(trace, T).values * trace.meta.frame_rate * 8.0


def nearest_rank(samples, p: float) -> float:
    """Nearest-rank percentile: the ``ceil(p*n)``-th smallest sample (1-based), ``0 < p <= 1``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise InsufficientDataError("percentile of an empty sample")
    if not 0 < p <= 1:
        raise RangeError(f"percentile level must be in (0, 1], got {p}")
    # guard against p*n landing a hair above an integer, e.g. 0.95*100
    k = math.ceil(round(p * x.size, 9))
    return float(x[max(k, 1) - 1])


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function: ``value(x) = probs[i]`` for ``support[i] <= x < support[i+1]``.

    Below ``support[0]`` the value is ``base``.
    """

    support: np.ndarray
    probs: np.ndarray
    base: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.support, x, side="right") - 1
        out = np.where(idx >= 0, self.probs[np.clip(idx, 0, None)], self.base)
        return out if out.ndim else float(out)


def empirical_cdf(samples) -> StepFunction:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("empirical CDF of an empty sample")
    support, counts = np.unique(x, return_counts=True)
    probs = np.cumsum(counts) / x.size
    probs[-1] = 1.0
    return StepFunction(support, probs, base=0.0)


def empirical_ccdf(samples) -> StepFunction:
    """``P(X > x)``, i.e. one minus :func:`empirical_cdf`."""
    cdf = empirical_cdf(samples)
    return StepFunction(cdf.support, 1.0 - cdf.probs, base=1.0)


@dataclass(frozen=True)
class OverflowReport:
    window: int
    std_dev: float
    p95: float
    p99: float
    mean: float = 0.0


def overflow_report(trace: FrameTrace, T: int) -> OverflowReport:
    """Spread of the moving-average rate above the nominal CBR rate R (all in bits/s)."""
    overflow = rate_series(trace, T) - trace.meta.target_rate
    return OverflowReport(
        window=T,
        std_dev=float(np.std(overflow)),
        p95=nearest_rank(overflow, 0.95),
        p99=nearest_rank(overflow, 0.99),
        mean=float(np.mean(overflow)),
    )


@dataclass(frozen=True)
class AcfResult:
    values: np.ndarray

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.values.size)

    @property
    def max_lag(self) -> int:
        return self.values.size - 1

    def __getitem__(self, k):
        return self.values[k]


def autocorr(series, max_lag: int) -> AcfResult:
    """Biased sample autocorrelation.

    ``acf[k] = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2``, the usual
    estimator that divides every lag by the same ``n``.
    """
    x = np.asarray(series, dtype=float).ravel()
    if max_lag < 0:
        raise RangeError(f"max_lag must be >= 0, got {max_lag}")
    if x.size <= max_lag:
        raise InsufficientDataError(f"series of length {x.size} is too short for max_lag={max_lag}")
    d = x - x.mean()
    denom = float(np.dot(d, d))
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    if denom <= (1e-12 * scale) ** 2 * x.size or denom == 0.0:
        raise DegenerateSeriesError("series has zero variance; autocorrelation undefined")
    n = x.size
    vals = np.empty(max_lag + 1)
    vals[0] = 1.0
    for k in range(1, max_lag + 1):
        vals[k] = np.dot(d[: n - k], d[k:]) / denom
    return AcfResult(vals)


@dataclass(frozen=True)
class RollingAcf:
    """Rows are windows, columns lags. Degenerate windows hold NaN and are listed in ``degenerate``."""

    matrix: np.ndarray
    starts: np.ndarray
    window: int
    shift: int
    degenerate: tuple = field(default=())


def rolling_autocorr(series, window: int, shift: int, max_lag: int) -> RollingAcf:
    x = np.asarray(series, dtype=float).ravel()
    if shift < 1:
        raise RangeError(f"shift must be >= 1, got {shift}")
    if not max_lag < window <= x.size:
        raise RangeError(
            f"need max_lag < window <= series length (max_lag={max_lag}, window={window}, length={x.size})")
    rows = (x.size - window) // shift + 1
    starts = np.arange(rows) * shift
    out = np.full((rows, max_lag + 1), np.nan)
    bad = []
    for i, s in enumerate(starts):
        try:
            out[i] = autocorr(x[s:s + window], max_lag).values
        except DegenerateSeriesError:
            bad.append(i)
    if bad:
        log.warning("%d of %d rolling windows have zero variance", len(bad), rows)
    return RollingAcf(out, starts, window, shift, tuple(bad))

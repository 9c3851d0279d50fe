from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigurationError, InsufficientDataError
from ..trace import FrameTrace, forward_means

METHODS = ("ols", "quantile", "huber")


@dataclass(frozen=True)
class PredictorConfig:
    """Linear predictor of the mean of ``T`` frames starting ``tau`` frames ahead from the last ``N`` sizes.

    ``p_s`` is only meaningful for ``method="quantile"`` and ``delta`` (bytes)
    only for ``method="huber"``; ``delta=None`` means "mean |target| / 4".
    """

    N: int = 6
    T: int = 1
    tau: int = 1
    method: str = "ols"
    p_s: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.N < 0:
            raise ConfigurationError(f"N must be >= 0, got {self.N}")
        if self.T < 1:
            raise ConfigurationError(f"T must be >= 1, got {self.T}")
        if self.tau < 1:
            raise ConfigurationError(f"tau must be >= 1, got {self.tau}")
        if self.method == "quantile":
            if self.p_s is None or not 0 < self.p_s < 1:
                raise ConfigurationError(f"quantile method needs 0 < p_s < 1, got {self.p_s!r}")
        elif self.p_s is not None:
            raise ConfigurationError(f"p_s is only valid for the quantile method (method={self.method!r})")
        if self.method == "huber":
            if self.delta is not None and not self.delta > 0:
                raise ConfigurationError(f"huber delta must be > 0, got {self.delta!r}")
        elif self.delta is not None:
            raise ConfigurationError(f"delta is only valid for the huber method (method={self.method!r})")

    @property
    def min_length(self) -> int:
        return self.N + self.tau + self.T

    def with_(self, **changes) -> "PredictorConfig":
        return replace(self, **changes)


def n_rows(length: int, config: PredictorConfig) -> int:
    return length - (config.N - 1) - config.tau - (config.T - 1)


def prediction_times(length: int, config: PredictorConfig) -> np.ndarray:
    """Indices ``t`` of the last observed frame for every dataset row (``t = -1`` when ``N = 0``)."""
    return np.arange(config.N - 1, length - config.tau - config.T + 1)


def history_matrix(sizes: np.ndarray, times: np.ndarray, N: int) -> np.ndarray:
    """Row ``i`` is ``[F(t), F(t-1), ..., F(t-N+1)]`` for ``t = times[i]``."""
    sizes = np.asarray(sizes, dtype=float)
    if N == 0:
        return np.empty((times.size, 0))
    return sizes[times[:, None] - np.arange(N)[None, :]]


def build_dataset(trace: FrameTrace, config: PredictorConfig):
    """Supervised rows ``(features, targets)`` for one trace.

    Rows exist for ``t`` in ``[N-1, len-tau-T]``; the target of row ``t`` is the
    mean of frames ``t+tau .. t+tau+T-1``.
    """
    n = len(trace)
    if n < config.min_length:
        raise InsufficientDataError(
            f"trace of length {n} is too short for N={config.N}, tau={config.tau}, T={config.T} "
            f"(minimum length {config.min_length})")
    times = prediction_times(n, config)
    features = history_matrix(trace.sizes, times, config.N)
    targets = forward_means(trace.sizes, config.T)[times + config.tau]
    return features, targets

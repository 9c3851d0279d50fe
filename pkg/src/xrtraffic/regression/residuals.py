from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError
from ..stats import AcfResult, StepFunction, autocorr, empirical_ccdf
from ..trace import FrameTrace
from .dataset import PredictorConfig, build_dataset, prediction_times
from .model import PredictorModel, fit_model


@dataclass(frozen=True)
class ResidualSeries:
    """Prediction errors ``w = target - prediction`` aligned like :func:`build_dataset` rows."""

    config: PredictorConfig
    values: np.ndarray
    times: np.ndarray
    relative: bool = False

    def __len__(self):
        return self.values.size


def residuals(model: PredictorModel, trace: FrameTrace, config: PredictorConfig | None = None) -> ResidualSeries:
    """Byte residuals of ``model`` on ``trace``.

    ``config`` may change the look-ahead ``tau`` used for evaluation but must
    keep the model's history length ``N`` and averaging horizon ``T``.
    """
    config = model.config if config is None else config
    if config.N != model.config.N:
        raise ConfigurationError(f"model has N={model.config.N} but evaluation asks for N={config.N}")
    if config.T != model.config.T:
        raise ConfigurationError(f"model has T={model.config.T} but evaluation asks for T={config.T}")
    features, targets = build_dataset(trace, config)
    w = targets - model.predict(features, trace.meta)
    return ResidualSeries(config, w, prediction_times(len(trace), config))


def relative_residuals(model: PredictorModel, trace: FrameTrace, config: PredictorConfig | None = None) -> ResidualSeries:
    """Residuals divided by the expected frame size (dimensionless)."""
    res = residuals(model, trace, config)
    return ResidualSeries(res.config, res.values / trace.meta.expected_frame_bytes, res.times, relative=True)


def residual_ccdf(series) -> StepFunction:
    values = series.values if isinstance(series, ResidualSeries) else series
    return empirical_ccdf(values)


def residual_acf(series, max_lag: int) -> AcfResult:
    values = series.values if isinstance(series, ResidualSeries) else series
    return autocorr(values, max_lag)


def residual_std_grid(trace: FrameTrace, method: str, N_set: Sequence[int], tau_set: Sequence[int], T: int = 1,
                      p_s: float | None = None, normalized: bool = True, align: bool = True) -> np.ndarray:
    """Standard deviation (bytes) of in-sample residuals; rows follow ``N_set``, columns ``tau_set``.

    With ``align`` every history length is fitted and evaluated on the same
    prediction times (those available to the largest ``N``), so cells within a
    column compare models on identical rows.
    """
    if not N_set or not tau_set:
        raise ConfigurationError("N and tau grids must be non-empty")
    N_max = max(N_set)
    grid = np.empty((len(N_set), len(tau_set)))
    for i, N in enumerate(N_set):
        tr = trace.slice(N_max - N) if align else trace
        for j, tau in enumerate(tau_set):
            cfg = PredictorConfig(N=N, T=T, tau=tau, method=method, p_s=p_s if method == "quantile" else None)
            model = fit_model(tr, cfg, normalized=normalized)
            grid[i, j] = float(np.std(residuals(model, tr).values))
    return grid

"""Fitted predictors, normalization by the expected frame size, and the model file format."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, MissingMetadataError, ParseError
from ..ingest import format_number
from ..trace import FrameTrace, TraceMeta
from .dataset import PredictorConfig, build_dataset, history_matrix
from .solvers import default_huber_delta, fit_huber, fit_ols, fit_quantile

SCOPES = ("GM", "CM", "CRM")


def normalize(trace: FrameTrace) -> FrameTrace:
    """Sizes in units of the expected frame size (1.0 is exactly on the CBR target)."""
    if trace.meta is None:
        raise MissingMetadataError("trace has no metadata to normalize by")
    return FrameTrace(trace.meta, trace.sizes / trace.meta.expected_frame_bytes)


def denormalize_theta(theta_norm, target_rate: float, frame_rate: float) -> np.ndarray:
    """Byte-domain weights equivalent to weights fitted on normalized sizes.

    Only the intercept carries units, so it scales by the expected frame size
    while the history weights are unchanged; byte predictions then equal the
    normalized predictions times the expected frame size.
    """
    if not (target_rate > 0 and frame_rate > 0):
        raise MissingMetadataError("denormalization needs target_rate > 0 and frame_rate > 0")
    theta = np.array(theta_norm, dtype=float)
    theta[0] *= target_rate / (8.0 * frame_rate)
    return theta


@dataclass(frozen=True)
class PredictorModel:
    config: PredictorConfig
    theta: np.ndarray
    normalized: bool = True
    scope: str = "CRM"
    trained_on: tuple = field(default=())

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "trained_on", tuple(self.trained_on))
        if theta.size != self.config.N + 1:
            raise ConfigurationError(f"theta has {theta.size} entries, expected N+1 = {self.config.N + 1}")
        if self.scope not in SCOPES:
            raise ConfigurationError(f"scope must be one of {SCOPES}, got {self.scope!r}")

    @property
    def N(self) -> int:
        return self.config.N

    def predict(self, features, meta: TraceMeta | None = None) -> np.ndarray:
        """Predictions in bytes for rows of byte-valued histories ``[F(t), ..., F(t-N+1)]``."""
        F = np.asarray(features, dtype=float)
        if F.ndim == 1:
            F = F.reshape(1, -1)
        if F.shape[1] != self.N:
            raise ConfigurationError(f"model expects {self.N} history values per row, got {F.shape[1]}")
        if not self.normalized:
            return self.theta[0] + F @ self.theta[1:]
        if meta is None:
            raise MissingMetadataError("a normalized model needs the trace metadata to predict in bytes")
        scale = meta.expected_frame_bytes
        return scale * (self.theta[0] + (F / scale) @ self.theta[1:])

    def predict_trace(self, trace: FrameTrace, times) -> np.ndarray:
        """Predictions made at the given last-observed frame indices of ``trace``."""
        times = np.asarray(times, dtype=int)
        return self.predict(history_matrix(trace.sizes, times, self.N), trace.meta)

    def byte_theta(self, meta: TraceMeta) -> np.ndarray:
        if not self.normalized:
            return self.theta.copy()
        return denormalize_theta(self.theta, meta.target_rate, meta.frame_rate)


def pooled_dataset(traces: Sequence[FrameTrace], config: PredictorConfig, normalized: bool):
    feats, targs = [], []
    for tr in traces:
        f, t = build_dataset(normalize(tr) if normalized else tr, config)
        feats.append(f)
        targs.append(t)
    return np.vstack(feats), np.concatenate(targs)


def fit_weights(features, targets, config: PredictorConfig):
    """Dispatch to the configured solver. Returns ``(theta, resolved_config)``."""
    if config.method == "ols":
        return fit_ols(features, targets), config
    if config.method == "quantile":
        return fit_quantile(features, targets, config.p_s), config
    delta = config.delta if config.delta is not None else default_huber_delta(targets)
    return fit_huber(features, targets, delta), config.with_(delta=delta)


def fit_model(traces, config: PredictorConfig, normalized: bool = True, scope: str = "CRM") -> PredictorModel:
    """Fit one model on all rows of ``traces`` (a trace or a sequence of traces), pooled."""
    if isinstance(traces, FrameTrace):
        traces = [traces]
    traces = list(traces)
    if not traces:
        raise ConfigurationError("no traces to fit on")
    X, y = pooled_dataset(traces, config, normalized)
    theta, resolved = fit_weights(X, y, config)
    return PredictorModel(resolved, theta, normalized, scope, tuple(tr.meta.source_id for tr in traces))


def split_holdout(trace: FrameTrace, fraction: float):
    """Chronological split: the trailing ``fraction`` of frames is held out for evaluation."""
    if not 0 < fraction < 1:
        raise ConfigurationError(f"holdout fraction must be in (0, 1), got {fraction}")
    cut = int(round(len(trace) * (1.0 - fraction)))
    if cut < 1 or cut >= len(trace):
        raise ConfigurationError(f"holdout fraction {fraction} leaves an empty split for {len(trace)} frames")
    return trace.slice(0, cut), trace.slice(cut)


# --- model files --------------------------------------------------------------

_HEADER_KEYS = ("method", "N", "T", "tau", "p_s", "delta", "scope", "normalized", "trained_on")


def write_model(model: PredictorModel, path) -> None:
    c = model.config
    opt = lambda v: "" if v is None else format_number(v)  # noqa: E731
    lines = [
        f"# method: {c.method}",
        f"# N: {c.N}",
        f"# T: {c.T}",
        f"# tau: {c.tau}",
        f"# p_s: {opt(c.p_s)}",
        f"# delta: {opt(c.delta)}",
        f"# scope: {model.scope}",
        f"# normalized: {'true' if model.normalized else 'false'}",
        f"# trained_on: {';'.join(model.trained_on)}",
    ]
    lines += [repr(float(v)) for v in model.theta]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_model(path) -> PredictorModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header, theta = {}, []
    for lineno, line in enumerate(lines, start=1):
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" not in body:
                raise ParseError(path, lineno, f"malformed header line {line!r}")
            key, value = body.split(":", 1)
            header[key.strip()] = value.strip()
        elif line.strip():
            try:
                theta.append(float(line))
            except ValueError:
                raise ParseError(path, lineno, f"theta value is not a number: {line!r}") from None
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ParseError(path, None, f"missing header field(s): {', '.join(missing)}")

    def num(key, cast):
        text = header[key]
        if text == "":
            return None
        try:
            return cast(text)
        except ValueError:
            raise ParseError(path, None, f"header field {key!r}: bad value {text!r}") from None

    try:
        config = PredictorConfig(N=num("N", int), T=num("T", int), tau=num("tau", int),
                                 method=header["method"], p_s=num("p_s", float), delta=num("delta", float))
        trained = tuple(s for s in header["trained_on"].split(";") if s)
        return PredictorModel(config, np.array(theta), header["normalized"] == "true", header["scope"], trained)
    except (ConfigurationError, TypeError) as exc:
        raise ParseError(path, None, str(exc)) from None

"""Frame-trace data model, forward windowed averaging and a synthetic generator.

Sizes are always bytes. Rates (bits/s) only appear at presentation
boundaries, as ``size * fps * 8``. Frame ``t`` has nominal timestamp ``t / fps``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.signal import lfilter

from .errors import InsufficientDataError, RangeError, StabilityError


@dataclass(frozen=True)
class TraceMeta:
    """Stream metadata.

    ``target_rate`` is the encoder's target bit rate R in bits/s and
    ``frame_rate`` the refresh rate phi in frames/s.
    """

    content_label: str
    target_rate: float
    frame_rate: float
    source_id: str = ""

    def __post_init__(self):
        for name in ("target_rate", "frame_rate"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def expected_frame_bytes(self) -> float:
        """Expected CBR frame size R / phi, converted from bits to bytes."""
        return self.target_rate / (8.0 * self.frame_rate)

    @property
    def frame_interval(self) -> float:
        return 1.0 / self.frame_rate

    def with_rate(self, target_rate: float) -> "TraceMeta":
        return TraceMeta(self.content_label, target_rate, self.frame_rate, self.source_id)


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FrameTrace:
    meta: TraceMeta
    sizes: np.ndarray = field(repr=False)

    def __post_init__(self):
        sizes = _frozen_array(self.sizes)
        if sizes.ndim != 1 or sizes.size < 1:
            raise ValueError("a frame trace needs a 1-D sequence of at least one size")
        if not np.all(np.isfinite(sizes)) or np.any(sizes <= 0):
            bad = int(np.flatnonzero(~(np.isfinite(sizes) & (sizes > 0)))[0])
            raise ValueError(f"frame sizes must be finite and > 0 (frame {bad} is {sizes[bad]!r})")
        object.__setattr__(self, "sizes", sizes)

    def __len__(self) -> int:
        return self.sizes.size

    @property
    def nominal_times(self) -> np.ndarray:
        return np.arange(len(self)) / self.meta.frame_rate

    @property
    def mean_rate(self) -> float:
        """Average video bit rate over the whole trace, bits/s."""
        return float(np.mean(self.sizes)) * self.meta.frame_rate * 8.0

    def slice(self, start: int, stop: int | None = None) -> "FrameTrace":
        return FrameTrace(self.meta, self.sizes[start:stop])

    def __eq__(self, other):
        if not isinstance(other, FrameTrace):
            return NotImplemented
        return self.meta == other.meta and np.array_equal(self.sizes, other.sizes)

    __hash__ = None


@dataclass(frozen=True)
class WindowedSeries:
    values: np.ndarray = field(repr=False)
    window: int
    start_offset: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise RangeError(f"window must be >= 1, got {self.window}")
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __len__(self):
        return self.values.size


def forward_means(sizes: np.ndarray, T: int) -> np.ndarray:
    """``out[t] = mean(sizes[t:t+T])`` for every full window. Trailing partial windows are dropped."""
    sizes = np.asarray(sizes, dtype=float)
    if T == 1:
        return sizes.copy()
    if sizes.size * T <= 4_000_000:
        return np.lib.stride_tricks.sliding_window_view(sizes, T).mean(axis=1)
    # long windows: prefix sums, accurate to ~1e-12 relative for byte-scale sizes
    csum = np.concatenate(([0.0], np.cumsum(sizes)))
    return (csum[T:] - csum[:-T]) / T


def windowed_mean(trace: FrameTrace, T: int) -> WindowedSeries:
    """Average size of the ``T`` frames starting at each index ``t``."""
    n = len(trace)
    if not (1 <= T <= n):
        raise RangeError(f"window T={T} out of range for trace of length {n} (need 1 <= T <= {n})")
    return WindowedSeries(forward_means(trace.sizes, T), window=T, start_offset=0)


def diff_series(trace: FrameTrace) -> np.ndarray:
    """Frame-to-frame size differences, ``out[k] = sizes[k+1] - sizes[k]``."""
    if len(trace) < 2:
        raise InsufficientDataError(f"need at least 2 frames to difference, got {len(trace)}")
    return np.diff(trace.sizes)


def synth_diff_acf1(lag1_coeff: float) -> float:
    """Lag-1 autocorrelation of the frame differences produced by :func:`synth_trace`.

    The size deviation is AR(1) with coefficient ``a``; its first difference has
    autocovariances ``2*g0*(1-a)`` at lag 0 and ``-g0*(1-a)**2`` at lag 1, which
    gives ``-(1 - a) / 2``.
    """
    return -(1.0 - lag1_coeff) / 2.0


def synth_trace(meta: TraceMeta, n_frames: int, noise_std: float = 0.0,
                lag1_coeff: float = 0.0, seed: int = 0) -> FrameTrace:
    """Quasi-CBR synthetic trace.

    ``sizes[t] = R/phi + x[t]`` where ``x`` is a stationary Gaussian AR(1)
    process, ``x[t] = a*x[t-1] + e[t]``, with marginal standard deviation
    ``noise_std`` and ``a = lag1_coeff``. The differenced trace then has
    negative lag-1 autocorrelation ``-(1-a)/2`` (see :func:`synth_diff_acf1`).
    Sizes are clamped to stay strictly positive, which only matters when
    ``noise_std`` is a sizeable fraction of the expected frame size.
    """
    if n_frames < 1:
        raise RangeError(f"n_frames must be >= 1, got {n_frames}")
    if noise_std < 0:
        raise RangeError(f"noise_std must be >= 0, got {noise_std}")
    if not abs(lag1_coeff) < 1:
        raise StabilityError(f"|lag1_coeff| must be < 1 for a stationary process, got {lag1_coeff}")

    expected = meta.expected_frame_bytes
    if noise_std == 0:
        return FrameTrace(meta, np.full(n_frames, expected))

    rng = np.random.default_rng(seed)
    innov = rng.standard_normal(n_frames) * noise_std * math.sqrt(1.0 - lag1_coeff ** 2)
    innov[0] = rng.standard_normal() * noise_std
    dev = lfilter([1.0], [1.0, -lag1_coeff], innov)
    floor = min(1.0, 0.5 * expected)
    return FrameTrace(meta, np.maximum(expected + dev, floor))

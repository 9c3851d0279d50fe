"""Characterization, prediction and slice-provisioning toolkit for quasi-CBR XR video traces."""

__version__ = "0.1.0"

from .errors import XRTrafficError  # noqa: E402
from .trace import FrameTrace, TraceMeta, WindowedSeries, diff_series, synth_trace, windowed_mean  # noqa: E402

__all__ = [
    "__version__", "XRTrafficError", "FrameTrace", "TraceMeta", "WindowedSeries",
    "diff_series", "synth_trace", "windowed_mean",
]
